#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "exphormer/graph.hpp"
#include "exphormer/rng.hpp"
#include "support/graphs.hpp"

using namespace exphormer;
using namespace exphormer::testing;

namespace {

std::vector<Edge> random_edges(Rng& rng, std::size_t n, std::size_t m) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < m; ++i) {
    edges.push_back({static_cast<NodeId>(rng.below(n)), static_cast<NodeId>(rng.below(n)),
                     static_cast<std::uint32_t>(1 + rng.below(3))});
  }
  return edges;
}

// All-pairs shortest hops by Floyd-Warshall over the adjacency relation.
std::vector<std::vector<std::uint32_t>> floyd_warshall(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::vector<std::uint32_t>> d(n, std::vector<std::uint32_t>(n, kUnreachable));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (const Edge& e : edges) {
    if (e.u != e.v) d[e.u][e.v] = d[e.v][e.u] = 1;
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (d[i][k] != kUnreachable && d[k][j] != kUnreachable && d[i][k] + d[k][j] < d[i][j]) {
          d[i][j] = d[i][k] + d[k][j];
        }
      }
    }
  }
  return d;
}

double mass(const WalkDistribution& w) {
  auto p = w.probs();
  return std::accumulate(p.begin(), p.end(), 0.0);
}

}  // namespace

TEST_CASE("from_edge_list builds symmetric adjacency") {
  SUBCASE("single edge") {
    const std::vector<Edge> e{{0, 1, 1}};
    auto g = MultiGraph::from_edge_list(2, e);
    CHECK(g.degree(0) == 1);
    CHECK(g.degree(1) == 1);
  }
  SUBCASE("C4 is 2-regular") {
    auto g = cycle_graph(4);
    CHECK(g.regular_degree() == std::optional<std::uint64_t>(2));
    CHECK(g.total_edge_endpoints() == 8);
  }
  SUBCASE("duplicates accumulate") {
    const std::vector<Edge> e{{0, 1, 1}, {0, 1, 1}};
    auto g = MultiGraph::from_edge_list(3, e);
    CHECK(g.multiplicity(0, 1) == 2);
    CHECK(g.multiplicity(1, 0) == 2);
    CHECK(g.degree(0) == 2);
    CHECK(g.degree(2) == 0);
  }
  SUBCASE("reverse orientation accumulates too") {
    const std::vector<Edge> e{{0, 1, 2}, {1, 0, 3}};
    auto g = MultiGraph::from_edge_list(2, e);
    CHECK(g.multiplicity(0, 1) == 5);
  }
}

TEST_CASE("from_edge_list rejects bad input") {
  const std::vector<Edge> out_of_range{{0, 3, 1}};
  const std::vector<Edge> zero_mult{{0, 1, 0}};
  CHECK_THROWS_AS(MultiGraph::from_edge_list(0, {}), std::invalid_argument);
  CHECK_THROWS_AS(MultiGraph::from_edge_list(3, out_of_range), std::invalid_argument);
  CHECK_THROWS_AS(MultiGraph::from_edge_list(2, zero_mult), std::invalid_argument);
}

TEST_CASE("self-loops count twice toward degree") {
  const std::vector<Edge> e{{0, 0, 1}, {0, 1, 1}};
  auto g = MultiGraph::from_edge_list(2, e);
  CHECK(g.degree(0) == 3);
  CHECK(g.adjacency(0, 0) == 2);
  CHECK(g.multiplicity(0, 0) == 1);
  CHECK(g.has_self_loops());
  auto stripped = g.without_self_loops();
  CHECK_FALSE(stripped.has_self_loops());
  CHECK(stripped.degree(0) == 1);
}

TEST_CASE("degree") {
  auto k4 = complete_graph(4);
  for (NodeId v = 0; v < 4; ++v) CHECK(k4.degree(v) == 3);
  auto c4 = cycle_graph(4);
  for (NodeId v = 0; v < 4; ++v) CHECK(c4.degree(v) == 2);
  CHECK_THROWS_AS(c4.degree(4), std::out_of_range);
}

TEST_CASE("symmetry and endpoint count on random edge lists") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    auto edges = random_edges(rng, n, rng.below(30));
    auto g = MultiGraph::from_edge_list(n, edges);

    std::map<std::pair<NodeId, NodeId>, std::uint64_t> oracle;
    std::uint64_t endpoints = 0;
    for (const Edge& e : edges) {
      oracle[{std::min(e.u, e.v), std::max(e.u, e.v)}] += e.multiplicity;
      endpoints += 2ULL * e.multiplicity;
    }
    CHECK(g.total_edge_endpoints() == endpoints);
    std::uint64_t degree_sum = 0;
    for (NodeId u = 0; u < n; ++u) {
      degree_sum += g.degree(u);
      auto nb = g.neighbors(u);
      for (std::size_t i = 1; i < nb.size(); ++i) CHECK(nb[i - 1].node < nb[i].node);
      for (NodeId v = 0; v < n; ++v) {
        CHECK(g.multiplicity(u, v) == g.multiplicity(v, u));
        auto it = oracle.find({std::min(u, v), std::max(u, v)});
        CHECK(g.multiplicity(u, v) == (it == oracle.end() ? 0 : it->second));
      }
    }
    CHECK(degree_sum == endpoints);
  }
}

TEST_CASE("bfs_distances") {
  CHECK(bfs_distances(cycle_graph(4), 0) == std::vector<std::uint32_t>{0, 1, 2, 1});
  CHECK(bfs_distances(complete_graph(4), 0) == std::vector<std::uint32_t>{0, 1, 1, 1});
  const std::vector<Edge> two{{0, 1, 1}, {2, 3, 1}};
  auto split = MultiGraph::from_edge_list(4, two);
  CHECK(bfs_distances(split, 0) == std::vector<std::uint32_t>{0, 1, kUnreachable, kUnreachable});
  CHECK_THROWS_AS(bfs_distances(split, 4), std::out_of_range);
}

TEST_CASE("bfs_distances matches Floyd-Warshall on small graphs") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    auto edges = random_edges(rng, n, rng.below(14));
    auto g = MultiGraph::from_edge_list(n, edges);
    auto oracle = floyd_warshall(n, edges);
    for (NodeId s = 0; s < n; ++s) CHECK(bfs_distances(g, s) == oracle[s]);
  }
}

TEST_CASE("diameter") {
  CHECK(diameter(petersen_graph()) == std::optional<std::uint32_t>(2));
  CHECK(diameter(cycle_graph(8)) == std::optional<std::uint32_t>(4));
  CHECK(diameter(path_graph(5)) == std::optional<std::uint32_t>(4));
  CHECK(diameter(edgeless_graph(1)) == std::optional<std::uint32_t>(0));
  CHECK_FALSE(diameter(edgeless_graph(2)).has_value());
  CHECK_FALSE(is_connected(edgeless_graph(3)));
  CHECK(is_connected(petersen_graph()));
}

TEST_CASE("walk_step") {
  auto c4 = cycle_graph(4);
  auto w1 = walk_step(c4, WalkDistribution::point_mass(4, 0));
  CHECK(w1[0] == 0.0);
  CHECK(w1[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w1[2] == 0.0);
  CHECK(w1[3] == doctest::Approx(0.5).epsilon(1e-15));

  auto w2 = walk_step(c4, w1);
  CHECK(w2[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w2[1] == 0.0);
  CHECK(w2[2] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w2[3] == 0.0);

  auto k4 = complete_graph(4);
  auto u = walk_step(k4, WalkDistribution::uniform(4));
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(u[i] - 0.25) <= 1e-12);
}

TEST_CASE("walk_step uses multiplicity-weighted transitions") {
  // D^{-1}A by hand: node 0 has a double edge to 1 and a single edge to 2.
  const std::vector<Edge> e{{0, 1, 2}, {0, 2, 1}, {1, 2, 1}};
  auto g = MultiGraph::from_edge_list(3, e);
  auto w = walk_step(g, WalkDistribution::point_mass(3, 0));
  CHECK(w[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(w[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  // A loop keeps 2 of degree 4 at the node.
  const std::vector<Edge> loop{{0, 0, 1}, {0, 1, 2}};
  auto gl = MultiGraph::from_edge_list(2, loop);
  auto wl = walk_step(gl, WalkDistribution::point_mass(2, 0));
  CHECK(wl[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(wl[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("walk_step rejects isolated nodes") {
  const std::vector<Edge> e{{0, 1, 1}};
  auto g = MultiGraph::from_edge_list(3, e);
  CHECK_THROWS_AS(walk_step(g, WalkDistribution::point_mass(3, 0)), std::invalid_argument);
}

TEST_CASE("walk conserves mass over 1000 steps") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 3 + rng.below(20);
    auto edges = random_edges(rng, n, 3 * n);
    for (NodeId v = 0; v < n; ++v) edges.push_back({v, static_cast<NodeId>((v + 1) % n), 1});
    auto g = MultiGraph::from_edge_list(n, edges);
    auto w = WalkDistribution::point_mass(n, static_cast<NodeId>(rng.below(n)));
    for (int t = 0; t < 1000; ++t) w = walk_step(g, w);
    CHECK(std::abs(mass(w) - 1.0) <= 1e-12);
  }
}

TEST_CASE("uniform is stationary on connected regular graphs") {
  for (const auto& g : {complete_graph(7), cycle_graph(9), petersen_graph()}) {
    auto w = walk_step(g, WalkDistribution::uniform(g.num_nodes()));
    const double u = 1.0 / static_cast<double>(g.num_nodes());
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(w[i] - u) <= 1e-12);
  }
}

TEST_CASE("WalkDistribution validates") {
  CHECK_THROWS_AS(WalkDistribution(std::vector<double>{0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(WalkDistribution(std::vector<double>{1.5, -0.5}), std::invalid_argument);
  CHECK(WalkDistribution::point_mass(4, 0).distance_to_uniform() == doctest::Approx(1.5));
}

TEST_CASE("edge list text round trip") {
  const std::vector<Edge> e{{0, 1, 2}, {2, 2, 1}, {1, 3, 1}};
  auto g = MultiGraph::from_edge_list(4, e);
  std::stringstream ss;
  write_edge_list(ss, g);
  CHECK(read_edge_list(ss) == g);
}

TEST_CASE("edge list reader rejects malformed input") {
  std::istringstream short_file("3 2\n0 1 1\n");
  CHECK_THROWS(read_edge_list(short_file));
  std::istringstream bad_node("2 1\n0 5 1\n");
  CHECK_THROWS(read_edge_list(bad_node));
  std::istringstream garbage("x y\n");
  CHECK_THROWS(read_edge_list(garbage));
}
