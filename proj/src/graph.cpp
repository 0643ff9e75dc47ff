#include "exphormer/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "exphormer/error.hpp"

namespace exphormer {

MultiGraph MultiGraph::from_edge_list(std::size_t n, std::span<const Edge> edges) {
  if (n == 0) throw std::invalid_argument("graph must have at least one node");
  if (n > std::numeric_limits<NodeId>::max()) throw std::invalid_argument("node count too large");

  // Directed half-edges; a loop contributes a single entry.
  std::vector<std::pair<NodeId, Neighbor>> half;
  half.reserve(edges.size() * 2);
  for (const Edge& e : edges) {
    if (e.u >= n || e.v >= n) {
      throw std::invalid_argument("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                                  ") has endpoint >= n=" + std::to_string(n));
    }
    if (e.multiplicity == 0) throw std::invalid_argument("edge multiplicity must be >= 1");
    half.push_back({e.u, Neighbor{e.v, e.multiplicity}});
    if (e.u != e.v) half.push_back({e.v, Neighbor{e.u, e.multiplicity}});
  }
  std::sort(half.begin(), half.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second.node < b.second.node;
  });

  MultiGraph g;
  g.offsets_.assign(n + 1, 0);
  g.degrees_.assign(n, 0);
  std::size_t i = 0;
  for (std::size_t v = 0; v < n; ++v) {
    g.offsets_[v] = g.entries_.size();
    for (; i < half.size() && half[i].first == v; ++i) {
      const Neighbor nb = half[i].second;
      if (g.entries_.size() > g.offsets_[v] && g.entries_.back().node == nb.node) {
        g.entries_.back().multiplicity += nb.multiplicity;
      } else {
        g.entries_.push_back(nb);
      }
      g.degrees_[v] += (nb.node == v ? 2ULL : 1ULL) * nb.multiplicity;
    }
  }
  g.offsets_[n] = g.entries_.size();
  for (auto d : g.degrees_) g.total_endpoints_ += d;
  return g;
}

std::span<const Neighbor> MultiGraph::neighbors(NodeId v) const {
  if (v >= num_nodes()) throw std::out_of_range("node " + std::to_string(v) + " out of range");
  return {entries_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
}

std::uint64_t MultiGraph::degree(NodeId v) const {
  if (v >= num_nodes()) throw std::out_of_range("node " + std::to_string(v) + " out of range");
  return degrees_[v];
}

std::uint64_t MultiGraph::max_degree() const noexcept {
  return degrees_.empty() ? 0 : *std::max_element(degrees_.begin(), degrees_.end());
}

std::uint32_t MultiGraph::multiplicity(NodeId u, NodeId v) const {
  auto nbrs = neighbors(u);
  if (v >= num_nodes()) throw std::out_of_range("node " + std::to_string(v) + " out of range");
  auto it = std::lower_bound(nbrs.begin(), nbrs.end(), v,
                             [](const Neighbor& a, NodeId id) { return a.node < id; });
  return (it != nbrs.end() && it->node == v) ? it->multiplicity : 0;
}

std::uint64_t MultiGraph::adjacency(NodeId u, NodeId v) const {
  const std::uint64_t m = multiplicity(u, v);
  return u == v ? 2 * m : m;
}

std::vector<Edge> MultiGraph::edges() const {
  std::vector<Edge> out;
  for (NodeId u = 0; u < num_nodes(); ++u) {
    for (const Neighbor& nb : neighbors(u)) {
      if (nb.node >= u) out.push_back({u, nb.node, nb.multiplicity});
    }
  }
  return out;
}

std::size_t MultiGraph::num_distinct_edges() const noexcept {
  std::size_t loops = 0;
  for (NodeId u = 0; u < num_nodes(); ++u) {
    for (const Neighbor& nb : neighbors(u)) loops += nb.node == u;
  }
  return (entries_.size() - loops) / 2 + loops;
}

std::optional<std::uint64_t> MultiGraph::regular_degree() const noexcept {
  if (degrees_.empty()) return std::nullopt;
  const auto d = degrees_.front();
  for (auto x : degrees_) {
    if (x != d) return std::nullopt;
  }
  return d;
}

bool MultiGraph::has_self_loops() const noexcept {
  for (NodeId u = 0; u < num_nodes(); ++u) {
    for (const Neighbor& nb : neighbors(u)) {
      if (nb.node == u) return true;
    }
  }
  return false;
}

MultiGraph MultiGraph::without_self_loops() const {
  std::vector<Edge> kept;
  for (const Edge& e : edges()) {
    if (e.u != e.v) kept.push_back(e);
  }
  return from_edge_list(num_nodes(), kept);
}

std::vector<std::uint32_t> bfs_distances(const MultiGraph& g, NodeId source) {
  if (source >= g.num_nodes()) throw std::out_of_range("BFS source out of range");
  std::vector<std::uint32_t> dist(g.num_nodes(), kUnreachable);
  std::vector<NodeId> frontier{source};
  dist[source] = 0;
  for (std::size_t head = 0; head < frontier.size(); ++head) {
    const NodeId u = frontier[head];
    for (const Neighbor& nb : g.neighbors(u)) {
      if (dist[nb.node] == kUnreachable) {
        dist[nb.node] = dist[u] + 1;
        frontier.push_back(nb.node);
      }
    }
  }
  return dist;
}

std::optional<std::uint32_t> diameter(const MultiGraph& g) {
  std::uint32_t best = 0;
  for (NodeId s = 0; s < g.num_nodes(); ++s) {
    for (auto d : bfs_distances(g, s)) {
      if (d == kUnreachable) return std::nullopt;
      best = std::max(best, d);
    }
  }
  return best;
}

bool is_connected(const MultiGraph& g) {
  const auto dist = bfs_distances(g, 0);
  return std::none_of(dist.begin(), dist.end(), [](auto d) { return d == kUnreachable; });
}

WalkDistribution::WalkDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("empty distribution");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("distribution entry must be finite and >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("distribution does not sum to 1");
}

WalkDistribution WalkDistribution::point_mass(std::size_t n, NodeId v) {
  if (v >= n) throw std::out_of_range("point mass outside node range");
  std::vector<double> p(n, 0.0);
  p[v] = 1.0;
  return WalkDistribution(std::move(p));
}

WalkDistribution WalkDistribution::uniform(std::size_t n) {
  return WalkDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)), Unchecked{});
}

double WalkDistribution::distance_to_uniform() const noexcept {
  const double u = 1.0 / static_cast<double>(probs_.size());
  double total = 0.0;
  for (double p : probs_) total += std::abs(p - u);
  return total;
}

WalkDistribution walk_step(const MultiGraph& g, const WalkDistribution& dist) {
  const std::size_t n = g.num_nodes();
  if (dist.size() != n) throw std::invalid_argument("distribution size does not match graph");
  std::vector<double> next(n, 0.0);
  for (NodeId u = 0; u < n; ++u) {
    const auto deg = g.degree(u);
    if (deg == 0) throw std::invalid_argument("walk_step: node " + std::to_string(u) + " is isolated");
    const double share = dist[u] / static_cast<double>(deg);
    if (share == 0.0) continue;
    for (const Neighbor& nb : g.neighbors(u)) {
      const double weight = nb.node == u ? 2.0 * nb.multiplicity : nb.multiplicity;
      next[nb.node] += share * weight;
    }
  }
  return WalkDistribution(std::move(next), WalkDistribution::Unchecked{});
}

void write_edge_list(std::ostream& out, const MultiGraph& g) {
  const auto edges = g.edges();
  out << g.num_nodes() << ' ' << edges.size() << '\n';
  for (const Edge& e : edges) out << e.u << ' ' << e.v << ' ' << e.multiplicity << '\n';
}

namespace {

bool next_content_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

}  // namespace

MultiGraph read_edge_list(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_content_line(in, line, line_no)) throw ParseError("missing header 'n m'", line_no);
  long long n = -1;
  long long m = -1;
  {
    std::istringstream hs(line);
    std::string extra;
    if (!(hs >> n >> m) || (hs >> extra) || n <= 0 || m < 0) {
      throw ParseError("expected header 'n m' with n > 0, m >= 0", line_no);
    }
  }
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(m));
  for (long long i = 0; i < m; ++i) {
    if (!next_content_line(in, line, line_no)) {
      throw ParseError("expected " + std::to_string(m) + " edges, found " + std::to_string(i), line_no);
    }
    std::istringstream ls(line);
    long long u = -1, v = -1, mult = -1;
    std::string extra;
    if (!(ls >> u >> v >> mult) || (ls >> extra)) throw ParseError("expected 'u v mult'", line_no);
    if (u < 0 || v < 0 || u >= n || v >= n) throw ParseError("endpoint out of range", line_no);
    if (mult < 1 || mult > std::numeric_limits<std::uint32_t>::max()) {
      throw ParseError("multiplicity must be >= 1", line_no);
    }
    edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v), static_cast<std::uint32_t>(mult)});
  }
  if (next_content_line(in, line, line_no)) throw ParseError("trailing content after edge list", line_no);
  return MultiGraph::from_edge_list(static_cast<std::size_t>(n), edges);
}

}  // namespace exphormer
