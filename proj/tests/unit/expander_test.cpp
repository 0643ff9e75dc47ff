#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "exphormer/error.hpp"
#include "exphormer/expander.hpp"
#include "exphormer/spectral.hpp"
#include "support/graphs.hpp"

using namespace exphormer;
using namespace exphormer::testing;

namespace {

bool all_degrees(const MultiGraph& g, std::uint64_t d) {
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (g.degree(v) != d) return false;
  }
  return true;
}

bool is_permutation_of_range(std::vector<NodeId> v, std::size_t n) {
  if (v.size() != n) return false;
  std::sort(v.begin(), v.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (v[i] != i) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("permutation constructions") {
  SUBCASE("a single 6-cycle permutation gives C6") {
    const std::vector<std::vector<NodeId>> perms{{1, 2, 3, 4, 5, 0}};
    CHECK(graph_from_permutations(6, perms) == cycle_graph(6));
  }
  SUBCASE("identity gives a loop at every node") {
    const std::vector<std::vector<NodeId>> perms{{0, 1, 2, 3}};
    auto g = graph_from_permutations(4, perms);
    for (NodeId v = 0; v < 4; ++v) {
      CHECK(g.multiplicity(v, v) == 1);
      CHECK(g.degree(v) == 2);
    }
  }
  SUBCASE("identity slot pairing gives loops") {
    const std::vector<NodeId> perm{0, 1, 2, 3};
    auto g = graph_from_slot_pairing(4, 2, perm);
    for (NodeId v = 0; v < 4; ++v) CHECK(g.multiplicity(v, v) == 1);
  }
  SUBCASE("slot pairing on n=2, d=2 always gives degree 2") {
    for (const std::vector<NodeId>& perm : {std::vector<NodeId>{0, 1}, std::vector<NodeId>{1, 0}}) {
      auto g = graph_from_slot_pairing(2, 2, perm);
      CHECK(g.degree(0) == 2);
      CHECK(g.degree(1) == 2);
    }
  }
  SUBCASE("bad pairings are rejected") {
    const std::vector<NodeId> short_perm{0, 1, 2};
    CHECK_THROWS_AS(graph_from_slot_pairing(4, 2, short_perm), std::invalid_argument);
    const std::vector<std::vector<NodeId>> wrong_len{{0, 1}};
    CHECK_THROWS_AS(graph_from_permutations(3, wrong_len), std::invalid_argument);
  }
}

TEST_CASE("generators are d-regular before stripping") {
  CHECK(all_degrees(gen_standard(256, 6, 7), 6));
  CHECK(all_degrees(gen_simple_variant(128, 6, 3), 6));
  auto h = gen_hamiltonian(64, 4, 11);
  CHECK(all_degrees(h.graph, 4));
  for (std::size_t n : {3, 5, 9, 40}) {
    for (std::size_t d = 2; d < n && d <= 10; d += 2) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        CHECK(all_degrees(gen_standard(n, d, seed), d));
        CHECK(all_degrees(gen_simple_variant(n, d, seed), d));
        CHECK(all_degrees(gen_hamiltonian(n, d, seed).graph, d));
      }
    }
  }
}

TEST_CASE("generators reject invalid degree") {
  CHECK_THROWS_AS(gen_standard(10, 3, 0), std::invalid_argument);
  CHECK_THROWS_AS(gen_standard(6, 6, 0), std::invalid_argument);
  CHECK_THROWS_AS(gen_simple_variant(10, 5, 0), std::invalid_argument);
  CHECK_THROWS_AS(gen_simple_variant(4, 4, 0), std::invalid_argument);
  CHECK_THROWS_AS(gen_hamiltonian(8, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(gen_hamiltonian(4, 4, 0), std::invalid_argument);
}

TEST_CASE("generators are deterministic") {
  CHECK(gen_standard(100, 6, 42) == gen_standard(100, 6, 42));
  CHECK(gen_simple_variant(100, 6, 42) == gen_simple_variant(100, 6, 42));
  CHECK(gen_hamiltonian(100, 6, 42).graph == gen_hamiltonian(100, 6, 42).graph);
  CHECK_FALSE(gen_standard(100, 6, 42) == gen_standard(100, 6, 43));
}

TEST_CASE("Hamiltonian variant") {
  SUBCASE("n=3, d=2 is the triangle") { CHECK(gen_hamiltonian(3, 2, 9).graph == complete_graph(3)); }
  SUBCASE("n=5, d=2 is a 5-cycle with diameter 2") {
    auto h = gen_hamiltonian(5, 2, 1);
    CHECK(is_connected(h.graph));
    CHECK(diameter(h.graph) == std::optional<std::uint32_t>(2));
    CHECK(h.graph.num_distinct_edges() == 5);
  }
  SUBCASE("n=64, d=4 certificate lists two valid cycles") {
    auto h = gen_hamiltonian(64, 4, 11);
    REQUIRE(h.certificate.hamiltonian_cycles.has_value());
    const auto& cycles = *h.certificate.hamiltonian_cycles;
    CHECK(cycles.size() == 2);
    for (const auto& c : cycles) {
      CHECK(is_permutation_of_range(c, 64));
      for (std::size_t i = 0; i < c.size(); ++i) CHECK(h.graph.multiplicity(c[i], c[(i + 1) % c.size()]) >= 1);
    }
    CHECK(certificate_cycles_valid(h.certificate, h.graph));
  }
  SUBCASE("random_hamiltonian_cycle is a single cycle through every node") {
    Rng rng(3);
    for (std::size_t n : {3, 4, 17}) {
      auto c = random_hamiltonian_cycle(n, rng);
      CHECK(c.front() == 0);
      CHECK(is_permutation_of_range(c, n));
      auto succ = cycle_to_permutation(c);
      NodeId v = 0;
      std::size_t steps = 0;
      do {
        v = succ[v];
        ++steps;
      } while (v != 0 && steps <= n);
      CHECK(steps == n);
    }
  }
  SUBCASE("certificate validation catches a broken cycle") {
    auto h = gen_hamiltonian(20, 4, 5);
    auto cert = h.certificate;
    CHECK(certificate_cycles_valid(cert, h.graph));
    (*cert.hamiltonian_cycles)[0][3] = (*cert.hamiltonian_cycles)[0][4];
    CHECK_FALSE(certificate_cycles_valid(cert, h.graph));
    CHECK_FALSE(certificate_cycles_valid(cert, edgeless_graph(20)));
  }
}

TEST_CASE("single-cycle sampling is uniform over the 6 cycles on 4 nodes") {
  Rng rng(2024);
  std::map<std::vector<NodeId>, int> counts;
  const int draws = 6000;
  for (int i = 0; i < draws; ++i) ++counts[random_hamiltonian_cycle(4, rng)];
  CHECK(counts.size() == 6);
  for (const auto& [cycle, count] : counts) CHECK(std::abs(count - draws / 6) < 150);
}

TEST_CASE("ExpanderConfig validation") {
  ExpanderConfig cfg{.n = 10, .d = 4};
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.resolved_slack() == doctest::Approx(0.4));
  CHECK(cfg.threshold() == doctest::Approx(2.0 * std::sqrt(3.0) + 0.4));
  auto bad = cfg;
  bad.d = 3;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.d = 10;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.slack = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.max_retries = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.n = 2;
  bad.d = 2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("variant names") {
  for (auto v : {ExpanderVariant::Standard, ExpanderVariant::SimpleVariant, ExpanderVariant::HamiltonianCycle}) {
    CHECK(parse_variant(to_string(v)) == v);
  }
  CHECK_THROWS_AS(parse_variant("lps"), std::invalid_argument);
}

TEST_CASE("generate_verified") {
  SUBCASE("n=256, d=6 Standard accepts within 3 draws") {
    ExpanderConfig cfg{.n = 256, .d = 6, .variant = ExpanderVariant::Standard, .seed = 1};
    auto out = generate_verified(cfg);
    CHECK(out.certificate.passed_spectral);
    CHECK(out.certificate.retries < 3);
    CHECK(out.certificate.achieved_bound <= 2.0 * std::sqrt(5.0) + 0.6);
    CHECK_FALSE(out.graph.has_self_loops());
    CHECK_FALSE(out.certificate.hamiltonian_cycles.has_value());
  }
  SUBCASE("acceptance is sound on the pre-strip graph") {
    for (auto variant : {ExpanderVariant::Standard, ExpanderVariant::SimpleVariant, ExpanderVariant::HamiltonianCycle}) {
      ExpanderConfig cfg{.n = 64, .d = 4, .variant = variant, .seed = 8, .strip_self_loops = false};
      auto out = generate_verified(cfg);
      CHECK(out.graph.regular_degree() == std::optional<std::uint64_t>(4));
      auto check = is_near_ramanujan(out.graph, cfg.resolved_slack());
      CHECK(check.passed);
      CHECK(check.achieved_bound == doctest::Approx(out.certificate.achieved_bound).epsilon(1e-9));
      CHECK(out.certificate.hamiltonian_cycles.has_value() == (variant == ExpanderVariant::HamiltonianCycle));
    }
  }
  SUBCASE("stripping removes only loops") {
    ExpanderConfig cfg{.n = 10, .d = 4, .seed = 3};
    auto kept = cfg;
    kept.strip_self_loops = false;
    auto a = generate_verified(cfg);
    auto b = generate_verified(kept);
    CHECK(a.graph == b.graph.without_self_loops());
    CHECK(a.certificate.achieved_bound == b.certificate.achieved_bound);
  }
  SUBCASE("C4 passes with zero slack") {
    // Every single-cycle draw on 4 nodes is C4, spectrum {2, 0, 0, -2}.
    ExpanderConfig cfg{.n = 4, .d = 2, .variant = ExpanderVariant::HamiltonianCycle, .seed = 0, .slack = 0.0};
    auto out = generate_verified(cfg);
    CHECK(out.certificate.retries == 0);
    CHECK(out.certificate.achieved_bound == doctest::Approx(2.0));
  }
  SUBCASE("deterministic") {
    ExpanderConfig cfg{.n = 50, .d = 6, .variant = ExpanderVariant::SimpleVariant, .seed = 77};
    auto a = generate_verified(cfg);
    auto b = generate_verified(cfg);
    CHECK(a.graph == b.graph);
    CHECK(a.certificate == b.certificate);
  }
}

TEST_CASE("retry loop agrees with a replay of the seeded stream") {
  // n=5, d=4 Standard draws are often disconnected (l2 = 4 > 2 sqrt(3)), so
  // both outcomes occur across seeds. Replaying the stream predicts each.
  int exhausted = 0;
  int accepted = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    ExpanderConfig cfg{.n = 5, .d = 4, .variant = ExpanderVariant::Standard, .seed = seed, .slack = 0.0,
                       .max_retries = 2, .strip_self_loops = false};
    Rng rng(seed);
    double best = std::numeric_limits<double>::infinity();
    std::optional<std::size_t> first_pass;
    for (std::size_t i = 0; i < cfg.max_retries && !first_pass; ++i) {
      auto check = is_near_ramanujan(draw_expander(5, 4, ExpanderVariant::Standard, rng), 0.0);
      best = std::min(best, check.achieved_bound);
      if (check.passed) first_pass = i;
    }
    if (first_pass) {
      ++accepted;
      CHECK(generate_verified(cfg).certificate.retries == *first_pass);
    } else {
      ++exhausted;
      try {
        generate_verified(cfg);
        FAIL("expected RetriesExhausted");
      } catch (const RetriesExhausted& e) {
        CHECK(e.attempts() == 2);
        CHECK(e.best_bound() == doctest::Approx(best).epsilon(1e-12));
        CHECK(e.threshold() == doctest::Approx(2.0 * std::sqrt(3.0)));
      }
    }
  }
  CHECK(exhausted > 0);
  CHECK(accepted > 0);
}

TEST_CASE("certificate text round trip") {
  auto h = gen_hamiltonian(12, 4, 99);
  h.certificate.slack = 0.1 * 4 + 1e-17;
  h.certificate.achieved_bound = 3.1415926535897931;
  std::stringstream ss;
  write_certificate(ss, h.certificate);
  CHECK(read_certificate(ss) == h.certificate);

  ExpanderConfig cfg{.n = 30, .d = 4, .seed = 2};
  auto out = generate_verified(cfg);
  std::stringstream ss2;
  write_certificate(ss2, out.certificate);
  CHECK(read_certificate(ss2) == out.certificate);
}

TEST_CASE("certificate reader rejects malformed files") {
  std::istringstream unknown("variant=standard\nbogus=1\n");
  CHECK_THROWS_AS(read_certificate(unknown), ParseError);
  std::istringstream missing("variant=standard\n");
  CHECK_THROWS_AS(read_certificate(missing), ParseError);

  auto h = gen_hamiltonian(6, 2, 1);
  std::stringstream ss;
  write_certificate(ss, h.certificate);
  std::string text = ss.str();
  std::istringstream dup(text + "seed=4\n");
  CHECK_THROWS_AS(read_certificate(dup), ParseError);
}
