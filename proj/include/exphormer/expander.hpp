#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "exphormer/graph.hpp"
#include "exphormer/rng.hpp"

namespace exphormer {

enum class ExpanderVariant {
  Standard,          // d/2 independent uniform permutations
  SimpleVariant,     // one uniform permutation of n*d/2 slots
  HamiltonianCycle,  // d/2 independent uniform single-cycle permutations
};

std::string_view to_string(ExpanderVariant v);
ExpanderVariant parse_variant(std::string_view name);  // standard|simple|hamiltonian

struct ExpanderConfig {
  std::size_t n = 0;
  std::size_t d = 0;
  ExpanderVariant variant = ExpanderVariant::Standard;
  std::uint64_t seed = 0;
  std::optional<double> slack;  // additive; nullopt means 0.1 * d
  std::size_t max_retries = 20;
  bool strip_self_loops = true;

  double resolved_slack() const { return slack.value_or(0.1 * static_cast<double>(d)); }
  double threshold() const;  // 2 sqrt(d-1) + slack

  // Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

struct GenerationCertificate {
  ExpanderVariant variant = ExpanderVariant::Standard;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t d = 0;
  double slack = 0.0;
  std::size_t retries = 0;  // rejected draws before the accepted one
  bool strip_self_loops = true;
  bool passed_spectral = false;
  double achieved_bound = 0.0;  // max{|l2|,|ln|} of the accepted pre-strip graph
  // Node orderings; cycle[k] -> cycle[k+1 mod n]. HamiltonianCycle only.
  std::optional<std::vector<std::vector<NodeId>>> hamiltonian_cycles;

  friend bool operator==(const GenerationCertificate&, const GenerationCertificate&) = default;
};

struct GeneratedExpander {
  MultiGraph graph;
  GenerationCertificate certificate;
};

// Union over permutations p of the undirected edges {i, p[i]}. Each
// permutation adds degree 2 to every node (a fixed point is a self-loop).
MultiGraph graph_from_permutations(std::size_t n, std::span<const std::vector<NodeId>> perms);

// Simple-variant pairing: slot k belongs to node k / (d/2); slot k is joined to
// slot perm[k]. perm must be a permutation of n*d/2 slots.
MultiGraph graph_from_slot_pairing(std::size_t n, std::size_t d, std::span<const NodeId> perm);

// Uniform over the (n-1)! single-cycle permutations: a uniform ordering of
// nodes 1..n-1 closed through node 0. Returns the cycle as a node ordering
// starting at 0.
std::vector<NodeId> random_hamiltonian_cycle(std::size_t n, Rng& rng);

// Successor map of a cycle ordering.
std::vector<NodeId> cycle_to_permutation(std::span<const NodeId> cycle);

MultiGraph gen_standard(std::size_t n, std::size_t d, std::uint64_t seed);
MultiGraph gen_simple_variant(std::size_t n, std::size_t d, std::uint64_t seed);
GeneratedExpander gen_hamiltonian(std::size_t n, std::size_t d, std::uint64_t seed);

// Draw from an existing stream (used by the retry loop). For the Hamiltonian
// variant `cycles` receives the drawn orderings.
MultiGraph draw_expander(std::size_t n, std::size_t d, ExpanderVariant variant, Rng& rng,
                         std::vector<std::vector<NodeId>>* cycles = nullptr);

// Draws candidates from the stream seeded by cfg.seed until one passes the
// near-Ramanujan test, then optionally strips self-loops. Throws
// RetriesExhausted after cfg.max_retries draws.
GeneratedExpander generate_verified(const ExpanderConfig& cfg);

// True when every recorded cycle is a permutation of 0..n-1 whose consecutive
// pairs (with wraparound) are edges of g.
bool certificate_cycles_valid(const GenerationCertificate& cert, const MultiGraph& g);

// Line-oriented key=value sidecar; doubles are written with enough digits
// to round-trip, cycles as "cycle.K=v0 v1 ...".
void write_certificate(std::ostream& out, const GenerationCertificate& cert);
GenerationCertificate read_certificate(std::istream& in);

}  // namespace exphormer
