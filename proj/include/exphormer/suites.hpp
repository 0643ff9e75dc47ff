#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "exphormer/attention.hpp"
#include "exphormer/expander.hpp"
#include "exphormer/graph.hpp"
#include "exphormer/pattern.hpp"
#include "exphormer/rng.hpp"
#include "exphormer/spectral.hpp"

namespace exphormer {

// Executable property suites. Each returns a verdict plus the measured
// quantities behind it, so the same code backs the acceptance binary and
// `exphormer check --suite`.

struct SuiteResult {
  int criterion = 0;
  std::string name;
  bool passed = false;
  std::vector<std::pair<std::string, std::string>> metrics;
  double seconds = 0.0;

  void add(std::string key, std::string value) { metrics.emplace_back(std::move(key), std::move(value)); }
  void add(std::string key, double value);
  void add(std::string key, std::size_t value) { add(std::move(key), std::to_string(value)); }
};

// Quick mode shrinks sample sizes and graph orders so a suite finishes in a
// few seconds; the default sizes are the acceptance sizes.
struct SuiteOptions {
  bool quick = false;
  std::uint64_t seed = 2024;
};

struct DrawRecord {
  ExpanderVariant variant = ExpanderVariant::Standard;
  std::size_t n = 0;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  RamanujanCheck check;
  MultiGraph graph;  // kept for accepted draws only
};

// Raw (unverified) draws over every variant, n and d of the sweep.
std::vector<DrawRecord> ramanujan_draws(const SuiteOptions& opts);

SuiteResult suite_near_ramanujan(const std::vector<DrawRecord>& draws, const SuiteOptions& opts);
SuiteResult suite_mixing(const std::vector<DrawRecord>& draws, const SuiteOptions& opts);
SuiteResult suite_diameter(const SuiteOptions& opts);
SuiteResult suite_oracle(const SuiteOptions& opts);
SuiteResult suite_gradcheck(const SuiteOptions& opts);
SuiteResult suite_softmax_equivariance(const SuiteOptions& opts);
SuiteResult suite_edge_budget(const SuiteOptions& opts);
SuiteResult suite_component_forcing(const SuiteOptions& opts);
SuiteResult suite_reachability(const SuiteOptions& opts);
SuiteResult suite_universality(const SuiteOptions& opts);

// Suite groups by name: spectral (1, 3), mixing (2), oracle (4, 6),
// gradcheck (5), budget (7), training (8), universality (9, 10), all.
std::vector<std::string_view> suite_names();
std::vector<SuiteResult> run_suites(std::string_view name, const SuiteOptions& opts);

// ---- random instances shared with the unit tests ---------------------------

struct AttentionInstance {
  AttentionPattern pattern;
  LayerParams params;
  Embeddings x;  // model_dim x num_nodes
  AttentionOptions options;
};

// A random pattern on at most max_nodes nodes (real plus virtual) whose
// enabled components are given by `flags`, with random dimensions and
// parameters. Every node has at least one incoming edge.
AttentionInstance random_attention_instance(Rng& rng, PatternFlags flags, std::size_t max_nodes);

// The 14 valid component combinations: non-empty subsets of {local,
// expander, global}, each with and without self-loops.
std::vector<PatternFlags> pattern_flag_combinations();

// Relabel real nodes by `real_perm` and virtual nodes by `virtual_perm`
// (both map old index -> new index within their range).
AttentionPattern relabel_pattern(const AttentionPattern& p, std::span<const NodeId> real_perm,
                                 std::span<const NodeId> virtual_perm);

}  // namespace exphormer
