#include "exphormer/suites.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "exphormer/error.hpp"
#include "exphormer/spectral.hpp"
#include "exphormer/train.hpp"

namespace exphormer {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 == 1 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

constexpr std::array<ExpanderVariant, 3> kVariants = {ExpanderVariant::Standard, ExpanderVariant::SimpleVariant,
                                                      ExpanderVariant::HamiltonianCycle};

// Sparse random input graph: a ring plus `extra` random chords, no
// self-loops and no parallel edges.
MultiGraph ring_with_chords(std::size_t n, std::size_t extra, Rng& rng) {
  std::vector<Edge> edges;
  std::vector<std::pair<NodeId, NodeId>> seen;
  auto key = [](NodeId a, NodeId b) { return std::pair{std::min(a, b), std::max(a, b)}; };
  for (NodeId i = 0; i < n; ++i) {
    const auto j = static_cast<NodeId>((i + 1) % n);
    seen.push_back(key(i, j));
  }
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  std::size_t added = 0;
  for (std::size_t attempt = 0; added < extra && attempt < 50 * (extra + 1); ++attempt) {
    const auto u = static_cast<NodeId>(rng.below(n));
    const auto v = static_cast<NodeId>(rng.below(n));
    if (u == v) continue;
    const auto k = key(u, v);
    const auto it = std::lower_bound(seen.begin(), seen.end(), k);
    if (it != seen.end() && *it == k) continue;
    seen.insert(it, k);
    ++added;
  }
  for (const auto& [u, v] : seen) edges.push_back({u, v, 1});
  return MultiGraph::from_edge_list(n, edges);
}

MultiGraph random_sparse_graph(std::size_t n, double p, Rng& rng) {
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (rng.bernoulli(p)) edges.push_back({u, v, 1});
    }
  }
  return MultiGraph::from_edge_list(n, edges);
}

// An unverified draw wrapped with a certificate; the Hamiltonian cycles are
// recorded so universality checks can use them.
GeneratedExpander raw_expander(std::size_t n, std::size_t d, ExpanderVariant variant, Rng& rng) {
  std::vector<std::vector<NodeId>> cycles;
  GeneratedExpander out;
  out.graph = draw_expander(n, d, variant, rng, &cycles).without_self_loops();
  out.certificate.variant = variant;
  out.certificate.n = n;
  out.certificate.d = d;
  if (variant == ExpanderVariant::HamiltonianCycle) out.certificate.hamiltonian_cycles = std::move(cycles);
  return out;
}

bool every_node_has_incoming(const AttentionPattern& p) {
  for (NodeId t = 0; t < p.num_nodes(); ++t) {
    if (p.incoming(t).empty()) return false;
  }
  return true;
}

std::string reach_string(const std::optional<std::uint32_t>& r) { return r ? std::to_string(*r) : "inf"; }

// nullopt (unreachable) compares as infinity.
bool reach_le(const std::optional<std::uint32_t>& a, const std::optional<std::uint32_t>& b) {
  if (!b) return true;
  return a && *a <= *b;
}

}  // namespace

void SuiteResult::add(std::string key, double value) {
  std::ostringstream os;
  os << std::setprecision(6) << value;
  metrics.emplace_back(std::move(key), os.str());
}

std::vector<PatternFlags> pattern_flag_combinations() {
  std::vector<PatternFlags> out;
  for (unsigned mask = 1; mask < 8; ++mask) {
    for (bool loops : {false, true}) {
      out.push_back({(mask & 1U) != 0, (mask & 2U) != 0, (mask & 4U) != 0, loops});
    }
  }
  return out;
}

AttentionInstance random_attention_instance(Rng& rng, PatternFlags flags, std::size_t max_nodes) {
  if (max_nodes < 7) throw std::invalid_argument("random instances need max_nodes >= 7");
  for (;;) {
    const std::size_t g = flags.global ? 1 + rng.below(2) : 0;
    const std::size_t n = 5 + rng.below(max_nodes - g - 5 + 1);

    MultiGraph local = random_sparse_graph(n, 0.3, rng);
    if (rng.bernoulli(0.3)) {
      auto edges = local.edges();
      const auto u = static_cast<NodeId>(rng.below(n));
      edges.push_back({u, u, 1});
      local = MultiGraph::from_edge_list(n, edges);
    }
    const std::size_t n_features = 1 + rng.below(3);
    std::vector<std::int32_t> features;
    for (std::size_t k = 0; k < local.edges().size(); ++k) {
      features.push_back(static_cast<std::int32_t>(rng.below(n_features)));
    }

    std::optional<GeneratedExpander> expander;
    if (flags.expander) {
      const std::size_t d = rng.bernoulli(0.5) ? 4 : 2;
      expander = raw_expander(n, d, kVariants[rng.below(kVariants.size())], rng);
    }

    PatternConfig cfg;
    cfg.use_local = flags.local;
    cfg.num_virtual = g;
    cfg.self_loops = flags.self_loops;
    AttentionPattern p = build_pattern_with_expander(local, cfg, expander, features).pattern;
    if (!every_node_has_incoming(p)) continue;

    LayerDims dims;
    dims.model_dim = 2 + rng.below(5);
    dims.heads = 1 + rng.below(3);
    dims.head_dim = 1 + rng.below(4);
    dims.ff_dim = 1 + rng.below(5);
    dims.edge_dim = 1 + rng.below(3);
    dims.num_local_features = n_features;
    dims.num_virtual = g;

    AttentionInstance inst;
    inst.params = param_init(dims, rng.below(std::numeric_limits<std::uint64_t>::max()));
    // Larger projections give peakier softmaxes than the init scale alone.
    for (auto& h : inst.params.heads) {
      h.query *= 2.0;
      h.key *= 2.0;
    }
    inst.x.resize(static_cast<Eigen::Index>(dims.model_dim), static_cast<Eigen::Index>(p.num_nodes()));
    for (Eigen::Index i = 0; i < inst.x.size(); ++i) inst.x.data()[i] = rng.uniform(-2.0, 2.0);
    inst.options.edge_features = rng.bernoulli(0.8);
    inst.options.scale_logits = rng.bernoulli(0.3);
    inst.pattern = std::move(p);
    return inst;
  }
}

AttentionPattern relabel_pattern(const AttentionPattern& p, std::span<const NodeId> real_perm,
                                 std::span<const NodeId> virtual_perm) {
  if (real_perm.size() != p.n_real() || virtual_perm.size() != p.n_virtual()) {
    throw std::invalid_argument("permutation sizes do not match the pattern");
  }
  const auto n_real = static_cast<NodeId>(p.n_real());
  auto map = [&](NodeId v) { return v < n_real ? real_perm[v] : n_real + virtual_perm[v - n_real]; };
  auto edges = p.directed_edges();
  for (auto& e : edges) {
    e.source = map(e.source);
    e.target = map(e.target);
  }
  return AttentionPattern::from_edges(p.n_real(), p.n_virtual(), p.flags(), std::move(edges));
}

// ---- 1, 2: near-Ramanujan draws and the mixing bound -----------------------

std::vector<DrawRecord> ramanujan_draws(const SuiteOptions& opts) {
  const std::vector<std::size_t> sizes = opts.quick ? std::vector<std::size_t>{64, 128} : std::vector<std::size_t>{256, 1024};
  const std::size_t draws = opts.quick ? 10 : 50;
  std::vector<DrawRecord> out;
  std::uint64_t index = 0;
  for (ExpanderVariant variant : kVariants) {
    for (std::size_t n : sizes) {
      for (std::size_t d : {6, 10}) {
        for (std::size_t k = 0; k < draws; ++k) {
          DrawRecord r;
          r.variant = variant;
          r.n = n;
          r.d = d;
          r.seed = derive_seed(opts.seed, index++);
          Rng rng(r.seed);
          MultiGraph g = draw_expander(n, d, variant, rng);
          r.check = near_ramanujan_from_spectrum(adjacency_eigenvalues(g), d, 0.1 * static_cast<double>(d));
          if (r.check.passed) r.graph = std::move(g);
          out.push_back(std::move(r));
        }
      }
    }
  }
  return out;
}

SuiteResult suite_near_ramanujan(const std::vector<DrawRecord>& draws, const SuiteOptions&) {
  SuiteResult res{1, "near-Ramanujan generation", true, {}, 0.0};
  // Group by (variant, n, d) in draw order.
  std::size_t i = 0;
  double worst_rate = 1.0;
  while (i < draws.size()) {
    std::size_t j = i;
    std::size_t ok = 0;
    double worst_bound = 0.0;
    while (j < draws.size() && draws[j].variant == draws[i].variant && draws[j].n == draws[i].n &&
           draws[j].d == draws[i].d) {
      ok += draws[j].check.passed ? 1 : 0;
      worst_bound = std::max(worst_bound, draws[j].check.achieved_bound);
      ++j;
    }
    const double rate = static_cast<double>(ok) / static_cast<double>(j - i);
    worst_rate = std::min(worst_rate, rate);
    std::ostringstream key;
    key << to_string(draws[i].variant) << ".n" << draws[i].n << ".d" << draws[i].d;
    std::ostringstream value;
    value << ok << "/" << (j - i) << " max_bound=" << std::setprecision(5) << worst_bound
          << " threshold=" << draws[i].check.threshold;
    res.add(key.str(), value.str());
    if (rate < 0.9) res.passed = false;
    i = j;
  }
  res.add("min_pass_rate", worst_rate);
  return res;
}

SuiteResult suite_mixing(const std::vector<DrawRecord>& draws, const SuiteOptions&) {
  SuiteResult res{2, "mixing bound", true, {}, 0.0};
  constexpr double delta = 1e-3;
  std::size_t graphs = 0;
  std::size_t walks = 0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;
  for (const auto& r : draws) {
    if (!r.check.passed) continue;
    const double eps = r.check.achieved_bound / static_cast<double>(r.d);
    if (eps > 0.95) continue;
    ++graphs;
    const std::size_t t_bound = mixing_bound(r.n, eps, delta).t_bound;
    for (NodeId start : {NodeId{0}, static_cast<NodeId>(r.n / 3), static_cast<NodeId>(r.n - 1)}) {
      ++walks;
      try {
        const std::size_t t = empirical_mixing_time(r.graph, delta, start);
        worst_ratio = std::max(worst_ratio, static_cast<double>(t) / static_cast<double>(t_bound));
        if (t > t_bound) ++violations;
      } catch (const NoConvergence&) {
        ++violations;
      }
    }
  }
  res.add("graphs", graphs);
  res.add("walks", walks);
  res.add("violations", violations);
  res.add("max_empirical_over_bound", worst_ratio);
  res.passed = violations == 0 && graphs > 0;
  return res;
}

// ---- 3: logarithmic diameter ------------------------------------------------

SuiteResult suite_diameter(const SuiteOptions& opts) {
  SuiteResult res{3, "logarithmic diameter", true, {}, 0.0};
  const std::size_t base_n = opts.quick ? 64 : 256;
  const std::size_t calib_seeds = opts.quick ? 5 : 20;
  const std::vector<std::pair<std::size_t, std::size_t>> targets =
      opts.quick ? std::vector<std::pair<std::size_t, std::size_t>>{{256, 3}}
                 : std::vector<std::pair<std::size_t, std::size_t>>{{1024, 10}, {4096, 2}};
  std::uint64_t index = 0;
  std::size_t violations = 0;
  for (ExpanderVariant variant : kVariants) {
    ExpanderConfig cfg;
    cfg.d = 6;
    cfg.variant = variant;
    cfg.n = base_n;
    double c = 0.0;
    for (std::size_t k = 0; k < calib_seeds; ++k) {
      cfg.seed = derive_seed(opts.seed ^ 0xd1a3ULL, index++);
      const auto diam = diameter(generate_verified(cfg).graph);
      if (!diam) throw Error("accepted expander is disconnected");
      c = std::max(c, static_cast<double>(*diam) / std::log(static_cast<double>(base_n)));
    }
    res.add(std::string(to_string(variant)) + ".C", c);
    for (const auto& [n, seeds] : targets) {
      cfg.n = n;
      std::uint32_t worst = 0;
      for (std::size_t k = 0; k < seeds; ++k) {
        cfg.seed = derive_seed(opts.seed ^ 0xd1a3ULL, index++);
        const auto diam = diameter(generate_verified(cfg).graph);
        const double limit = 1.5 * c * std::log(static_cast<double>(n));
        if (!diam || static_cast<double>(*diam) > limit) ++violations;
        worst = std::max(worst, diam.value_or(kUnreachable));
      }
      std::ostringstream value;
      value << "max_diameter=" << worst << " limit=" << std::setprecision(5)
            << 1.5 * c * std::log(static_cast<double>(n)) << " seeds=" << seeds;
      res.add(std::string(to_string(variant)) + ".n" + std::to_string(n), value.str());
    }
  }
  res.add("violations", violations);
  res.passed = violations == 0;
  return res;
}

// ---- 4: sparse vs dense ----------------------------------------------------

SuiteResult suite_oracle(const SuiteOptions& opts) {
  SuiteResult res{4, "sparse/dense oracle equivalence", true, {}, 0.0};
  const std::size_t instances = opts.quick ? 28 : 100;
  const auto combos = pattern_flag_combinations();
  Rng rng(derive_seed(opts.seed, 4));
  double worst = 0.0;
  std::size_t max_nodes_seen = 0;
  for (std::size_t i = 0; i < instances; ++i) {
    const auto inst = random_attention_instance(rng, combos[i % combos.size()], 12);
    max_nodes_seen = std::max(max_nodes_seen, inst.pattern.num_nodes());
    // Alternate between passing all columns and only the real ones.
    const Embeddings x = i % 2 == 0 ? inst.x : Embeddings(inst.x.leftCols(inst.pattern.n_real()));
    const Embeddings sparse = attn_forward(inst.pattern, x, inst.params, inst.options);
    const Embeddings dense = dense_reference_forward(with_virtual_columns(inst.pattern, x, inst.params),
                                                     inst.params, dense_mask(inst.pattern), inst.options);
    worst = std::max(worst, (sparse - dense).cwiseAbs().maxCoeff());
  }
  res.add("instances", instances);
  res.add("combinations", combos.size());
  res.add("max_nodes", max_nodes_seen);
  res.add("max_abs_diff", worst);
  res.passed = worst <= 1e-10;
  return res;
}

// ---- 5: gradients ----------------------------------------------------------

SuiteResult suite_gradcheck(const SuiteOptions& opts) {
  SuiteResult res{5, "gradient exactness", true, {}, 0.0};
  const std::size_t seeds = opts.quick ? 2 : 20;
  std::map<std::string, double> by_group;
  std::size_t failed = 0;
  for (std::size_t s = 0; s < seeds; ++s) {
    const GradcheckReport r = gradcheck_suite(derive_seed(opts.seed, 500 + s));
    for (const auto& e : r.entries) {
      if (!e.passed) ++failed;
      auto& w = by_group[e.group];
      w = std::max(w, e.max_relative_error);
    }
  }
  double worst = 0.0;
  for (const auto& [group, err] : by_group) {
    res.add(group, err);
    if (group.find(':') == std::string::npos && group != "zero-upstream") worst = std::max(worst, err);
  }
  res.add("seeds", seeds);
  res.add("failed_entries", failed);
  res.add("max_relative_error", worst);
  res.passed = failed == 0 && worst <= 1e-5;
  return res;
}

// ---- 6: softmax normalization and equivariance -----------------------------

SuiteResult suite_softmax_equivariance(const SuiteOptions& opts) {
  SuiteResult res{6, "softmax normalization and permutation equivariance", true, {}, 0.0};
  const std::size_t instances = opts.quick ? 14 : 50;
  const auto combos = pattern_flag_combinations();
  Rng rng(derive_seed(opts.seed, 6));
  double worst_sum = 0.0;
  double worst_equiv = 0.0;
  for (std::size_t i = 0; i < instances; ++i) {
    const auto inst = random_attention_instance(rng, combos[i % combos.size()], 12);
    const auto& p = inst.pattern;
    const auto weights = attention_weights(p, inst.x, inst.params, inst.options);
    for (const auto& head : weights) {
      for (NodeId t = 0; t < p.num_nodes(); ++t) {
        double s = 0.0;
        const std::size_t off = p.edge_offset(t);
        for (std::size_t j = 0; j < p.incoming(t).size(); ++j) s += head[off + j];
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      }
    }

    const auto real_perm = rng.permutation<NodeId>(p.n_real());
    const auto virtual_perm = rng.permutation<NodeId>(p.n_virtual());
    const AttentionPattern q = relabel_pattern(p, real_perm, virtual_perm);
    const auto n_real = static_cast<NodeId>(p.n_real());
    auto map = [&](NodeId v) { return v < n_real ? real_perm[v] : n_real + virtual_perm[v - n_real]; };
    Embeddings xp(inst.x.rows(), inst.x.cols());
    for (NodeId v = 0; v < p.num_nodes(); ++v) xp.col(map(v)) = inst.x.col(v);
    const Embeddings y = transformer_block_forward(p, inst.x, inst.params, inst.options);
    const Embeddings yp = transformer_block_forward(q, xp, inst.params, inst.options);
    for (NodeId v = 0; v < p.num_nodes(); ++v) {
      worst_equiv = std::max(worst_equiv, (yp.col(map(v)) - y.col(v)).cwiseAbs().maxCoeff());
    }
  }
  res.add("instances", instances);
  res.add("max_weight_sum_error", worst_sum);
  res.add("max_equivariance_error", worst_equiv);
  res.passed = worst_sum <= 1e-12 && worst_equiv <= 1e-10;
  return res;
}

// ---- 7: linear edge budget -------------------------------------------------

SuiteResult suite_edge_budget(const SuiteOptions& opts) {
  SuiteResult res{7, "linear edge budget", true, {}, 0.0};
  Rng rng(derive_seed(opts.seed, 7));

  std::size_t cases = 0;
  std::size_t mismatches = 0;
  const std::vector<std::size_t> sizes = opts.quick ? std::vector<std::size_t>{30, 60} : std::vector<std::size_t>{50, 100, 200, 400};
  for (std::size_t n : sizes) {
    for (std::size_t d : {0, 4, 6}) {
      for (std::size_t g : {0, 1, 3}) {
        for (bool local : {false, true}) {
          for (bool loops : {false, true}) {
            if (!local && d == 0 && g == 0) continue;
            const MultiGraph graph = ring_with_chords(n, n / 2, rng);
            std::optional<GeneratedExpander> x;
            if (d > 0) {
              // Non-overlapping means a simple expander: no loops, no parallel edges.
              for (;;) {
                x = raw_expander(n, d, kVariants[rng.below(kVariants.size())], rng);
                if (x->graph.num_distinct_edges() == n * d / 2 && x->graph.total_edge_endpoints() == n * d) break;
              }
            }
            PatternConfig cfg;
            cfg.use_local = local;
            cfg.num_virtual = g;
            cfg.self_loops = loops;
            const auto p = build_pattern_with_expander(graph, cfg, x).pattern;
            const std::size_t measured = edge_budget(p).total();
            const std::size_t bound = linear_edge_bound(n, local ? graph.num_distinct_edges() : 0, d, g, loops);
            ++cases;
            if (measured != bound) ++mismatches;
          }
        }
      }
    }
  }
  res.add("exact_cases", cases);
  res.add("mismatches", mismatches);

  // Forward time at n and 2n with fixed d, g and depth.
  const std::size_t small = opts.quick ? 250 : 1000;
  const std::size_t runs = 5;
  const std::size_t reps = opts.quick ? 3 : 10;
  TrainConfig tc;
  auto forward_seconds = [&](std::size_t n) {
    const MultiGraph graph = ring_with_chords(n, n, rng);
    PatternConfig cfg;
    cfg.num_virtual = 1;
    const auto x = raw_expander(n, 4, ExpanderVariant::Standard, rng);
    const auto p = build_pattern_with_expander(graph, cfg, x).pattern;
    LayerDims dims{tc.model_dim, tc.heads, tc.head_dim, tc.ff_dim, tc.edge_dim, 1, 1};
    const LayerParams l0 = param_init(dims, rng.below(1U << 30));
    const LayerParams l1 = param_init(dims, rng.below(1U << 30));
    Embeddings input(static_cast<Eigen::Index>(dims.model_dim), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < input.size(); ++i) input.data()[i] = rng.uniform(-1.0, 1.0);
    std::vector<double> times;
    double sink = 0.0;
    for (std::size_t r = 0; r < runs; ++r) {
      const auto t0 = Clock::now();
      for (std::size_t k = 0; k < reps; ++k) {
        sink += transformer_block_forward(p, transformer_block_forward(p, input, l0), l1)(0, 0);
      }
      times.push_back(seconds_since(t0) / static_cast<double>(reps));
    }
    if (!std::isfinite(sink)) throw Error("non-finite forward output in timing run");
    return median(times);
  };
  forward_seconds(small);  // warm-up
  const double t_small = forward_seconds(small);
  const double t_large = forward_seconds(2 * small);
  const double ratio = t_large / t_small;
  res.add("forward_seconds.n" + std::to_string(small), t_small);
  res.add("forward_seconds.n" + std::to_string(2 * small), t_large);
  res.add("growth_ratio", ratio);
  res.passed = mismatches == 0 && ratio <= 2.6;
  return res;
}

// ---- 8: component forcing --------------------------------------------------

SuiteResult suite_component_forcing(const SuiteOptions& opts) {
  SuiteResult res{8, "component forcing on GlobalMeanSign", true, {}, 0.0};
  const std::size_t seeds = opts.quick ? 1 : 5;
  TrainConfig cfg;
  cfg.layers = 2;
  cfg.steps = opts.quick ? 300 : 1000;
  std::vector<double> with_global;
  std::vector<double> local_only;
  std::vector<double> gaps;
  for (std::size_t s = 0; s < seeds; ++s) {
    const SyntheticTask task = make_task(TaskKind::GlobalMeanSign, 100, 32, derive_seed(opts.seed, 800 + s));
    cfg.seed = derive_seed(opts.seed, 900 + s);
    cfg.pattern.num_virtual = 1;
    const double a = train_loop(task, cfg).test_accuracy;
    cfg.pattern.num_virtual = 0;
    const double b = train_loop(task, cfg).test_accuracy;
    with_global.push_back(a);
    local_only.push_back(b);
    gaps.push_back(a - b);
  }
  const double ma = median(with_global);
  const double mb = median(local_only);
  const double mg = median(gaps);
  res.add("seeds", seeds);
  res.add("steps", cfg.steps);
  res.add("median_test_accuracy.virtual", ma);
  res.add("median_test_accuracy.local_only", mb);
  res.add("median_gap", mg);
  res.passed = ma >= 0.9 && mb <= 0.6 && mg >= 0.25;
  return res;
}

// ---- 9: reachability -------------------------------------------------------

SuiteResult suite_reachability(const SuiteOptions& opts) {
  SuiteResult res{9, "reachability layers", true, {}, 0.0};
  Rng rng(derive_seed(opts.seed, 9));
  const std::size_t configs = opts.quick ? 6 : 20;

  std::size_t star_failures = 0;
  for (std::size_t i = 0; i < configs; ++i) {
    // n >= 8 keeps ring + chords + a 2-regular expander short of complete.
    const std::size_t n = 8 + rng.below(33);
    PatternConfig cfg;
    cfg.use_local = rng.bernoulli(0.7);
    cfg.num_virtual = 1 + rng.below(2);
    cfg.self_loops = rng.bernoulli(0.5);
    const MultiGraph graph = ring_with_chords(n, rng.below(n / 2 + 1), rng);
    std::optional<GeneratedExpander> x;
    if (rng.bernoulli(0.5)) x = raw_expander(n, 2, kVariants[rng.below(kVariants.size())], rng);
    const auto r = reachability_layers(build_pattern_with_expander(graph, cfg, x).pattern);
    if (r != std::optional<std::uint32_t>(2)) ++star_failures;
  }
  res.add("star_configs", configs);
  res.add("star_failures", star_failures);

  std::size_t expander_failures = 0;
  const std::size_t expander_seeds = opts.quick ? 2 : 5;
  std::uint32_t worst_reach = 0;
  for (ExpanderVariant variant : kVariants) {
    for (std::size_t k = 0; k < expander_seeds; ++k) {
      ExpanderConfig ec;
      ec.n = opts.quick ? 128 : 256;
      ec.d = 6;
      ec.variant = variant;
      ec.seed = derive_seed(opts.seed ^ 0x9a9aULL, k + 100 * static_cast<std::size_t>(variant));
      const GeneratedExpander x = generate_verified(ec);
      PatternConfig cfg;
      cfg.use_local = false;
      cfg.num_virtual = 0;
      const MultiGraph empty = MultiGraph::from_edge_list(ec.n, {});
      const auto r = reachability_layers(build_pattern_with_expander(empty, cfg, x).pattern);
      const auto diam = diameter(x.graph);
      if (!r || !diam || *r > *diam) ++expander_failures;
      worst_reach = std::max(worst_reach, r.value_or(kUnreachable));
    }
  }
  res.add("expander_patterns", 3 * expander_seeds);
  res.add("expander_failures", expander_failures);
  res.add("max_expander_reach", static_cast<std::size_t>(worst_reach));

  std::size_t monotone_failures = 0;
  for (std::size_t i = 0; i < configs; ++i) {
    const std::size_t n = 5 + rng.below(26);
    // Sparse and frequently disconnected, so "unreachable" is exercised too.
    const MultiGraph graph = random_sparse_graph(n, rng.uniform(0.02, 0.3), rng);
    std::optional<GeneratedExpander> x;
    if (rng.bernoulli(0.5)) x = raw_expander(n, 2 + 2 * rng.below(2), kVariants[rng.below(kVariants.size())], rng);
    PatternConfig cfg;
    cfg.self_loops = rng.bernoulli(0.5);
    cfg.num_virtual = 0;
    const auto without = reachability_layers(build_pattern_with_expander(graph, cfg, x).pattern);
    cfg.num_virtual = 1 + rng.below(2);
    const auto with = reachability_layers(build_pattern_with_expander(graph, cfg, x).pattern);
    if (!reach_le(with, without)) ++monotone_failures;
    res.add("monotone." + std::to_string(i), reach_string(without) + "->" + reach_string(with));
  }
  res.add("monotone_failures", monotone_failures);
  res.passed = star_failures == 0 && expander_failures == 0 && monotone_failures == 0;
  return res;
}

// ---- 10: universality preconditions -----------------------------------------

SuiteResult suite_universality(const SuiteOptions& opts) {
  SuiteResult res{10, "universality preconditions", true, {}, 0.0};
  Rng rng(derive_seed(opts.seed, 10));
  const std::size_t configs = opts.quick ? 5 : 20;
  std::size_t failures = 0;

  for (std::size_t i = 0; i < configs; ++i) {
    const std::size_t n = 5 + rng.below(40);
    const MultiGraph graph = ring_with_chords(n, rng.below(n), rng);
    PatternConfig cfg;
    cfg.use_local = rng.bernoulli(0.5);
    cfg.num_virtual = 1 + rng.below(2);
    std::optional<GeneratedExpander> x;
    if (rng.bernoulli(0.5)) x = raw_expander(n, 2, kVariants[rng.below(kVariants.size())], rng);
    cfg.self_loops = true;
    const auto with = build_pattern_with_expander(graph, cfg, x);
    cfg.self_loops = false;
    const auto without = build_pattern_with_expander(graph, cfg, x);
    const bool a = universality_precondition(with.pattern, with.certificate).satisfied;
    const bool b = universality_precondition(without.pattern, without.certificate).satisfied;
    if (!a || b) ++failures;
  }
  res.add("star_configs", configs);

  std::size_t ham_failures = 0;
  for (std::size_t i = 0; i < configs; ++i) {
    ExpanderConfig ec;
    ec.n = 16 + rng.below(100);
    ec.d = 2 + 2 * rng.below(3);
    ec.variant = ExpanderVariant::HamiltonianCycle;
    ec.seed = rng.below(1U << 30);
    ec.slack = 10.0;  // acceptance is not what is being tested here
    const GeneratedExpander x = generate_verified(ec);
    PatternConfig cfg;
    cfg.use_local = rng.bernoulli(0.5);
    cfg.num_virtual = 0;
    const MultiGraph graph = ring_with_chords(ec.n, rng.below(ec.n), rng);
    cfg.self_loops = true;
    const auto with = build_pattern_with_expander(graph, cfg, x);
    cfg.self_loops = false;
    const auto without = build_pattern_with_expander(graph, cfg, x);
    const auto a = universality_precondition(with.pattern, with.certificate);
    const auto b = universality_precondition(without.pattern, without.certificate);
    if (!a.satisfied || !a.hamiltonian || b.satisfied) ++ham_failures;
  }
  res.add("hamiltonian_configs", configs);
  res.add("star_failures", failures);
  res.add("hamiltonian_failures", ham_failures);
  res.passed = failures == 0 && ham_failures == 0;
  return res;
}

// ---- grouping --------------------------------------------------------------

std::vector<std::string_view> suite_names() {
  return {"spectral", "mixing", "oracle", "gradcheck", "budget", "training", "universality", "all"};
}

std::vector<SuiteResult> run_suites(std::string_view name, const SuiteOptions& opts) {
  const auto names = suite_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw std::invalid_argument("unknown suite '" + std::string(name) + "'");
  }
  const bool all = name == "all";
  std::vector<SuiteResult> out;
  auto timed = [&out](auto&& fn) {
    const auto t0 = Clock::now();
    SuiteResult r = fn();
    r.seconds = seconds_since(t0);
    out.push_back(std::move(r));
  };

  std::vector<DrawRecord> draws;
  if (all || name == "spectral" || name == "mixing") {
    const auto t0 = Clock::now();
    draws = ramanujan_draws(opts);
    const double draw_seconds = seconds_since(t0);
    if (all || name == "spectral") {
      timed([&] { return suite_near_ramanujan(draws, opts); });
      out.back().seconds += draw_seconds;
    }
    if (all || name == "mixing") timed([&] { return suite_mixing(draws, opts); });
  }
  if (all || name == "spectral") timed([&] { return suite_diameter(opts); });
  if (all || name == "oracle") {
    timed([&] { return suite_oracle(opts); });
    timed([&] { return suite_softmax_equivariance(opts); });
  }
  if (all || name == "gradcheck") timed([&] { return suite_gradcheck(opts); });
  if (all || name == "budget") timed([&] { return suite_edge_budget(opts); });
  if (all || name == "training") timed([&] { return suite_component_forcing(opts); });
  if (all || name == "universality") {
    timed([&] { return suite_reachability(opts); });
    timed([&] { return suite_universality(opts); });
  }
  std::sort(out.begin(), out.end(), [](const SuiteResult& a, const SuiteResult& b) { return a.criterion < b.criterion; });
  return out;
}

}  // namespace exphormer
