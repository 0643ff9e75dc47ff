#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "exphormer/expander.hpp"
#include "exphormer/train.hpp"

namespace exphormer {

namespace {

constexpr double kStep = 1e-5;

// Ring plus five diameters; two dataset feature ids alternate over edges.
MultiGraph gradcheck_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i) edges.push_back({i, static_cast<NodeId>((i + 1) % n), 1});
  for (NodeId i = 0; i < n / 2; ++i) edges.push_back({i, static_cast<NodeId>(i + n / 2), 1});
  return MultiGraph::from_edge_list(n, edges);
}

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

std::string flag_label(const PatternFlags& f) {
  std::string s = "----";
  if (f.local) s[0] = 'L';
  if (f.expander) s[1] = 'X';
  if (f.global) s[2] = 'G';
  if (f.self_loops) s[3] = 'S';
  return s;
}

double objective(const AttentionPattern& p, const Embeddings& x, const LayerParams& params,
                 const Eigen::MatrixXd& upstream) {
  return transformer_block_forward(p, x, params).cwiseProduct(upstream).sum();
}

double max_abs(LayerParams& params) {
  double m = 0.0;
  for (const auto& t : tensors(params)) {
    for (std::size_t i = 0; i < t.size; ++i) m = std::max(m, std::abs(t.data[i]));
  }
  return m;
}

void check_pattern(const BuiltPattern& built, std::uint64_t seed, GradcheckReport& report) {
  const AttentionPattern& p = built.pattern;
  const std::string label = flag_label(p.flags());
  Rng rng(seed);
  LayerDims dims{6, 2, 3, 5, 3, 2, p.n_virtual()};
  LayerParams params = param_init(dims, derive_seed(seed, 1));
  Embeddings x = random_matrix(rng, 6, static_cast<Eigen::Index>(p.n_real()));
  const Eigen::MatrixXd upstream = random_matrix(rng, 6, static_cast<Eigen::Index>(p.num_nodes()));

  Gradients grad = attn_backward(p, x, params, upstream);
  std::map<std::string, double> worst;

  auto probe = [&](double* value, double analytic, const std::string& group) {
    const double saved = *value;
    *value = saved + kStep;
    const double plus = objective(p, x, params, upstream);
    *value = saved - kStep;
    const double minus = objective(p, x, params, upstream);
    *value = saved;
    const double err = relative_error(analytic, (plus - minus) / (2.0 * kStep));
    auto& w = worst[group];
    w = std::max(w, err);
  };

  auto param_refs = tensors(params);
  auto grad_refs = tensors(grad.params);
  for (std::size_t i = 0; i < param_refs.size(); ++i) {
    for (std::size_t j = 0; j < param_refs[i].size; ++j) {
      probe(param_refs[i].data + j, grad_refs[i].data[j], param_refs[i].group);
    }
  }
  for (Eigen::Index j = 0; j < x.size(); ++j) probe(x.data() + j, grad.input.data()[j], "X");

  for (const auto& [group, err] : worst) {
    report.entries.push_back({label, group, err, err <= report.tolerance});
  }

  const Gradients zero = attn_backward(p, x, params, Eigen::MatrixXd::Zero(upstream.rows(), upstream.cols()));
  LayerParams zero_params = zero.params;
  const double zero_norm = std::max(max_abs(zero_params), zero.input.cwiseAbs().maxCoeff());
  report.entries.push_back({label, "zero-upstream", zero_norm, zero_norm == 0.0});

  for (std::size_t slot = 0; slot < kEmbeddedKinds.size(); ++slot) {
    const EdgeKind kind = kEmbeddedKinds[slot];
    if (edge_budget(p).count(kind) != 0) continue;
    const double norm = grad.params.kind_embeddings.col(static_cast<Eigen::Index>(slot)).cwiseAbs().maxCoeff();
    report.entries.push_back({label, "unused-kind:" + std::string(to_string(kind)), norm, norm == 0.0});
  }
}

}  // namespace

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

GradcheckReport gradcheck_suite(std::uint64_t seed) {
  constexpr std::size_t n = 10;
  GradcheckReport report;
  const MultiGraph g = gradcheck_graph(n);
  std::vector<std::int32_t> features;
  for (const Edge& e : g.edges()) features.push_back(static_cast<std::int32_t>((e.u + e.v) % 2));
  const GeneratedExpander expander = gen_hamiltonian(n, 4, derive_seed(seed, 0));

  // Every non-empty subset of {local, expander, global}, with and without
  // self-loops. Self-loops alone are not a valid pattern configuration.
  std::uint64_t index = 1;
  for (unsigned mask = 1; mask < 8; ++mask) {
    for (bool loops : {false, true}) {
      PatternConfig cfg;
      cfg.use_local = (mask & 1U) != 0;
      cfg.num_virtual = (mask & 4U) != 0 ? 2 : 0;
      cfg.self_loops = loops;
      std::optional<GeneratedExpander> x;
      if ((mask & 2U) != 0) x = expander;
      const BuiltPattern built = build_pattern_with_expander(g, cfg, x, features);
      check_pattern(built, derive_seed(seed, ++index), report);
    }
  }

  report.passed = true;
  for (const auto& e : report.entries) {
    report.passed = report.passed && e.passed;
    if (e.group.find(':') == std::string::npos && e.group != "zero-upstream") {
      report.max_relative_error = std::max(report.max_relative_error, e.max_relative_error);
    }
  }
  return report;
}

}  // namespace exphormer
