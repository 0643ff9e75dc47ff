#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "exphormer/attention.hpp"
#include "exphormer/pattern.hpp"
#include "exphormer/suites.hpp"
#include "support/graphs.hpp"

using namespace exphormer;
using namespace exphormer::testing;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Eigen::VectorXd edge_vector(const LayerParams& params, const PatternEdge& e) {
  if (e.kind == EdgeKind::Local) return params.local_edge_features.col(e.feature);
  for (std::size_t k = 0; k < kEmbeddedKinds.size(); ++k) {
    if (kEmbeddedKinds[k] == e.kind) return params.kind_embeddings.col(static_cast<Eigen::Index>(k));
  }
  throw std::logic_error("unreachable");
}

// Edge-by-edge evaluation written directly from the layer formula, with no
// shared code paths: per query node, per head, scores over incoming edges,
// softmax, weighted values, output projection, residual; then the
// position-wise feedforward.
Eigen::MatrixXd naive_block(const AttentionPattern& p, const Eigen::MatrixXd& x_full, const LayerParams& params,
                            const AttentionOptions& opts, bool with_ff) {
  const auto n = static_cast<Eigen::Index>(p.num_nodes());
  Eigen::MatrixXd attn = x_full;
  const double scale = opts.scale_logits ? 1.0 / std::sqrt(static_cast<double>(params.head_dim())) : 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto in = p.incoming(static_cast<NodeId>(i));
    for (const auto& head : params.heads) {
      const Eigen::VectorXd q = head.query * x_full.col(i);
      std::vector<double> s;
      for (const auto& e : in) {
        Eigen::VectorXd k = head.key * x_full.col(e.source);
        if (opts.edge_features) k = k.cwiseProduct(head.edge * edge_vector(params, e));
        s.push_back(scale * k.dot(q));
      }
      const double mx = *std::max_element(s.begin(), s.end());
      double z = 0.0;
      for (double& v : s) z += (v = std::exp(v - mx));
      Eigen::VectorXd agg = Eigen::VectorXd::Zero(head.value.rows());
      for (std::size_t j = 0; j < in.size(); ++j) agg += (s[j] / z) * (head.value * x_full.col(in[j].source));
      attn.col(i) += head.output * agg;
    }
  }
  if (!with_ff) return attn;
  Eigen::MatrixXd out = attn;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd h = params.ff.w1 * attn.col(i) + params.ff.b1;
    h = h.cwiseMax(0.0);
    out.col(i) += params.ff.w2 * h + params.ff.b2;
  }
  return out;
}

AttentionPattern complete_pattern(std::size_t n) {
  PatternConfig cfg;
  cfg.num_virtual = 0;
  return build_pattern(complete_graph(n), cfg).pattern;
}

LayerParams small_params(std::uint64_t seed, std::size_t d = 4, std::size_t heads = 2, std::size_t g = 0) {
  LayerDims dims;
  dims.model_dim = d;
  dims.heads = heads;
  dims.head_dim = 3;
  dims.ff_dim = 5;
  dims.edge_dim = 2;
  dims.num_virtual = g;
  return param_init(dims, seed);
}

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

TEST_CASE("single node with a self-loop") {
  auto p = build_pattern(edgeless_graph(1), PatternConfig{.use_local = true, .num_virtual = 0}).pattern;
  auto params = small_params(3, 4, 3);
  Rng rng(1);
  Eigen::MatrixXd x = random_matrix(rng, 4, 1);
  Eigen::VectorXd want = x.col(0);
  for (const auto& h : params.heads) want += h.output * h.value * x.col(0);
  CHECK(max_abs(attn_forward(p, x, params) - want) <= 1e-14);
  CHECK(max_abs(dense_reference_forward(x, params) - want) <= 1e-14);
}

TEST_CASE("complete pattern equals the dense reference") {
  Rng rng(2);
  auto p = complete_pattern(3);
  auto params = small_params(5);
  Eigen::MatrixXd x = random_matrix(rng, 4, 3);
  for (bool ef : {false, true}) {
    AttentionOptions opts{.edge_features = ef};
    CHECK(max_abs(attn_forward(p, x, params, opts) - dense_reference_forward(x, params, opts)) <= 1e-12);
  }
}

TEST_CASE("two equal nodes get equal outputs and even weights") {
  const std::vector<Edge> e{{0, 1, 1}};
  auto p = build_pattern(MultiGraph::from_edge_list(2, e), PatternConfig{.num_virtual = 0}).pattern;
  LayerParams params = small_params(1, 3, 1);
  auto& h = params.heads[0];
  h.key = h.query = h.value = Eigen::MatrixXd::Identity(3, 3);
  h.output = Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd x(3, 2);
  x << 0.3, 0.3, -0.2, -0.2, 0.7, 0.7;
  AttentionOptions opts{.edge_features = false};
  auto out = attn_forward(p, x, params, opts);
  CHECK(max_abs(out.col(0) - out.col(1)) == 0.0);
  const auto weights = attention_weights(p, x, params, opts);
  for (double w : weights[0]) CHECK(w == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(max_abs(out.col(0) - 2.0 * x.col(0)) <= 1e-15);
}

TEST_CASE("feedforward composition") {
  Rng rng(9);
  auto inst = random_attention_instance(rng, PatternFlags{.local = true, .global = true, .self_loops = true}, 12);
  auto params = inst.params;
  const auto attn = attn_forward(inst.pattern, inst.x, params, inst.options);

  SUBCASE("zeroed first layer gives attention only") {
    params.ff.w1.setZero();
    params.ff.b1.setZero();
    params.ff.b2.setZero();
    CHECK(max_abs(transformer_block_forward(inst.pattern, inst.x, params, inst.options) - attn) == 0.0);
  }
  SUBCASE("bias-only path adds c on one row") {
    params.ff.w2.setZero();
    params.ff.b2.setZero();
    params.ff.b2(1) = 0.75;
    Eigen::MatrixXd want = attn;
    want.row(1).array() += 0.75;
    CHECK(max_abs(transformer_block_forward(inst.pattern, inst.x, params, inst.options) - want) <= 1e-15);
  }
}

TEST_CASE("block forward equals the naive evaluator") {
  Rng rng(11);
  for (const auto& flags : pattern_flag_combinations()) {
    for (int trial = 0; trial < 5; ++trial) {
      auto inst = random_attention_instance(rng, flags, 12);
      for (bool scale : {false, true}) {
        auto opts = inst.options;
        opts.scale_logits = scale;
        const auto full = with_virtual_columns(inst.pattern, inst.x, inst.params);
        CHECK(max_abs(attn_forward(inst.pattern, inst.x, inst.params, opts) -
                      naive_block(inst.pattern, full, inst.params, opts, false)) <= 1e-12);
        CHECK(max_abs(transformer_block_forward(inst.pattern, inst.x, inst.params, opts) -
                      naive_block(inst.pattern, full, inst.params, opts, true)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("masked dense oracle equivalence") {
  Rng rng(12);
  for (const auto& flags : pattern_flag_combinations()) {
    for (int trial = 0; trial < 8; ++trial) {
      auto inst = random_attention_instance(rng, flags, 12);
      const auto full = with_virtual_columns(inst.pattern, inst.x, inst.params);
      const auto dense = dense_reference_forward(full, inst.params, dense_mask(inst.pattern), inst.options);
      CHECK(max_abs(attn_forward(inst.pattern, inst.x, inst.params, inst.options) - dense) <= 1e-10);
    }
  }
}

TEST_CASE("dense oracle budget") {
  auto params = small_params(1);
  CHECK_THROWS(dense_reference_forward(Eigen::MatrixXd::Zero(4, kDenseOracleBudget + 1), params));
}

TEST_CASE("softmax weights sum to one") {
  Rng rng(13);
  for (const auto& flags : pattern_flag_combinations()) {
    auto inst = random_attention_instance(rng, flags, 12);
    auto w = attention_weights(inst.pattern, inst.x, inst.params, inst.options);
    REQUIRE(w.size() == inst.params.num_heads());
    for (const auto& head : w) {
      REQUIRE(head.size() == inst.pattern.num_edges());
      for (NodeId t = 0; t < inst.pattern.num_nodes(); ++t) {
        const auto off = inst.pattern.edge_offset(t);
        const auto cnt = inst.pattern.incoming(t).size();
        const double s = std::accumulate(head.begin() + off, head.begin() + off + cnt, 0.0);
        CHECK(std::abs(s - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("large logits stay finite") {
  auto p = complete_pattern(4);
  auto params = small_params(2);
  Rng rng(3);
  Eigen::MatrixXd x = 200.0 * random_matrix(rng, 4, 4);
  auto out = attn_forward(p, x, params);
  CHECK(out.allFinite());
}

TEST_CASE("permutation equivariance") {
  Rng rng(14);
  for (const auto& flags : pattern_flag_combinations()) {
    for (int trial = 0; trial < 3; ++trial) {
      auto inst = random_attention_instance(rng, flags, 12);
      const auto& p = inst.pattern;
      const auto perm = rng.permutation<NodeId>(p.n_real());
      std::vector<NodeId> vid(p.n_virtual());
      std::iota(vid.begin(), vid.end(), NodeId{0});
      auto q = relabel_pattern(p, perm, vid);
      Eigen::MatrixXd xp(inst.x.rows(), inst.x.cols());
      for (std::size_t i = 0; i < p.n_real(); ++i) xp.col(perm[i]) = inst.x.col(i);
      for (Eigen::Index i = p.n_real(); i < inst.x.cols(); ++i) xp.col(i) = inst.x.col(i);
      const auto a = transformer_block_forward(p, inst.x, inst.params, inst.options);
      const auto b = transformer_block_forward(q, xp, inst.params, inst.options);
      double diff = 0.0;
      for (std::size_t i = 0; i < p.n_real(); ++i) diff = std::max(diff, max_abs(b.col(perm[i]) - a.col(i)));
      for (std::size_t i = p.n_real(); i < p.num_nodes(); ++i) diff = std::max(diff, max_abs(b.col(i) - a.col(i)));
      CHECK(diff <= 1e-10);
    }
  }
}

TEST_CASE("locality of a single layer") {
  Rng rng(15);
  for (const auto& flags : pattern_flag_combinations()) {
    auto inst = random_attention_instance(rng, flags, 12);
    const auto& p = inst.pattern;
    Eigen::MatrixXd x = with_virtual_columns(p, inst.x, inst.params);
    const auto base = attn_forward(p, x, inst.params, inst.options);
    for (NodeId u = 0; u < p.num_nodes(); ++u) {
      Eigen::MatrixXd y = x;
      y.col(u).array() += 0.5;
      const auto moved = attn_forward(p, y, inst.params, inst.options);
      for (NodeId i = 0; i < p.num_nodes(); ++i) {
        if (i == u || p.has_any_edge(u, i)) continue;
        CHECK((moved.col(i).array() == base.col(i).array()).all());
      }
    }
  }
}

TEST_CASE("score evaluations scale with edges, not nodes squared") {
  Rng rng(16);
  for (const auto& flags : pattern_flag_combinations()) {
    auto inst = random_attention_instance(rng, flags, 12);
    auto tr = block_forward_trace(inst.pattern, inst.x, inst.params, inst.options);
    CHECK(tr.score_evaluations == inst.pattern.num_edges() * inst.params.num_heads());
  }
}

TEST_CASE("forward preconditions") {
  auto params = small_params(1);
  SUBCASE("node without incoming edges") {
    auto p = build_pattern(path_graph(3), PatternConfig{.num_virtual = 0, .self_loops = false}).pattern;
    auto q = build_pattern(MultiGraph::from_edge_list(3, std::vector<Edge>{{0, 1, 1}}),
                           PatternConfig{.num_virtual = 0, .self_loops = false})
                 .pattern;
    CHECK_NOTHROW(attn_forward(p, Eigen::MatrixXd::Zero(4, 3), params));
    CHECK_THROWS_AS(attn_forward(q, Eigen::MatrixXd::Zero(4, 3), params), std::invalid_argument);
  }
  SUBCASE("shape mismatch") {
    auto p = complete_pattern(3);
    CHECK_THROWS_AS(attn_forward(p, Eigen::MatrixXd::Zero(5, 3), params), std::invalid_argument);
    CHECK_THROWS_AS(attn_forward(p, Eigen::MatrixXd::Zero(4, 2), params), std::invalid_argument);
  }
  SUBCASE("non-finite input") {
    auto p = complete_pattern(3);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 3);
    x(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(attn_forward(p, x, params), std::invalid_argument);
  }
  SUBCASE("local feature id beyond the table") {
    auto p = AttentionPattern::from_edges(2, 0, PatternFlags{.local = true},
                                          {{0, 1, EdgeKind::Local, 5}, {1, 0, EdgeKind::Local, 5}});
    CHECK_THROWS_AS(attn_forward(p, Eigen::MatrixXd::Zero(4, 2), params), std::invalid_argument);
  }
  SUBCASE("missing virtual parameters") {
    auto p = build_pattern(path_graph(3), PatternConfig{.num_virtual = 2}).pattern;
    CHECK_THROWS_AS(attn_forward(p, Eigen::MatrixXd::Zero(4, 3), params), std::invalid_argument);
  }
}

TEST_CASE("virtual columns come from virtual_node_init") {
  auto p = build_pattern(path_graph(3), PatternConfig{.num_virtual = 2}).pattern;
  auto params = small_params(4, 4, 2, 2);
  Rng rng(5);
  Eigen::MatrixXd x = random_matrix(rng, 4, 3);
  auto full = with_virtual_columns(p, x, params);
  REQUIRE(full.cols() == 5);
  CHECK(full.leftCols(3) == x);
  CHECK(full.rightCols(2) == params.virtual_node_init);
  CHECK(attn_forward(p, x, params) == attn_forward(p, full, params));
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(17);
  const double h = 1e-5;
  for (const auto& flags : pattern_flag_combinations()) {
    auto inst = random_attention_instance(rng, flags, 10);
    const auto& p = inst.pattern;
    Eigen::MatrixXd up = random_matrix(rng, inst.x.rows(), static_cast<Eigen::Index>(p.num_nodes()));
    auto objective = [&](const LayerParams& prm, const Eigen::MatrixXd& x) {
      return (up.array() * transformer_block_forward(p, x, prm, inst.options).array()).sum();
    };
    auto grads = attn_backward(p, inst.x, inst.params, up, inst.options);

    LayerParams work = inst.params;
    auto analytic = tensors(grads.params);
    auto live = tensors(work);
    REQUIRE(analytic.size() == live.size());
    double worst = 0.0;
    for (std::size_t t = 0; t < live.size(); ++t) {
      for (std::size_t j = 0; j < live[t].size; ++j) {
        const double keep = live[t].data[j];
        live[t].data[j] = keep + h;
        const double fp = objective(work, inst.x);
        live[t].data[j] = keep - h;
        const double fm = objective(work, inst.x);
        live[t].data[j] = keep;
        const double num = (fp - fm) / (2 * h);
        const double a = analytic[t].data[j];
        worst = std::max(worst, std::abs(a - num) / std::max({1.0, std::abs(a), std::abs(num)}));
      }
    }
    Eigen::MatrixXd x = inst.x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double keep = x.data()[j];
      x.data()[j] = keep + h;
      const double fp = objective(inst.params, x);
      x.data()[j] = keep - h;
      const double fm = objective(inst.params, x);
      x.data()[j] = keep;
      const double num = (fp - fm) / (2 * h);
      const double a = grads.input.data()[j];
      worst = std::max(worst, std::abs(a - num) / std::max({1.0, std::abs(a), std::abs(num)}));
    }
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("zero upstream gives zero gradients") {
  Rng rng(18);
  auto inst = random_attention_instance(rng, PatternFlags{true, true, true, true}, 12);
  auto g = attn_backward(inst.pattern, inst.x, inst.params,
                         Eigen::MatrixXd::Zero(inst.x.rows(), inst.pattern.num_nodes()), inst.options);
  for (const auto& t : tensors(g.params)) {
    for (std::size_t j = 0; j < t.size; ++j) CHECK(t.data[j] == 0.0);
  }
  CHECK(g.input.isZero(0.0));
}

TEST_CASE("residual path passes upstream straight to X") {
  Rng rng(19);
  auto inst = random_attention_instance(rng, PatternFlags{.local = true, .self_loops = true}, 12);
  for (auto& h : inst.params.heads) h.output.setZero();
  inst.params.ff.w2.setZero();
  Eigen::MatrixXd up = random_matrix(rng, inst.x.rows(), static_cast<Eigen::Index>(inst.pattern.num_nodes()));
  auto g = attn_backward(inst.pattern, inst.x, inst.params, up, inst.options);
  CHECK(g.input == up.leftCols(inst.x.cols()));
}

TEST_CASE("unused kinds get no gradient") {
  Rng rng(20);
  auto inst = random_attention_instance(rng, PatternFlags{.local = true, .self_loops = false}, 12);
  Eigen::MatrixXd up = random_matrix(rng, inst.x.rows(), static_cast<Eigen::Index>(inst.pattern.num_nodes()));
  auto g = attn_backward(inst.pattern, inst.x, inst.params, up, inst.options);
  CHECK(g.params.kind_embeddings.isZero(0.0));
}

TEST_CASE("param_init") {
  LayerDims dims{.model_dim = 6, .heads = 3, .head_dim = 4, .ff_dim = 7, .edge_dim = 2, .num_local_features = 3,
                 .num_virtual = 2};
  auto a = param_init(dims, 42);
  auto b = param_init(dims, 42);
  auto ta = tensors(a);
  auto tb = tensors(b);
  REQUIRE(ta.size() == tb.size());
  for (std::size_t t = 0; t < ta.size(); ++t) {
    CHECK(ta[t].name == tb[t].name);
    CHECK(std::equal(ta[t].data, ta[t].data + ta[t].size, tb[t].data));
  }
  CHECK(a.ff.b1.isZero(0.0));
  CHECK(a.ff.b2.isZero(0.0));
  CHECK_NOTHROW(a.validate());
  CHECK(a.num_heads() == 3);
  CHECK(a.virtual_node_init.cols() == 2);
  CHECK(a.local_edge_features.cols() == 3);

  auto glorot = [](const Eigen::MatrixXd& m) {
    const double lim = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    return m.cwiseAbs().maxCoeff() <= lim;
  };
  for (const auto& h : a.heads) {
    CHECK(glorot(h.key));
    CHECK(glorot(h.query));
    CHECK(glorot(h.value));
    CHECK(glorot(h.output));
    CHECK(glorot(h.edge));
  }
  CHECK(glorot(a.ff.w1));
  CHECK(glorot(a.ff.w2));
  CHECK(a.kind_embeddings.cwiseAbs().maxCoeff() <= 0.1);
  CHECK(a.local_edge_features.cwiseAbs().maxCoeff() <= 0.1);
  CHECK(a.virtual_node_init.cwiseAbs().maxCoeff() <= 0.1);

  auto c = param_init(dims, 43);
  CHECK_FALSE(c.heads[0].key == a.heads[0].key);
  dims.heads = 0;
  CHECK_THROWS_AS(param_init(dims, 1), std::invalid_argument);
}

TEST_CASE("LayerParams::validate catches shape errors") {
  auto p = small_params(1);
  p.heads[1].value = Eigen::MatrixXd::Zero(2, 4);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  auto q = small_params(1);
  q.ff.b1 = Eigen::VectorXd::Zero(9);
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
}
