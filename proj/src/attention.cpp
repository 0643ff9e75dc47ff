#include "exphormer/attention.hpp"
#include "exphormer/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace exphormer {

namespace {

// [local_edge_features | kind_embeddings]
Eigen::MatrixXd feature_table(const LayerParams& params) {
  Eigen::MatrixXd table(params.edge_dim(), params.local_edge_features.cols() + params.kind_embeddings.cols());
  table << params.local_edge_features, params.kind_embeddings;
  return table;
}

std::uint32_t resolve_column(const PatternEdge& e, std::size_t n_local) {
  switch (e.kind) {
    case EdgeKind::Local:
      if (e.feature < 0 || static_cast<std::size_t>(e.feature) >= n_local) {
        throw std::invalid_argument("local edge feature index " + std::to_string(e.feature) +
                                    " has no row in local_edge_features");
      }
      return static_cast<std::uint32_t>(e.feature);
    case EdgeKind::Expander: return static_cast<std::uint32_t>(n_local);
    case EdgeKind::Global: return static_cast<std::uint32_t>(n_local + 1);
    case EdgeKind::SelfLoop: return static_cast<std::uint32_t>(n_local + 2);
  }
  throw std::invalid_argument("unknown edge kind");
}

double logit_scale(const LayerParams& params, const AttentionOptions& opts) {
  return opts.scale_logits ? 1.0 / std::sqrt(static_cast<double>(params.head_dim())) : 1.0;
}

Eigen::MatrixXd edge_factor(const HeadParams& head, const Eigen::MatrixXd& table, const AttentionOptions& opts) {
  if (opts.edge_features) return head.edge * table;
  return Eigen::MatrixXd::Ones(head.key.rows(), table.cols());
}

}  // namespace

Embeddings with_virtual_columns(const AttentionPattern& p, const Embeddings& x, const LayerParams& params) {
  const auto n_total = static_cast<Eigen::Index>(p.num_nodes());
  const auto n_real = static_cast<Eigen::Index>(p.n_real());
  if (x.cols() == n_total) return x;
  if (x.cols() != n_real) {
    throw std::invalid_argument("embeddings have " + std::to_string(x.cols()) + " columns; pattern expects " +
                                std::to_string(n_real) + " or " + std::to_string(n_total));
  }
  if (params.virtual_node_init.cols() != n_total - n_real || params.virtual_node_init.rows() != x.rows()) {
    throw std::invalid_argument("virtual_node_init shape does not match pattern's virtual node count");
  }
  Embeddings full(x.rows(), n_total);
  full << x, params.virtual_node_init;
  return full;
}

BlockTrace block_forward_trace(const AttentionPattern& p, const Embeddings& x, const LayerParams& params,
                               const AttentionOptions& opts) {
  params.validate();
  if (static_cast<std::size_t>(x.rows()) != params.model_dim()) {
    throw std::invalid_argument("embedding rows " + std::to_string(x.rows()) + " != model_dim " +
                                std::to_string(params.model_dim()));
  }
  BlockTrace tr;
  tr.x = with_virtual_columns(p, x, params);
  tr.appended_virtual = tr.x.cols() != x.cols();
  if (!tr.x.allFinite()) throw NonFiniteInput("embeddings contain non-finite entries");

  const std::size_t n = p.num_nodes();
  const auto n_local = static_cast<std::size_t>(params.local_edge_features.cols());
  tr.edge_column.reserve(p.num_edges());
  for (NodeId t = 0; t < n; ++t) {
    const auto in = p.incoming(t);
    if (in.empty()) throw std::invalid_argument("node " + std::to_string(t) + " has no incoming pattern edges");
    for (const auto& e : in) tr.edge_column.push_back(resolve_column(e, n_local));
  }

  const Eigen::MatrixXd table = feature_table(params);
  const double scale = logit_scale(params, opts);
  const auto m = static_cast<Eigen::Index>(params.head_dim());
  std::vector<double> scores;

  tr.attn = tr.x;
  for (const auto& head : params.heads) {
    Eigen::MatrixXd q = head.query * tr.x;
    Eigen::MatrixXd k = head.key * tr.x;
    Eigen::MatrixXd v = head.value * tr.x;
    Eigen::MatrixXd ef = edge_factor(head, table, opts);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(n));
    std::vector<double> weights(p.num_edges());

    for (NodeId t = 0; t < n; ++t) {
      const auto in = p.incoming(t);
      const std::size_t off = p.edge_offset(t);
      scores.resize(in.size());
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < in.size(); ++j) {
        const auto col = tr.edge_column[off + j];
        scores[j] = scale * (ef.col(col).cwiseProduct(k.col(in[j].source))).dot(q.col(t));
        top = std::max(top, scores[j]);
      }
      tr.score_evaluations += in.size();
      double total = 0.0;
      for (double& s : scores) {
        s = std::exp(s - top);
        total += s;
      }
      for (std::size_t j = 0; j < in.size(); ++j) {
        const double w = scores[j] / total;
        weights[off + j] = w;
        out.col(t) += w * v.col(in[j].source);
      }
    }
    tr.attn.noalias() += head.output * out;
    tr.q.push_back(std::move(q));
    tr.k.push_back(std::move(k));
    tr.v.push_back(std::move(v));
    tr.edge_factor.push_back(std::move(ef));
    tr.head_out.push_back(std::move(out));
    tr.weights.push_back(std::move(weights));
  }

  tr.pre_activation = params.ff.w1 * tr.attn;
  tr.pre_activation.colwise() += params.ff.b1;
  tr.output = tr.attn + params.ff.w2 * tr.pre_activation.cwiseMax(0.0);
  tr.output.colwise() += params.ff.b2;
  return tr;
}

Embeddings attn_forward(const AttentionPattern& p, const Embeddings& x, const LayerParams& params,
                        const AttentionOptions& opts) {
  return block_forward_trace(p, x, params, opts).attn;
}

Embeddings transformer_block_forward(const AttentionPattern& p, const Embeddings& x, const LayerParams& params,
                                     const AttentionOptions& opts) {
  return block_forward_trace(p, x, params, opts).output;
}

std::vector<std::vector<double>> attention_weights(const AttentionPattern& p, const Embeddings& x,
                                                   const LayerParams& params, const AttentionOptions& opts) {
  return block_forward_trace(p, x, params, opts).weights;
}

Gradients block_backward(const AttentionPattern& p, const LayerParams& params, const BlockTrace& tr,
                         const Embeddings& upstream, const AttentionOptions& opts) {
  if (upstream.rows() != tr.output.rows() || upstream.cols() != tr.output.cols()) {
    throw std::invalid_argument("upstream gradient shape does not match block output");
  }
  if (!upstream.allFinite()) throw NonFiniteInput("upstream gradient contains non-finite entries");

  Gradients g{params.zeros_like(), {}};
  const Eigen::MatrixXd hidden = tr.pre_activation.cwiseMax(0.0);

  // FF(X) = A + W2 relu(W1 A + b1) + b2
  g.params.ff.w2 = upstream * hidden.transpose();
  g.params.ff.b2 = upstream.rowwise().sum();
  const Eigen::MatrixXd d_pre =
      (params.ff.w2.transpose() * upstream).cwiseProduct((tr.pre_activation.array() > 0.0).cast<double>().matrix());
  g.params.ff.w1 = d_pre * tr.attn.transpose();
  g.params.ff.b1 = d_pre.rowwise().sum();
  const Eigen::MatrixXd d_attn = upstream + params.ff.w1.transpose() * d_pre;

  Eigen::MatrixXd dx = d_attn;  // residual path
  const Eigen::MatrixXd table = feature_table(params);
  Eigen::MatrixXd d_table = Eigen::MatrixXd::Zero(table.rows(), table.cols());
  const double scale = logit_scale(params, opts);
  const std::size_t n = p.num_nodes();
  std::vector<double> d_weight;

  for (std::size_t h = 0; h < params.heads.size(); ++h) {
    const auto& head = params.heads[h];
    auto& gh = g.params.heads[h];
    const auto& q = tr.q[h];
    const auto& k = tr.k[h];
    const auto& v = tr.v[h];
    const auto& ef = tr.edge_factor[h];
    const auto& w = tr.weights[h];

    const Eigen::MatrixXd d_out = head.output.transpose() * d_attn;
    gh.output = d_attn * tr.head_out[h].transpose();

    Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(q.rows(), q.cols());
    Eigen::MatrixXd dk = Eigen::MatrixXd::Zero(k.rows(), k.cols());
    Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(v.rows(), v.cols());
    Eigen::MatrixXd d_ef = Eigen::MatrixXd::Zero(ef.rows(), ef.cols());

    for (NodeId t = 0; t < n; ++t) {
      const auto in = p.incoming(t);
      const std::size_t off = p.edge_offset(t);
      d_weight.resize(in.size());
      double mean = 0.0;
      for (std::size_t j = 0; j < in.size(); ++j) {
        const NodeId u = in[j].source;
        d_weight[j] = d_out.col(t).dot(v.col(u));
        dv.col(u) += w[off + j] * d_out.col(t);
        mean += w[off + j] * d_weight[j];
      }
      for (std::size_t j = 0; j < in.size(); ++j) {
        const NodeId u = in[j].source;
        const auto col = tr.edge_column[off + j];
        const double d_score = scale * w[off + j] * (d_weight[j] - mean);
        dq.col(t) += d_score * ef.col(col).cwiseProduct(k.col(u));
        dk.col(u) += d_score * ef.col(col).cwiseProduct(q.col(t));
        if (opts.edge_features) d_ef.col(col) += d_score * k.col(u).cwiseProduct(q.col(t));
      }
    }

    gh.query = dq * tr.x.transpose();
    gh.key = dk * tr.x.transpose();
    gh.value = dv * tr.x.transpose();
    dx.noalias() += head.query.transpose() * dq;
    dx.noalias() += head.key.transpose() * dk;
    dx.noalias() += head.value.transpose() * dv;
    if (opts.edge_features) {
      gh.edge = d_ef * table.transpose();
      d_table.noalias() += head.edge.transpose() * d_ef;
    }
  }

  const auto n_local = params.local_edge_features.cols();
  g.params.local_edge_features = d_table.leftCols(n_local);
  g.params.kind_embeddings = d_table.rightCols(params.kind_embeddings.cols());

  if (tr.appended_virtual) {
    const auto n_real = static_cast<Eigen::Index>(p.n_real());
    g.params.virtual_node_init = dx.rightCols(dx.cols() - n_real);
    g.input = dx.leftCols(n_real);
  } else {
    g.input = std::move(dx);
  }
  return g;
}

Gradients attn_backward(const AttentionPattern& p, const Embeddings& x, const LayerParams& params,
                        const Embeddings& upstream, const AttentionOptions& opts) {
  return block_backward(p, params, block_forward_trace(p, x, params, opts), upstream, opts);
}

}  // namespace exphormer
