#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

#include "exphormer/attention.hpp"
#include "exphormer/error.hpp"

namespace exphormer {

namespace {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

DenseMask empty_mask(std::size_t nodes) {
  const auto n = static_cast<Eigen::Index>(nodes);
  DenseMask mask;
  mask.local_feature = Eigen::MatrixXi::Constant(n, n, -1);
  for (auto& present : mask.kind_present) present = BoolMatrix::Constant(n, n, false);
  return mask;
}

std::size_t embedded_slot(EdgeKind k) {
  for (std::size_t i = 0; i < kEmbeddedKinds.size(); ++i) {
    if (kEmbeddedKinds[i] == k) return i;
  }
  throw std::invalid_argument("kind has no embedding slot");
}

}  // namespace

DenseMask dense_mask(const AttentionPattern& p) {
  DenseMask mask = empty_mask(p.num_nodes());
  for (NodeId t = 0; t < p.num_nodes(); ++t) {
    for (const auto& e : p.incoming(t)) {
      if (e.kind == EdgeKind::Local) {
        mask.local_feature(t, e.source) = e.feature;
      } else {
        mask.kind_present[embedded_slot(e.kind)](t, e.source) = true;
      }
    }
  }
  return mask;
}

DenseMask complete_mask(std::size_t nodes) {
  DenseMask mask = empty_mask(nodes);
  mask.local_feature.setZero();
  mask.local_feature.diagonal().setConstant(-1);
  mask.kind_present[embedded_slot(EdgeKind::SelfLoop)].diagonal().setConstant(true);
  return mask;
}

Embeddings dense_reference_forward(const Embeddings& x, const LayerParams& params, const AttentionOptions& opts) {
  return dense_reference_forward(x, params, complete_mask(static_cast<std::size_t>(x.cols())), opts);
}

Embeddings dense_reference_forward(const Embeddings& x, const LayerParams& params, const DenseMask& mask,
                                   const AttentionOptions& opts) {
  const auto n = x.cols();
  if (static_cast<std::size_t>(n) > kDenseOracleBudget) {
    throw BudgetExceeded("dense reference limited to " + std::to_string(kDenseOracleBudget) + " nodes");
  }
  if (mask.nodes() != static_cast<std::size_t>(n)) throw std::invalid_argument("mask size does not match embeddings");
  params.validate();
  if (static_cast<std::size_t>(x.rows()) != params.model_dim()) throw std::invalid_argument("embedding rows != model_dim");

  const auto n_local = params.local_edge_features.cols();
  Eigen::MatrixXd table(params.edge_dim(), n_local + params.kind_embeddings.cols());
  table << params.local_edge_features, params.kind_embeddings;
  const double scale = opts.scale_logits ? 1.0 / std::sqrt(static_cast<double>(params.head_dim())) : 1.0;
  const double neg_inf = -std::numeric_limits<double>::infinity();

  std::set<int> local_ids;
  for (Eigen::Index i = 0; i < mask.local_feature.size(); ++i) {
    const int f = mask.local_feature.data()[i];
    if (f < -1 || f >= n_local) throw std::invalid_argument("mask references a missing local feature");
    if (f >= 0) local_ids.insert(f);
  }

  Embeddings result = x;
  for (const auto& head : params.heads) {
    const Eigen::MatrixXd q = head.query * x;
    const Eigen::MatrixXd k = head.key * x;
    const Eigen::MatrixXd v = head.value * x;
    const Eigen::MatrixXd ef =
        opts.edge_features ? Eigen::MatrixXd(head.edge * table) : Eigen::MatrixXd::Ones(head.key.rows(), table.cols());

    // One logit slab per feature column: S = scale * Q^T diag(ef) K, rows are
    // queries. Absent entries are -inf.
    std::vector<Eigen::MatrixXd> slabs;
    auto bilinear = [&](Eigen::Index col) -> Eigen::MatrixXd {
      return scale * (q.transpose() * ef.col(col).asDiagonal() * k);
    };
    for (int f : local_ids) {
      Eigen::MatrixXd s = bilinear(f);
      s = (mask.local_feature.array() == f).select(s, neg_inf);
      slabs.push_back(std::move(s));
    }
    for (std::size_t slot = 0; slot < kEmbeddedKinds.size(); ++slot) {
      if (!mask.kind_present[slot].any()) continue;
      Eigen::MatrixXd s = bilinear(n_local + static_cast<Eigen::Index>(slot));
      s = mask.kind_present[slot].select(s, neg_inf);
      slabs.push_back(std::move(s));
    }
    if (slabs.empty()) throw std::invalid_argument("mask has no edges");

    Eigen::VectorXd row_max = Eigen::VectorXd::Constant(n, neg_inf);
    for (const auto& s : slabs) row_max = row_max.cwiseMax(s.rowwise().maxCoeff());
    if (!row_max.allFinite()) throw std::invalid_argument("a query node has no incoming edges in the mask");

    Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(n, n);  // summed over slabs
    for (const auto& s : slabs) weights += (s.colwise() - row_max).array().exp().matrix();
    const Eigen::VectorXd normalizer = weights.rowwise().sum();
    weights = normalizer.cwiseInverse().asDiagonal() * weights;

    result += head.output * (v * weights.transpose());
  }
  return result;
}

}  // namespace exphormer
