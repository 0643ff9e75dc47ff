#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "exphormer/pattern.hpp"

namespace exphormer {

// model_dim x nodes; column i is the state of node i.
using Embeddings = Eigen::MatrixXd;

struct HeadParams {
  Eigen::MatrixXd key;     // head_dim x model_dim
  Eigen::MatrixXd query;   // head_dim x model_dim
  Eigen::MatrixXd value;   // head_dim x model_dim
  Eigen::MatrixXd output;  // model_dim x head_dim
  Eigen::MatrixXd edge;    // head_dim x edge_dim
};

struct FeedForwardParams {
  Eigen::MatrixXd w1;  // ff_dim x model_dim
  Eigen::MatrixXd w2;  // model_dim x ff_dim
  Eigen::VectorXd b1;  // ff_dim
  Eigen::VectorXd b2;  // model_dim
};

// Columns of kind_embeddings, in this order.
inline constexpr std::array<EdgeKind, 3> kEmbeddedKinds = {EdgeKind::Expander, EdgeKind::Global, EdgeKind::SelfLoop};

struct LayerParams {
  std::vector<HeadParams> heads;
  FeedForwardParams ff;
  Eigen::MatrixXd kind_embeddings;      // edge_dim x 3
  Eigen::MatrixXd local_edge_features;  // edge_dim x (number of dataset feature ids)
  Eigen::MatrixXd virtual_node_init;    // model_dim x num_virtual

  std::size_t model_dim() const { return static_cast<std::size_t>(ff.b2.size()); }
  std::size_t head_dim() const { return heads.empty() ? 0 : static_cast<std::size_t>(heads.front().key.rows()); }
  std::size_t num_heads() const { return heads.size(); }
  std::size_t ff_dim() const { return static_cast<std::size_t>(ff.b1.size()); }
  std::size_t edge_dim() const { return static_cast<std::size_t>(kind_embeddings.rows()); }

  // Same shapes, all zeros.
  LayerParams zeros_like() const;

  // Throws std::invalid_argument naming the first inconsistent shape.
  void validate() const;
};

struct LayerDims {
  std::size_t model_dim = 16;
  std::size_t heads = 2;
  std::size_t head_dim = 8;
  std::size_t ff_dim = 32;
  std::size_t edge_dim = 4;
  std::size_t num_local_features = 1;
  std::size_t num_virtual = 1;
};

// Projections ~ U[-a, a] with a = sqrt(6 / (fan_in + fan_out)); biases zero;
// kind embeddings, local edge features and virtual node states ~ U[-0.1, 0.1].
LayerParams param_init(const LayerDims& dims, std::uint64_t seed);

// A named view of one parameter tensor (column-major storage).
struct TensorRef {
  std::string name;   // e.g. "head1.W_Q", "ff.b_2"
  std::string group;  // e.g. "W_Q", "b_2", "kind_embeddings"
  double* data = nullptr;
  std::size_t size = 0;
};

// Every tensor of the layer in a fixed order.
std::vector<TensorRef> tensors(LayerParams& params);

struct AttentionOptions {
  // Off replaces the edge-feature factor by all-ones.
  bool edge_features = true;
  // Scale logits by 1/sqrt(head_dim). Off by default.
  bool scale_logits = false;
};

struct Gradients {
  LayerParams params;
  Embeddings input;  // same shape as the X passed in
};

// Intermediate values of one transformer block, kept for the backward pass.
struct BlockTrace {
  bool appended_virtual = false;  // X had n_real columns and virtual_node_init was appended
  Embeddings x;                   // full input, model_dim x N
  std::vector<Eigen::MatrixXd> q, k, v;  // per head, head_dim x N
  std::vector<Eigen::MatrixXd> edge_factor;  // per head, head_dim x feature columns
  std::vector<Eigen::MatrixXd> head_out;     // per head, head_dim x N
  std::vector<std::vector<double>> weights;  // per head, one per pattern edge
  std::vector<std::uint32_t> edge_column;    // resolved feature column per pattern edge
  Embeddings attn;                           // Attn_H(X)
  Eigen::MatrixXd pre_activation;            // W_1 Attn + b_1
  Embeddings output;                         // FF(X)
  std::size_t score_evaluations = 0;
};

// X may have n_real columns (virtual_node_init columns are appended) or
// pattern.num_nodes() columns (used as is). Outputs always have
// pattern.num_nodes() columns.
Embeddings attn_forward(const AttentionPattern& p, const Embeddings& x, const LayerParams& params,
                        const AttentionOptions& opts = {});

Embeddings transformer_block_forward(const AttentionPattern& p, const Embeddings& x, const LayerParams& params,
                                     const AttentionOptions& opts = {});

BlockTrace block_forward_trace(const AttentionPattern& p, const Embeddings& x, const LayerParams& params,
                               const AttentionOptions& opts = {});

// Reverse pass of transformer_block_forward for the cotangent `upstream`
// (model_dim x N).
Gradients block_backward(const AttentionPattern& p, const LayerParams& params, const BlockTrace& trace,
                         const Embeddings& upstream, const AttentionOptions& opts = {});

Gradients attn_backward(const AttentionPattern& p, const Embeddings& x, const LayerParams& params,
                        const Embeddings& upstream, const AttentionOptions& opts = {});

// Softmax weights per head, aligned with the pattern's global edge order.
std::vector<std::vector<double>> attention_weights(const AttentionPattern& p, const Embeddings& x,
                                                   const LayerParams& params, const AttentionOptions& opts = {});

// X with virtual_node_init appended when it has only the real columns.
Embeddings with_virtual_columns(const AttentionPattern& p, const Embeddings& x, const LayerParams& params);

// ---- dense oracle ---------------------------------------------------------

inline constexpr std::size_t kDenseOracleBudget = 64;

// Per (target row, source column): dataset feature of the Local edge (-1 when
// absent) and presence of each embedded kind.
struct DenseMask {
  Eigen::MatrixXi local_feature;
  std::array<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>, 3> kind_present;  // kEmbeddedKinds order

  std::size_t nodes() const { return static_cast<std::size_t>(local_feature.rows()); }
};

DenseMask dense_mask(const AttentionPattern& p);

// Fully connected with self-loops: Local (feature 0) off the diagonal,
// SelfLoop on it. Matches build_pattern on a complete graph.
DenseMask complete_mask(std::size_t nodes);

// Attention only (no feedforward), evaluated with dense score matrices and
// -inf logits on absent edges. X must carry every node's column.
Embeddings dense_reference_forward(const Embeddings& x, const LayerParams& params, const AttentionOptions& opts = {});
Embeddings dense_reference_forward(const Embeddings& x, const LayerParams& params, const DenseMask& mask,
                                   const AttentionOptions& opts = {});

}  // namespace exphormer
