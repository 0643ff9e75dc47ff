#include <cmath>
#include <stdexcept>
#include <string>

#include "exphormer/attention.hpp"
#include "exphormer/rng.hpp"

namespace exphormer {

namespace {

void expect_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw std::invalid_argument(name + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Eigen::MatrixXd uniform_matrix(Rng& rng, std::size_t rows, std::size_t cols, double bound) {
  Eigen::MatrixXd m(rows, cols);
  // Column-major fill order keeps the draw sequence tied to storage order.
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return m;
}

Eigen::MatrixXd glorot(Rng& rng, std::size_t rows, std::size_t cols) {
  return uniform_matrix(rng, rows, cols, std::sqrt(6.0 / static_cast<double>(rows + cols)));
}

void add_ref(std::vector<TensorRef>& out, std::string name, std::string group, Eigen::MatrixXd& m) {
  out.push_back({std::move(name), std::move(group), m.data(), static_cast<std::size_t>(m.size())});
}

void add_ref(std::vector<TensorRef>& out, std::string name, std::string group, Eigen::VectorXd& v) {
  out.push_back({std::move(name), std::move(group), v.data(), static_cast<std::size_t>(v.size())});
}

}  // namespace

LayerParams LayerParams::zeros_like() const {
  LayerParams z;
  for (const auto& h : heads) {
    z.heads.push_back({Eigen::MatrixXd::Zero(h.key.rows(), h.key.cols()),
                       Eigen::MatrixXd::Zero(h.query.rows(), h.query.cols()),
                       Eigen::MatrixXd::Zero(h.value.rows(), h.value.cols()),
                       Eigen::MatrixXd::Zero(h.output.rows(), h.output.cols()),
                       Eigen::MatrixXd::Zero(h.edge.rows(), h.edge.cols())});
  }
  z.ff.w1 = Eigen::MatrixXd::Zero(ff.w1.rows(), ff.w1.cols());
  z.ff.w2 = Eigen::MatrixXd::Zero(ff.w2.rows(), ff.w2.cols());
  z.ff.b1 = Eigen::VectorXd::Zero(ff.b1.size());
  z.ff.b2 = Eigen::VectorXd::Zero(ff.b2.size());
  z.kind_embeddings = Eigen::MatrixXd::Zero(kind_embeddings.rows(), kind_embeddings.cols());
  z.local_edge_features = Eigen::MatrixXd::Zero(local_edge_features.rows(), local_edge_features.cols());
  z.virtual_node_init = Eigen::MatrixXd::Zero(virtual_node_init.rows(), virtual_node_init.cols());
  return z;
}

void LayerParams::validate() const {
  if (heads.empty()) throw std::invalid_argument("layer needs at least one head");
  const auto d = static_cast<Eigen::Index>(model_dim());
  const auto m = static_cast<Eigen::Index>(head_dim());
  const auto r = static_cast<Eigen::Index>(ff_dim());
  const auto de = kind_embeddings.rows();
  if (d < 1 || m < 1 || r < 1 || de < 1) throw std::invalid_argument("layer dimensions must be positive");
  for (std::size_t j = 0; j < heads.size(); ++j) {
    const std::string tag = "head" + std::to_string(j) + ".";
    expect_shape(heads[j].key, m, d, tag + "W_K");
    expect_shape(heads[j].query, m, d, tag + "W_Q");
    expect_shape(heads[j].value, m, d, tag + "W_V");
    expect_shape(heads[j].output, d, m, tag + "W_O");
    expect_shape(heads[j].edge, m, de, tag + "W_E");
  }
  expect_shape(ff.w1, r, d, "ff.W_1");
  expect_shape(ff.w2, d, r, "ff.W_2");
  expect_shape(kind_embeddings, de, static_cast<Eigen::Index>(kEmbeddedKinds.size()), "kind_embeddings");
  if (local_edge_features.rows() != de) throw std::invalid_argument("local_edge_features rows must equal edge_dim");
  if (virtual_node_init.rows() != d && virtual_node_init.cols() > 0) {
    throw std::invalid_argument("virtual_node_init rows must equal model_dim");
  }
}

std::vector<TensorRef> tensors(LayerParams& params) {
  std::vector<TensorRef> out;
  for (std::size_t j = 0; j < params.heads.size(); ++j) {
    const std::string tag = "head" + std::to_string(j) + ".";
    add_ref(out, tag + "W_K", "W_K", params.heads[j].key);
    add_ref(out, tag + "W_Q", "W_Q", params.heads[j].query);
    add_ref(out, tag + "W_V", "W_V", params.heads[j].value);
    add_ref(out, tag + "W_O", "W_O", params.heads[j].output);
    add_ref(out, tag + "W_E", "W_E", params.heads[j].edge);
  }
  add_ref(out, "ff.W_1", "W_1", params.ff.w1);
  add_ref(out, "ff.W_2", "W_2", params.ff.w2);
  add_ref(out, "ff.b_1", "b_1", params.ff.b1);
  add_ref(out, "ff.b_2", "b_2", params.ff.b2);
  add_ref(out, "kind_embeddings", "kind_embeddings", params.kind_embeddings);
  add_ref(out, "local_edge_features", "local_edge_features", params.local_edge_features);
  add_ref(out, "virtual_node_init", "virtual_node_init", params.virtual_node_init);
  return out;
}

LayerParams param_init(const LayerDims& dims, std::uint64_t seed) {
  if (dims.model_dim == 0 || dims.heads == 0 || dims.head_dim == 0 || dims.ff_dim == 0 || dims.edge_dim == 0) {
    throw std::invalid_argument("param_init: dimensions must be positive");
  }
  Rng rng(seed);
  LayerParams p;
  const auto d = dims.model_dim;
  const auto m = dims.head_dim;
  for (std::size_t j = 0; j < dims.heads; ++j) {
    HeadParams h;
    h.key = glorot(rng, m, d);
    h.query = glorot(rng, m, d);
    h.value = glorot(rng, m, d);
    h.output = glorot(rng, d, m);
    h.edge = glorot(rng, m, dims.edge_dim);
    p.heads.push_back(std::move(h));
  }
  p.ff.w1 = glorot(rng, dims.ff_dim, d);
  p.ff.w2 = glorot(rng, d, dims.ff_dim);
  p.ff.b1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims.ff_dim));
  p.ff.b2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  p.kind_embeddings = uniform_matrix(rng, dims.edge_dim, kEmbeddedKinds.size(), 0.1);
  p.local_edge_features = uniform_matrix(rng, dims.edge_dim, dims.num_local_features, 0.1);
  p.virtual_node_init = uniform_matrix(rng, d, dims.num_virtual, 0.1);
  return p;
}

}  // namespace exphormer
