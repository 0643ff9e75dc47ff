#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "exphormer/error.hpp"
#include "exphormer/train.hpp"

namespace exphormer {

namespace {

Eigen::MatrixXd glorot(Rng& rng, std::size_t rows, std::size_t cols) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-a, a);
  return m;
}

struct ForwardPass {
  Eigen::MatrixXd h0;  // encoded real nodes, model_dim x n_real
  std::vector<BlockTrace> traces;
  Eigen::MatrixXd logits;  // classes x n_real
};

ForwardPass run_forward(const Model& model, const AttentionPattern& p, const Eigen::MatrixXd& features,
                        const AttentionOptions& opts) {
  if (static_cast<std::size_t>(features.rows()) != p.n_real()) {
    throw std::invalid_argument("feature rows " + std::to_string(features.rows()) + " != pattern n_real " +
                                std::to_string(p.n_real()));
  }
  if (features.cols() != model.input_weight.cols()) throw std::invalid_argument("feature width does not match model");
  ForwardPass fp;
  fp.h0 = model.input_weight * features.transpose();
  fp.h0.colwise() += model.input_bias;
  const Eigen::MatrixXd* h = &fp.h0;
  for (const auto& layer : model.layers) {
    fp.traces.push_back(block_forward_trace(p, *h, layer, opts));
    h = &fp.traces.back().output;
  }
  const auto n_real = static_cast<Eigen::Index>(p.n_real());
  fp.logits = model.readout_weight * h->leftCols(n_real);
  fp.logits.colwise() += model.readout_bias;
  return fp;
}

void add_into(Model& acc, Model& g) {
  auto a = acc.tensors();
  auto b = g.tensors();
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].size; ++j) a[i].data[j] += b[i].data[j];
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (layers == 0 || model_dim == 0 || heads == 0 || head_dim == 0 || ff_dim == 0 || edge_dim == 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw std::invalid_argument("adam_eps must be positive");
  // The expander's n is filled in per graph, so only its other fields are checked here.
  PatternConfig p = pattern;
  if (p.expander) p.expander->n = std::max<std::size_t>(3, p.expander->d + 1);
  p.validate();
}

Model Model::zeros_like() const {
  Model z;
  z.input_weight = Eigen::MatrixXd::Zero(input_weight.rows(), input_weight.cols());
  z.input_bias = Eigen::VectorXd::Zero(input_bias.size());
  for (const auto& l : layers) z.layers.push_back(l.zeros_like());
  z.readout_weight = Eigen::MatrixXd::Zero(readout_weight.rows(), readout_weight.cols());
  z.readout_bias = Eigen::VectorXd::Zero(readout_bias.size());
  return z;
}

std::vector<TensorRef> Model::tensors() {
  std::vector<TensorRef> out;
  out.push_back({"input.W", "input_weight", input_weight.data(), static_cast<std::size_t>(input_weight.size())});
  out.push_back({"input.b", "input_bias", input_bias.data(), static_cast<std::size_t>(input_bias.size())});
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (auto& t : exphormer::tensors(layers[l])) {
      t.name = "layer" + std::to_string(l) + "." + t.name;
      out.push_back(std::move(t));
    }
  }
  out.push_back({"readout.W", "readout_weight", readout_weight.data(),
                 static_cast<std::size_t>(readout_weight.size())});
  out.push_back({"readout.b", "readout_bias", readout_bias.data(), static_cast<std::size_t>(readout_bias.size())});
  return out;
}

Model model_init(const TrainConfig& cfg, std::size_t feature_dim, std::size_t num_classes, std::size_t num_virtual,
                 std::uint64_t seed) {
  cfg.validate();
  if (feature_dim == 0 || num_classes < 2) throw std::invalid_argument("need feature_dim >= 1 and >= 2 classes");
  Model m;
  Rng rng(derive_seed(seed, cfg.layers));
  m.input_weight = glorot(rng, cfg.model_dim, feature_dim);
  m.input_bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cfg.model_dim));
  m.readout_weight = glorot(rng, num_classes, cfg.model_dim);
  m.readout_bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_classes));
  LayerDims dims{cfg.model_dim, cfg.heads, cfg.head_dim, cfg.ff_dim, cfg.edge_dim, 1, num_virtual};
  for (std::size_t l = 0; l < cfg.layers; ++l) m.layers.push_back(param_init(dims, derive_seed(seed, l)));
  return m;
}

Eigen::MatrixXd model_logits(const Model& model, const AttentionPattern& p, const Eigen::MatrixXd& features,
                             const AttentionOptions& opts) {
  return run_forward(model, p, features, opts).logits;
}

LossAndGrad model_loss_and_grad(const Model& model, const AttentionPattern& p, const GraphSample& sample,
                                const AttentionOptions& opts, double weight) {
  ForwardPass fp = run_forward(model, p, sample.features, opts);
  const auto n_real = fp.logits.cols();
  if (sample.labels.size() != static_cast<std::size_t>(n_real)) throw std::invalid_argument("label count mismatch");

  LossAndGrad out;
  Eigen::MatrixXd d_logits(fp.logits.rows(), n_real);
  for (Eigen::Index i = 0; i < n_real; ++i) {
    const int y = sample.labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= fp.logits.rows()) throw std::invalid_argument("label out of range");
    const auto col = fp.logits.col(i);
    Eigen::Index best = 0;
    const double top = col.maxCoeff(&best);
    const Eigen::VectorXd e = (col.array() - top).exp().matrix();
    const double z = e.sum();
    out.loss += std::log(z) + top - col(y);
    if (best == y) ++out.correct;
    d_logits.col(i) = e / z;
    d_logits(y, i) -= 1.0;
  }
  d_logits *= weight;

  out.grad = model.zeros_like();
  const Eigen::MatrixXd& last = model.layers.empty() ? fp.h0 : fp.traces.back().output;
  out.grad.readout_weight = d_logits * last.leftCols(n_real).transpose();
  out.grad.readout_bias = d_logits.rowwise().sum();

  Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(last.rows(), last.cols());
  dh.leftCols(n_real) = model.readout_weight.transpose() * d_logits;
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    Gradients g = block_backward(p, model.layers[l], fp.traces[l], dh, opts);
    out.grad.layers[l] = std::move(g.params);
    dh = std::move(g.input);
  }
  out.grad.input_weight = dh * sample.features;
  out.grad.input_bias = dh.rowwise().sum();
  return out;
}

std::vector<AttentionPattern> task_patterns(const SyntheticTask& task, const PatternConfig& cfg) {
  std::vector<AttentionPattern> patterns;
  patterns.reserve(task.graphs.size());
  for (std::size_t i = 0; i < task.graphs.size(); ++i) {
    PatternConfig c = cfg;
    if (c.expander) {
      c.expander->n = task.graphs[i].graph.num_nodes();
      c.expander->seed = derive_seed(task.seed ^ cfg.expander->seed, i);
    }
    patterns.push_back(build_pattern(task.graphs[i].graph, c).pattern);
  }
  return patterns;
}

double accuracy(const Model& model, const std::vector<AttentionPattern>& patterns, const SyntheticTask& task,
                std::span<const std::size_t> indices, const AttentionOptions& opts) {
  std::size_t correct = 0;
  std::size_t total = 0;
  for (std::size_t idx : indices) {
    const auto& s = task.graphs.at(idx);
    const Eigen::MatrixXd logits = model_logits(model, patterns.at(idx), s.features, opts);
    for (Eigen::Index i = 0; i < logits.cols(); ++i) {
      Eigen::Index best = 0;
      logits.col(i).maxCoeff(&best);
      if (best == s.labels[static_cast<std::size_t>(i)]) ++correct;
    }
    total += static_cast<std::size_t>(logits.cols());
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

TrainReport train_loop(const SyntheticTask& task, const TrainConfig& cfg) {
  cfg.validate();
  if (task.graphs.empty() || task.train.empty()) throw std::invalid_argument("task has no training graphs");
  const auto patterns = task_patterns(task, cfg.pattern);
  const auto feature_dim = static_cast<std::size_t>(task.graphs.front().features.cols());
  Model model = model_init(cfg, feature_dim, task.num_classes, cfg.pattern.num_virtual, cfg.seed);

  TrainReport report;
  for (const auto& p : patterns) {
    const EdgeBudget b = edge_budget(p);
    report.edge_budget.local += b.local;
    report.edge_budget.expander += b.expander;
    report.edge_budget.global += b.global;
    report.edge_budget.self_loop += b.self_loop;
  }
  report.initial_train_accuracy = accuracy(model, patterns, task, task.train, cfg.attention);
  report.initial_test_accuracy = accuracy(model, patterns, task, task.test, cfg.attention);

  std::vector<Eigen::VectorXd> first;
  std::vector<Eigen::VectorXd> second;
  for (const auto& t : model.tensors()) {
    first.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.size)));
    second.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.size)));
  }

  Rng batch_rng(derive_seed(cfg.seed, 0x5eedULL));
  std::vector<std::size_t> batch(cfg.batch_size);
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    std::size_t nodes = 0;
    for (auto& b : batch) {
      b = task.train[batch_rng.below(task.train.size())];
      nodes += task.graphs[b].labels.size();
    }
    const double weight = 1.0 / static_cast<double>(nodes);
    Model grad = model.zeros_like();
    double loss = 0.0;
    try {
      for (std::size_t b : batch) {
        LossAndGrad lg = model_loss_and_grad(model, patterns[b], task.graphs[b], cfg.attention, weight);
        loss += lg.loss;
        add_into(grad, lg.grad);
      }
    } catch (const NonFiniteInput&) {
      // Activations overflowed between layers.
      throw TrainingDiverged(step);
    }
    loss *= weight;
    if (!std::isfinite(loss)) throw TrainingDiverged(step);
    report.losses.push_back(loss);

    const double t = static_cast<double>(step + 1);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    auto params = model.tensors();
    auto grads = grad.tensors();
    for (std::size_t i = 0; i < params.size(); ++i) {
      Eigen::Map<Eigen::VectorXd> w(params[i].data, static_cast<Eigen::Index>(params[i].size));
      Eigen::Map<const Eigen::VectorXd> g(grads[i].data, static_cast<Eigen::Index>(grads[i].size));
      first[i] = cfg.beta1 * first[i] + (1.0 - cfg.beta1) * g;
      second[i] = cfg.beta2 * second[i] + (1.0 - cfg.beta2) * g.cwiseAbs2();
      w.array() -= cfg.learning_rate * (first[i].array() / c1) / ((second[i].array() / c2).sqrt() + cfg.adam_eps);
    }
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  report.seconds_per_step = cfg.steps == 0 ? 0.0 : elapsed.count() / static_cast<double>(cfg.steps);

  report.train_accuracy = accuracy(model, patterns, task, task.train, cfg.attention);
  report.test_accuracy = accuracy(model, patterns, task, task.test, cfg.attention);
  return report;
}

}  // namespace exphormer
