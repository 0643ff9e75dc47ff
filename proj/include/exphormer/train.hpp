#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "exphormer/attention.hpp"
#include "exphormer/graph.hpp"
#include "exphormer/pattern.hpp"
#include "exphormer/rng.hpp"

namespace exphormer {

enum class TaskKind {
  GlobalMeanSign,    // edgeless graphs; label = feature above its graph's mean
  PlantedPartition,  // block-model graphs; label = block id
};

std::string_view to_string(TaskKind k);
TaskKind parse_task_kind(std::string_view name);  // global-mean | planted

struct GraphSample {
  MultiGraph graph;
  Eigen::MatrixXd features;  // nodes x feature_dim
  std::vector<int> labels;
};

struct TaskOptions {
  // GlobalMeanSign: feature = offset + noise with a per-graph offset in
  // [-offset_range, offset_range] and noise in [-noise, noise]. The wide
  // offset makes a node's own feature nearly useless without the mean.
  double offset_range = 2.0;
  double noise = 0.25;
  // PlantedPartition
  std::size_t blocks = 2;
  double p_intra = 0.5;
  double p_inter = 0.05;
  double train_fraction = 0.8;
};

struct SyntheticTask {
  TaskKind kind = TaskKind::GlobalMeanSign;
  std::uint64_t seed = 0;
  std::size_t num_classes = 2;
  std::vector<GraphSample> graphs;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// label(i) = 1 iff value(i) > mean(values).
std::vector<int> global_mean_sign_labels(std::span<const double> values);

// Stochastic block model with equal (+-1) block sizes; node i's block is
// returned in `blocks`.
MultiGraph planted_partition_graph(std::size_t n, std::size_t num_blocks, double p_intra, double p_inter, Rng& rng,
                                   std::vector<int>& blocks);

SyntheticTask make_task(TaskKind kind, std::size_t n_graphs, std::size_t nodes_per_graph, std::uint64_t seed,
                        const TaskOptions& opts = {});

struct TrainConfig {
  std::size_t layers = 2;
  std::size_t model_dim = 16;
  std::size_t heads = 2;
  std::size_t head_dim = 8;
  std::size_t ff_dim = 32;
  std::size_t edge_dim = 4;
  PatternConfig pattern;
  AttentionOptions attention;
  std::size_t steps = 500;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

// Input encoder, stacked transformer blocks, and a linear readout over the
// real-node columns of the last block.
struct Model {
  Eigen::MatrixXd input_weight;  // model_dim x feature_dim
  Eigen::VectorXd input_bias;
  std::vector<LayerParams> layers;
  Eigen::MatrixXd readout_weight;  // num_classes x model_dim
  Eigen::VectorXd readout_bias;

  Model zeros_like() const;
  std::vector<TensorRef> tensors();
};

Model model_init(const TrainConfig& cfg, std::size_t feature_dim, std::size_t num_classes, std::size_t num_virtual,
                 std::uint64_t seed);

// num_classes x n_real logits.
Eigen::MatrixXd model_logits(const Model& model, const AttentionPattern& p, const Eigen::MatrixXd& features,
                             const AttentionOptions& opts);

struct LossAndGrad {
  double loss = 0.0;  // summed cross-entropy over the graph's real nodes
  std::size_t correct = 0;
  Model grad;         // of the summed loss, scaled by `weight`
};

// Summed softmax cross-entropy; gradients are multiplied by `weight`.
LossAndGrad model_loss_and_grad(const Model& model, const AttentionPattern& p, const GraphSample& sample,
                                const AttentionOptions& opts, double weight);

// Patterns used for a task: one per graph, each with its own expander drawn
// from derive_seed(task seed ^ expander seed, graph index).
std::vector<AttentionPattern> task_patterns(const SyntheticTask& task, const PatternConfig& cfg);

struct TrainReport {
  std::vector<double> losses;  // mean per-node loss of each step's batch
  double initial_train_accuracy = 0.0;
  double initial_test_accuracy = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double seconds_per_step = 0.0;
  EdgeBudget edge_budget;  // summed over all graphs of the task
};

double accuracy(const Model& model, const std::vector<AttentionPattern>& patterns, const SyntheticTask& task,
                std::span<const std::size_t> indices, const AttentionOptions& opts);

// Mini-batch Adam. Throws TrainingDiverged on a non-finite loss or activation.
TrainReport train_loop(const SyntheticTask& task, const TrainConfig& cfg);

// ---- gradient checking -----------------------------------------------------

struct GradcheckEntry {
  std::string pattern;  // e.g. "LX-S" (enabled components)
  std::string group;    // parameter group, "X", or a named property check
  double max_relative_error = 0.0;
  bool passed = false;
};

struct GradcheckReport {
  double tolerance = 1e-5;
  std::vector<GradcheckEntry> entries;
  double max_relative_error = 0.0;
  bool passed = false;
};

// |a - b| / max(1, |a|, |b|)
double relative_error(double analytic, double numeric);

// Central differences (step 1e-5) of <upstream, FF(X)> against attn_backward,
// for every parameter group and X, over patterns covering each present/absent
// combination of the four edge kinds.
GradcheckReport gradcheck_suite(std::uint64_t seed);

}  // namespace exphormer
