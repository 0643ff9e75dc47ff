#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "exphormer/train.hpp"

namespace exphormer {

std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::GlobalMeanSign: return "global-mean";
    case TaskKind::PlantedPartition: return "planted";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "global-mean") return TaskKind::GlobalMeanSign;
  if (name == "planted") return TaskKind::PlantedPartition;
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

std::vector<int> global_mean_sign_labels(std::span<const double> values) {
  if (values.empty()) return {};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  std::vector<int> labels;
  labels.reserve(values.size());
  for (double v : values) labels.push_back(v > mean ? 1 : 0);
  return labels;
}

MultiGraph planted_partition_graph(std::size_t n, std::size_t num_blocks, double p_intra, double p_inter, Rng& rng,
                                   std::vector<int>& blocks) {
  if (num_blocks < 1 || num_blocks > n) throw std::invalid_argument("planted partition needs 1 <= blocks <= n");
  if (!(p_intra >= 0.0 && p_intra <= 1.0 && p_inter >= 0.0 && p_inter <= 1.0)) {
    throw std::invalid_argument("edge probabilities must lie in [0, 1]");
  }
  blocks.resize(n);
  for (std::size_t i = 0; i < n; ++i) blocks[i] = static_cast<int>(i % num_blocks);
  rng.shuffle(std::span<int>(blocks));
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (rng.bernoulli(blocks[u] == blocks[v] ? p_intra : p_inter)) edges.push_back({u, v, 1});
    }
  }
  return MultiGraph::from_edge_list(n, edges);
}

namespace {

GraphSample global_mean_sample(std::size_t n, const TaskOptions& opts, Rng& rng) {
  const auto lo = static_cast<std::size_t>(std::floor(0.4 * static_cast<double>(n)));
  const auto hi = static_cast<std::size_t>(std::ceil(0.6 * static_cast<double>(n)));
  std::vector<double> values(n);
  std::vector<int> labels;
  for (;;) {
    const double offset = rng.uniform(-opts.offset_range, opts.offset_range);
    for (double& v : values) v = offset + rng.uniform(-opts.noise, opts.noise);
    labels = global_mean_sign_labels(values);
    const auto ones = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    if (ones >= lo && ones <= hi) break;
  }
  GraphSample s;
  s.graph = MultiGraph::from_edge_list(n, {});
  s.features = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(n));
  s.labels = std::move(labels);
  return s;
}

GraphSample planted_sample(std::size_t n, const TaskOptions& opts, Rng& rng) {
  GraphSample s;
  s.graph = planted_partition_graph(n, opts.blocks, opts.p_intra, opts.p_inter, rng, s.labels);
  // One node per block reveals its block id; everything else is blank.
  s.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(opts.blocks));
  for (std::size_t b = 0; b < opts.blocks; ++b) {
    std::vector<NodeId> members;
    for (NodeId v = 0; v < n; ++v) {
      if (s.labels[v] == static_cast<int>(b)) members.push_back(v);
    }
    const NodeId shown = members[rng.below(members.size())];
    s.features(shown, static_cast<Eigen::Index>(b)) = 1.0;
  }
  return s;
}

}  // namespace

SyntheticTask make_task(TaskKind kind, std::size_t n_graphs, std::size_t nodes_per_graph, std::uint64_t seed,
                        const TaskOptions& opts) {
  if (n_graphs < 2) throw std::invalid_argument("a task needs at least two graphs (train and test)");
  if (nodes_per_graph < 2) throw std::invalid_argument("graphs need at least two nodes");
  if (!(opts.train_fraction > 0.0 && opts.train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  }
  if (kind == TaskKind::PlantedPartition && (opts.blocks < 2 || opts.blocks > nodes_per_graph)) {
    throw std::invalid_argument("planted partition needs 2 <= blocks <= nodes_per_graph");
  }

  SyntheticTask task;
  task.kind = kind;
  task.seed = seed;
  task.num_classes = kind == TaskKind::GlobalMeanSign ? 2 : opts.blocks;
  for (std::size_t i = 0; i < n_graphs; ++i) {
    Rng rng(derive_seed(seed, i));
    task.graphs.push_back(kind == TaskKind::GlobalMeanSign ? global_mean_sample(nodes_per_graph, opts, rng)
                                                           : planted_sample(nodes_per_graph, opts, rng));
  }

  Rng split_rng(derive_seed(seed, n_graphs));
  auto order = split_rng.permutation<std::size_t>(n_graphs);
  auto n_train = static_cast<std::size_t>(std::llround(opts.train_fraction * static_cast<double>(n_graphs)));
  n_train = std::clamp<std::size_t>(n_train, 1, n_graphs - 1);
  task.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  task.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(task.train.begin(), task.train.end());
  std::sort(task.test.begin(), task.test.end());
  return task;
}

}  // namespace exphormer
