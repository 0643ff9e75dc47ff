#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace exphormer {

using NodeId = std::uint32_t;

struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  std::uint32_t multiplicity = 1;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  NodeId node = 0;
  std::uint32_t multiplicity = 0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Undirected multigraph in compressed adjacency form. Each node's neighbor
// list is sorted by id and stores every neighbor once with its edge
// multiplicity. A self-loop {v,v} of multiplicity m appears once in v's list
// and contributes 2m to degree(v), matching the adjacency-matrix convention
// A[v][v] = 2m.
//
// Immutable after construction.
class MultiGraph {
 public:
  MultiGraph() = default;

  // Duplicate (u,v) entries (in either orientation) accumulate multiplicity.
  // Throws std::invalid_argument on n == 0, an endpoint >= n, or a zero
  // multiplicity.
  static MultiGraph from_edge_list(std::size_t n, std::span<const Edge> edges);

  std::size_t num_nodes() const noexcept { return degrees_.size(); }

  std::span<const Neighbor> neighbors(NodeId v) const;

  std::uint64_t degree(NodeId v) const;
  std::uint64_t max_degree() const noexcept;

  // 0 when the edge is absent. For u == v this is the loop count, not the
  // adjacency diagonal.
  std::uint32_t multiplicity(NodeId u, NodeId v) const;

  // Adjacency-matrix entry: multiplicity for u != v, 2 * loops for u == v.
  std::uint64_t adjacency(NodeId u, NodeId v) const;

  // Sum of all degrees (twice the undirected edge count, loops included).
  std::uint64_t total_edge_endpoints() const noexcept { return total_endpoints_; }

  // Canonical undirected edge list: u <= v, sorted lexicographically.
  std::vector<Edge> edges() const;

  // Number of distinct undirected pairs (loops included).
  std::size_t num_distinct_edges() const noexcept;

  // Common degree if every node has the same degree.
  std::optional<std::uint64_t> regular_degree() const noexcept;
  bool has_self_loops() const noexcept;

  MultiGraph without_self_loops() const;

  friend bool operator==(const MultiGraph&, const MultiGraph&) = default;

 private:
  std::vector<std::size_t> offsets_;  // size n + 1
  std::vector<Neighbor> entries_;
  std::vector<std::uint64_t> degrees_;
  std::uint64_t total_endpoints_ = 0;
};

inline constexpr std::uint32_t kUnreachable = std::numeric_limits<std::uint32_t>::max();

// Hop distances from source; unreachable nodes hold kUnreachable.
std::vector<std::uint32_t> bfs_distances(const MultiGraph& g, NodeId source);

// Max pairwise BFS distance; nullopt when the graph is disconnected.
std::optional<std::uint32_t> diameter(const MultiGraph& g);

bool is_connected(const MultiGraph& g);

// Probability vector over nodes. Construction validates non-negativity and
// unit mass (within 1e-12).
class WalkDistribution {
 public:
  explicit WalkDistribution(std::vector<double> probs);

  static WalkDistribution point_mass(std::size_t n, NodeId v);
  static WalkDistribution uniform(std::size_t n);

  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

  // L1 distance to the uniform distribution.
  double distance_to_uniform() const noexcept;

 private:
  struct Unchecked {};
  WalkDistribution(std::vector<double> probs, Unchecked) : probs_(std::move(probs)) {}
  friend WalkDistribution walk_step(const MultiGraph&, const WalkDistribution&);

  std::vector<double> probs_;
};

// One step of the simple random walk: mass at u moves to v with probability
// adjacency(u,v) / degree(u). Throws std::invalid_argument if mass sits on, or
// the graph contains, an isolated node.
WalkDistribution walk_step(const MultiGraph& g, const WalkDistribution& dist);

// Edge-list text format: "n m" then m lines "u v mult".
void write_edge_list(std::ostream& out, const MultiGraph& g);
MultiGraph read_edge_list(std::istream& in);

}  // namespace exphormer
