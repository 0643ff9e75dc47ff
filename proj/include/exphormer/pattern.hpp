#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exphormer/expander.hpp"
#include "exphormer/graph.hpp"

namespace exphormer {

enum class EdgeKind : std::uint8_t { Local = 0, Expander = 1, Global = 2, SelfLoop = 3 };

inline constexpr std::array<EdgeKind, 4> kAllEdgeKinds = {EdgeKind::Local, EdgeKind::Expander, EdgeKind::Global,
                                                          EdgeKind::SelfLoop};

char kind_tag(EdgeKind k);                         // L X G S
std::optional<EdgeKind> kind_from_tag(char tag);
std::string_view to_string(EdgeKind k);

// Edge into a query node. `feature` indexes the dataset edge-feature table
// for Local edges and is -1 for every other kind.
struct PatternEdge {
  NodeId source = 0;
  EdgeKind kind = EdgeKind::Local;
  std::int32_t feature = -1;

  friend bool operator==(const PatternEdge&, const PatternEdge&) = default;
};

struct DirectedEdge {
  NodeId source = 0;
  NodeId target = 0;
  EdgeKind kind = EdgeKind::Local;
  std::int32_t feature = -1;

  friend bool operator==(const DirectedEdge&, const DirectedEdge&) = default;
};

struct PatternFlags {
  bool local = false;
  bool expander = false;
  bool global = false;
  bool self_loops = false;

  friend bool operator==(const PatternFlags&, const PatternFlags&) = default;
};

// Directed interaction graph over n_real graph nodes followed by n_virtual
// virtual nodes (ids n_real .. n_real+n_virtual-1). Edges are grouped by
// target (query) node and sorted by (source, kind) within each group.
class AttentionPattern {
 public:
  AttentionPattern() = default;

  // Sorts edges into canonical order. Throws std::invalid_argument on an
  // out-of-range endpoint or a duplicate (source, target, kind).
  static AttentionPattern from_edges(std::size_t n_real, std::size_t n_virtual, PatternFlags flags,
                                     std::vector<DirectedEdge> edges);

  std::size_t n_real() const noexcept { return n_real_; }
  std::size_t n_virtual() const noexcept { return n_virtual_; }
  std::size_t num_nodes() const noexcept { return n_real_ + n_virtual_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  const PatternFlags& flags() const noexcept { return flags_; }

  std::span<const PatternEdge> incoming(NodeId target) const;
  // Offset of target's first incoming edge in the global edge order; edges
  // are numbered 0..num_edges()-1 target by target.
  std::size_t edge_offset(NodeId target) const { return offsets_.at(target); }

  bool has_edge(NodeId source, NodeId target, EdgeKind kind) const;
  bool has_any_edge(NodeId source, NodeId target) const;

  std::vector<DirectedEdge> directed_edges() const;

  // Structural invariants (bidirectional local edges, complete global
  // bipartite wiring, self-loops, no expander edge on a virtual node).
  // Returns human-readable violations; empty when consistent.
  std::vector<std::string> invariant_violations() const;

  friend bool operator==(const AttentionPattern&, const AttentionPattern&) = default;

 private:
  std::size_t n_real_ = 0;
  std::size_t n_virtual_ = 0;
  PatternFlags flags_;
  std::vector<std::size_t> offsets_;  // size num_nodes() + 1
  std::vector<PatternEdge> edges_;
};

struct PatternConfig {
  bool use_local = true;
  std::optional<ExpanderConfig> expander;
  std::size_t num_virtual = 1;
  bool self_loops = true;

  void validate() const;
};

struct BuiltPattern {
  AttentionPattern pattern;
  std::optional<GenerationCertificate> certificate;
};

// local_features, when given, is aligned with g.edges() and supplies the
// dataset feature index of each input edge; otherwise every Local edge uses
// feature 0. Expander generation failures propagate.
BuiltPattern build_pattern(const MultiGraph& g, const PatternConfig& cfg,
                           std::span<const std::int32_t> local_features = {});

// Same, with an already generated expander graph (e.g. from a file).
BuiltPattern build_pattern_with_expander(const MultiGraph& g, const PatternConfig& cfg,
                                         const std::optional<GeneratedExpander>& expander,
                                         std::span<const std::int32_t> local_features = {});

struct EdgeBudget {
  std::size_t local = 0;
  std::size_t expander = 0;
  std::size_t global = 0;
  std::size_t self_loop = 0;

  std::size_t total() const noexcept { return local + expander + global + self_loop; }
  std::size_t count(EdgeKind k) const noexcept;

  friend bool operator==(const EdgeBudget&, const EdgeBudget&) = default;
};

EdgeBudget edge_budget(const AttentionPattern& p);

// Closed-form budget when no dedup or overlap occurs:
// 2 |E_local| + n d + 2 g n + (n + g).
std::size_t linear_edge_bound(std::size_t n, std::size_t local_edges, std::size_t expander_degree,
                              std::size_t num_virtual, bool self_loops);

struct UniversalityReport {
  bool star = false;
  bool hamiltonian = false;
  bool self_loops = false;
  bool satisfied = false;
};

// Certificate-based: Hamiltonicity is never searched for.
UniversalityReport universality_precondition(const AttentionPattern& p,
                                             const std::optional<GenerationCertificate>& cert);

// Smallest t such that every ordered pair of distinct real nodes is joined by
// a directed path of length <= t (paths may pass through virtual nodes).
// nullopt when some pair is unreachable.
std::optional<std::uint32_t> reachability_layers(const AttentionPattern& p);

// Text format v1:
//   EXPH 1 <n_real> <n_virtual> <flags>
//   <src> <dst> <kind> <featidx>      one per directed edge
//   END <edge count>
// flags is four characters from "LXGS" with '-' for a disabled component.
void export_pattern(std::ostream& out, const AttentionPattern& p);
AttentionPattern import_pattern(std::istream& in);

}  // namespace exphormer
