#include "exphormer/pattern.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <tuple>

namespace exphormer {

char kind_tag(EdgeKind k) {
  switch (k) {
    case EdgeKind::Local: return 'L';
    case EdgeKind::Expander: return 'X';
    case EdgeKind::Global: return 'G';
    case EdgeKind::SelfLoop: return 'S';
  }
  return '?';
}

std::optional<EdgeKind> kind_from_tag(char tag) {
  switch (tag) {
    case 'L': return EdgeKind::Local;
    case 'X': return EdgeKind::Expander;
    case 'G': return EdgeKind::Global;
    case 'S': return EdgeKind::SelfLoop;
    default: return std::nullopt;
  }
}

std::string_view to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::Local: return "local";
    case EdgeKind::Expander: return "expander";
    case EdgeKind::Global: return "global";
    case EdgeKind::SelfLoop: return "self_loop";
  }
  return "unknown";
}

AttentionPattern AttentionPattern::from_edges(std::size_t n_real, std::size_t n_virtual, PatternFlags flags,
                                              std::vector<DirectedEdge> edges) {
  const std::size_t n = n_real + n_virtual;
  if (n_real == 0) throw std::invalid_argument("pattern needs at least one real node");
  for (const auto& e : edges) {
    if (e.source >= n || e.target >= n) throw std::invalid_argument("pattern edge endpoint out of range");
    if (e.kind == EdgeKind::Local ? e.feature < 0 : e.feature != -1) {
      throw std::invalid_argument("local edges need a feature index >= 0; other kinds use -1");
    }
  }
  std::sort(edges.begin(), edges.end(), [](const DirectedEdge& a, const DirectedEdge& b) {
    return std::tie(a.target, a.source, a.kind) < std::tie(b.target, b.source, b.kind);
  });
  for (std::size_t i = 1; i < edges.size(); ++i) {
    const auto& a = edges[i - 1];
    const auto& b = edges[i];
    if (a.target == b.target && a.source == b.source && a.kind == b.kind) {
      throw std::invalid_argument("duplicate pattern edge " + std::to_string(a.source) + "->" +
                                  std::to_string(a.target) + " kind " + kind_tag(a.kind));
    }
  }

  AttentionPattern p;
  p.n_real_ = n_real;
  p.n_virtual_ = n_virtual;
  p.flags_ = flags;
  p.offsets_.assign(n + 1, 0);
  p.edges_.reserve(edges.size());
  for (const auto& e : edges) {
    ++p.offsets_[e.target + 1];
    p.edges_.push_back({e.source, e.kind, e.feature});
  }
  for (std::size_t v = 0; v < n; ++v) p.offsets_[v + 1] += p.offsets_[v];
  return p;
}

std::span<const PatternEdge> AttentionPattern::incoming(NodeId target) const {
  if (target >= num_nodes()) throw std::out_of_range("pattern node out of range");
  return {edges_.data() + offsets_[target], offsets_[target + 1] - offsets_[target]};
}

bool AttentionPattern::has_edge(NodeId source, NodeId target, EdgeKind kind) const {
  auto in = incoming(target);
  auto it = std::lower_bound(in.begin(), in.end(), std::make_pair(source, kind), [](const PatternEdge& e, auto key) {
    return std::tie(e.source, e.kind) < std::tie(key.first, key.second);
  });
  return it != in.end() && it->source == source && it->kind == kind;
}

bool AttentionPattern::has_any_edge(NodeId source, NodeId target) const {
  auto in = incoming(target);
  auto it = std::lower_bound(in.begin(), in.end(), source,
                             [](const PatternEdge& e, NodeId s) { return e.source < s; });
  return it != in.end() && it->source == source;
}

std::vector<DirectedEdge> AttentionPattern::directed_edges() const {
  std::vector<DirectedEdge> out;
  out.reserve(edges_.size());
  for (NodeId t = 0; t < num_nodes(); ++t) {
    for (const auto& e : incoming(t)) out.push_back({e.source, t, e.kind, e.feature});
  }
  return out;
}

std::vector<std::string> AttentionPattern::invariant_violations() const {
  std::vector<std::string> bad;
  auto edge_name = [](NodeId s, NodeId t, EdgeKind k) {
    return std::to_string(s) + "->" + std::to_string(t) + " " + kind_tag(k);
  };
  const auto is_virtual = [this](NodeId v) { return v >= n_real_; };
  for (NodeId t = 0; t < num_nodes(); ++t) {
    for (const auto& e : incoming(t)) {
      switch (e.kind) {
        case EdgeKind::Local:
          if (!flags_.local) bad.push_back("local edge in pattern without local flag: " + edge_name(e.source, t, e.kind));
          if (is_virtual(e.source) || is_virtual(t)) bad.push_back("local edge touches virtual node: " + edge_name(e.source, t, e.kind));
          if (!has_edge(t, e.source, EdgeKind::Local)) bad.push_back("local edge without reverse: " + edge_name(e.source, t, e.kind));
          break;
        case EdgeKind::Expander:
          if (!flags_.expander) bad.push_back("expander edge without expander flag: " + edge_name(e.source, t, e.kind));
          if (is_virtual(e.source) || is_virtual(t)) bad.push_back("expander edge touches virtual node: " + edge_name(e.source, t, e.kind));
          if (!has_edge(t, e.source, EdgeKind::Expander)) bad.push_back("expander edge without reverse: " + edge_name(e.source, t, e.kind));
          break;
        case EdgeKind::Global:
          if (!flags_.global) bad.push_back("global edge without global flag: " + edge_name(e.source, t, e.kind));
          if (is_virtual(e.source) == is_virtual(t)) bad.push_back("global edge must join virtual and real: " + edge_name(e.source, t, e.kind));
          break;
        case EdgeKind::SelfLoop:
          if (!flags_.self_loops) bad.push_back("self-loop without self-loop flag: " + edge_name(e.source, t, e.kind));
          if (e.source != t) bad.push_back("self-loop edge joins distinct nodes: " + edge_name(e.source, t, e.kind));
          break;
      }
    }
  }
  if (flags_.global) {
    if (n_virtual_ == 0) bad.push_back("global flag set without virtual nodes");
    for (NodeId v = static_cast<NodeId>(n_real_); v < num_nodes(); ++v) {
      for (NodeId u = 0; u < n_real_; ++u) {
        if (!has_edge(u, v, EdgeKind::Global) || !has_edge(v, u, EdgeKind::Global)) {
          bad.push_back("virtual node " + std::to_string(v) + " not wired to real node " + std::to_string(u));
        }
      }
    }
  }
  if (flags_.self_loops) {
    for (NodeId v = 0; v < num_nodes(); ++v) {
      if (!has_edge(v, v, EdgeKind::SelfLoop)) bad.push_back("missing self-loop on node " + std::to_string(v));
    }
  }
  return bad;
}

void PatternConfig::validate() const {
  if (!use_local && !expander && num_virtual == 0) {
    throw std::invalid_argument("pattern config enables no component (local, expander, or virtual nodes)");
  }
  if (expander) expander->validate();
}

BuiltPattern build_pattern(const MultiGraph& g, const PatternConfig& cfg, std::span<const std::int32_t> local_features) {
  cfg.validate();
  std::optional<GeneratedExpander> expander;
  if (cfg.expander) {
    if (cfg.expander->n != g.num_nodes()) {
      throw std::invalid_argument("expander n=" + std::to_string(cfg.expander->n) + " does not match graph n=" +
                                  std::to_string(g.num_nodes()));
    }
    expander = generate_verified(*cfg.expander);
  }
  return build_pattern_with_expander(g, cfg, expander, local_features);
}

BuiltPattern build_pattern_with_expander(const MultiGraph& g, const PatternConfig& cfg,
                                         const std::optional<GeneratedExpander>& expander,
                                         std::span<const std::int32_t> local_features) {
  if (!cfg.use_local && !expander && cfg.num_virtual == 0) {
    throw std::invalid_argument("pattern config enables no component (local, expander, or virtual nodes)");
  }
  const std::size_t n = g.num_nodes();
  const std::size_t gv = cfg.num_virtual;
  std::vector<DirectedEdge> edges;

  auto add_undirected = [&edges](NodeId u, NodeId v, EdgeKind kind, std::int32_t feature) {
    edges.push_back({u, v, kind, feature});
    if (u != v) edges.push_back({v, u, kind, feature});
  };

  if (cfg.use_local) {
    const auto input = g.edges();
    if (!local_features.empty() && local_features.size() != input.size()) {
      throw std::invalid_argument("local feature indices must align with the graph's edge list");
    }
    for (std::size_t k = 0; k < input.size(); ++k) {
      add_undirected(input[k].u, input[k].v, EdgeKind::Local, local_features.empty() ? 0 : local_features[k]);
    }
  }
  if (expander) {
    if (expander->graph.num_nodes() != n) throw std::invalid_argument("expander node count does not match graph");
    for (const Edge& e : expander->graph.edges()) add_undirected(e.u, e.v, EdgeKind::Expander, -1);
  }
  for (std::size_t j = 0; j < gv; ++j) {
    const auto v = static_cast<NodeId>(n + j);
    for (NodeId u = 0; u < n; ++u) add_undirected(u, v, EdgeKind::Global, -1);
  }
  if (cfg.self_loops) {
    for (NodeId v = 0; v < n + gv; ++v) edges.push_back({v, v, EdgeKind::SelfLoop, -1});
  }

  PatternFlags flags{cfg.use_local, expander.has_value(), gv > 0, cfg.self_loops};
  BuiltPattern out{AttentionPattern::from_edges(n, gv, flags, std::move(edges)), std::nullopt};
  if (expander) out.certificate = expander->certificate;
  return out;
}

std::size_t EdgeBudget::count(EdgeKind k) const noexcept {
  switch (k) {
    case EdgeKind::Local: return local;
    case EdgeKind::Expander: return expander;
    case EdgeKind::Global: return global;
    case EdgeKind::SelfLoop: return self_loop;
  }
  return 0;
}

EdgeBudget edge_budget(const AttentionPattern& p) {
  EdgeBudget b;
  for (NodeId t = 0; t < p.num_nodes(); ++t) {
    for (const auto& e : p.incoming(t)) {
      switch (e.kind) {
        case EdgeKind::Local: ++b.local; break;
        case EdgeKind::Expander: ++b.expander; break;
        case EdgeKind::Global: ++b.global; break;
        case EdgeKind::SelfLoop: ++b.self_loop; break;
      }
    }
  }
  return b;
}

std::size_t linear_edge_bound(std::size_t n, std::size_t local_edges, std::size_t expander_degree,
                              std::size_t num_virtual, bool self_loops) {
  return 2 * local_edges + n * expander_degree + 2 * num_virtual * n + (self_loops ? n + num_virtual : 0);
}

namespace {

bool cycles_follow_expander_edges(const AttentionPattern& p, const GenerationCertificate& cert) {
  if (!cert.hamiltonian_cycles || cert.hamiltonian_cycles->empty()) return false;
  const std::size_t n = p.n_real();
  if (n < 3) return false;
  for (const auto& cycle : *cert.hamiltonian_cycles) {
    if (cycle.size() != n) return false;
    std::vector<bool> seen(n, false);
    for (NodeId v : cycle) {
      if (v >= n || seen[v]) return false;
      seen[v] = true;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const NodeId a = cycle[k];
      const NodeId b = cycle[(k + 1) % n];
      if (!p.has_edge(a, b, EdgeKind::Expander) || !p.has_edge(b, a, EdgeKind::Expander)) return false;
    }
  }
  return true;
}

}  // namespace

UniversalityReport universality_precondition(const AttentionPattern& p,
                                             const std::optional<GenerationCertificate>& cert) {
  UniversalityReport r;
  const std::size_t total = p.num_nodes();

  r.self_loops = true;
  for (NodeId v = 0; v < total; ++v) {
    if (!p.has_edge(v, v, EdgeKind::SelfLoop)) {
      r.self_loops = false;
      break;
    }
  }

  // Distinct real neighbours (other than itself) in each direction.
  std::vector<std::size_t> in_real(total, 0);
  std::vector<std::size_t> out_real(total, 0);
  for (NodeId t = 0; t < total; ++t) {
    NodeId last = static_cast<NodeId>(-1);
    for (const auto& e : p.incoming(t)) {
      if (e.source == last) continue;
      last = e.source;
      if (e.source == t) continue;
      if (e.source < p.n_real()) ++in_real[t];
      if (t < p.n_real()) ++out_real[e.source];
    }
  }
  for (NodeId w = 0; w < total; ++w) {
    const std::size_t need = p.n_real() - (w < p.n_real() ? 1 : 0);
    if (in_real[w] == need && out_real[w] == need) {
      r.star = true;
      break;
    }
  }

  r.hamiltonian = cert.has_value() && cycles_follow_expander_edges(p, *cert);
  r.satisfied = r.self_loops && (r.star || r.hamiltonian);
  return r;
}

std::optional<std::uint32_t> reachability_layers(const AttentionPattern& p) {
  const std::size_t total = p.num_nodes();
  std::vector<std::vector<NodeId>> out(total);
  for (NodeId t = 0; t < total; ++t) {
    NodeId last = static_cast<NodeId>(-1);
    for (const auto& e : p.incoming(t)) {
      if (e.source == last) continue;
      last = e.source;
      out[e.source].push_back(t);
    }
  }

  std::uint32_t worst = 0;
  std::vector<std::uint32_t> dist(total);
  std::vector<NodeId> queue;
  queue.reserve(total);
  for (NodeId s = 0; s < p.n_real(); ++s) {
    std::fill(dist.begin(), dist.end(), kUnreachable);
    queue.clear();
    queue.push_back(s);
    dist[s] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const NodeId u = queue[head];
      for (NodeId v : out[u]) {
        if (dist[v] == kUnreachable) {
          dist[v] = dist[u] + 1;
          queue.push_back(v);
        }
      }
    }
    for (NodeId t = 0; t < p.n_real(); ++t) {
      if (dist[t] == kUnreachable) return std::nullopt;
      worst = std::max(worst, dist[t]);
    }
  }
  return worst;
}

}  // namespace exphormer
