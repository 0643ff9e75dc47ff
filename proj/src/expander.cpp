#include "exphormer/expander.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "exphormer/error.hpp"
#include "exphormer/spectral.hpp"

namespace exphormer {

std::string_view to_string(ExpanderVariant v) {
  switch (v) {
    case ExpanderVariant::Standard: return "standard";
    case ExpanderVariant::SimpleVariant: return "simple";
    case ExpanderVariant::HamiltonianCycle: return "hamiltonian";
  }
  return "unknown";
}

ExpanderVariant parse_variant(std::string_view name) {
  if (name == "standard") return ExpanderVariant::Standard;
  if (name == "simple") return ExpanderVariant::SimpleVariant;
  if (name == "hamiltonian") return ExpanderVariant::HamiltonianCycle;
  throw std::invalid_argument("unknown expander variant '" + std::string(name) + "'");
}

namespace {

void check_degree(std::size_t n, std::size_t d) {
  if (d < 2 || d % 2 != 0) throw std::invalid_argument("expander degree must be even and >= 2, got " + std::to_string(d));
  if (d >= n) {
    throw std::invalid_argument("expander degree d=" + std::to_string(d) + " must be < n=" + std::to_string(n));
  }
}

}  // namespace

double ExpanderConfig::threshold() const {
  return 2.0 * std::sqrt(static_cast<double>(d) - 1.0) + resolved_slack();
}

void ExpanderConfig::validate() const {
  if (n < 3) throw std::invalid_argument("expander needs n >= 3");
  check_degree(n, d);
  if (slack && !(*slack >= 0.0)) throw std::invalid_argument("slack must be >= 0");
  if (max_retries < 1) throw std::invalid_argument("max_retries must be >= 1");
}

MultiGraph graph_from_permutations(std::size_t n, std::span<const std::vector<NodeId>> perms) {
  std::vector<Edge> edges;
  edges.reserve(n * perms.size());
  for (const auto& p : perms) {
    if (p.size() != n) throw std::invalid_argument("permutation length differs from n");
    for (NodeId i = 0; i < n; ++i) edges.push_back({i, p[i], 1});
  }
  return MultiGraph::from_edge_list(n, edges);
}

MultiGraph graph_from_slot_pairing(std::size_t n, std::size_t d, std::span<const NodeId> perm) {
  const std::size_t half = d / 2;
  if (d == 0 || d % 2 != 0) throw std::invalid_argument("slot pairing needs even d >= 2");
  if (perm.size() != n * half) throw std::invalid_argument("slot permutation must have n*d/2 entries");
  std::vector<Edge> edges;
  edges.reserve(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) {
    if (perm[k] >= perm.size()) throw std::invalid_argument("slot permutation entry out of range");
    edges.push_back({static_cast<NodeId>(k / half), static_cast<NodeId>(perm[k] / half), 1});
  }
  return MultiGraph::from_edge_list(n, edges);
}

std::vector<NodeId> random_hamiltonian_cycle(std::size_t n, Rng& rng) {
  std::vector<NodeId> cycle(n);
  for (std::size_t i = 0; i < n; ++i) cycle[i] = static_cast<NodeId>(i);
  rng.shuffle(std::span<NodeId>(cycle).subspan(1));
  return cycle;
}

std::vector<NodeId> cycle_to_permutation(std::span<const NodeId> cycle) {
  std::vector<NodeId> succ(cycle.size());
  for (std::size_t k = 0; k < cycle.size(); ++k) succ[cycle[k]] = cycle[(k + 1) % cycle.size()];
  return succ;
}

MultiGraph draw_expander(std::size_t n, std::size_t d, ExpanderVariant variant, Rng& rng,
                         std::vector<std::vector<NodeId>>* cycles) {
  check_degree(n, d);
  switch (variant) {
    case ExpanderVariant::Standard: {
      std::vector<std::vector<NodeId>> perms;
      for (std::size_t j = 0; j < d / 2; ++j) perms.push_back(rng.permutation<NodeId>(n));
      return graph_from_permutations(n, perms);
    }
    case ExpanderVariant::SimpleVariant: {
      const std::size_t slots = n * (d / 2);
      if (slots > std::numeric_limits<NodeId>::max()) throw std::invalid_argument("n*d/2 exceeds index range");
      const auto perm = rng.permutation<NodeId>(slots);
      return graph_from_slot_pairing(n, d, perm);
    }
    case ExpanderVariant::HamiltonianCycle: {
      std::vector<std::vector<NodeId>> perms;
      std::vector<std::vector<NodeId>> drawn;
      for (std::size_t j = 0; j < d / 2; ++j) {
        drawn.push_back(random_hamiltonian_cycle(n, rng));
        perms.push_back(cycle_to_permutation(drawn.back()));
      }
      if (cycles) *cycles = std::move(drawn);
      return graph_from_permutations(n, perms);
    }
  }
  throw std::invalid_argument("unknown expander variant");
}

MultiGraph gen_standard(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  return draw_expander(n, d, ExpanderVariant::Standard, rng);
}

MultiGraph gen_simple_variant(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  return draw_expander(n, d, ExpanderVariant::SimpleVariant, rng);
}

GeneratedExpander gen_hamiltonian(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n < 3) throw std::invalid_argument("Hamiltonian variant needs n >= 3");
  Rng rng(seed);
  std::vector<std::vector<NodeId>> cycles;
  GeneratedExpander out{draw_expander(n, d, ExpanderVariant::HamiltonianCycle, rng, &cycles), {}};
  out.certificate.variant = ExpanderVariant::HamiltonianCycle;
  out.certificate.seed = seed;
  out.certificate.n = n;
  out.certificate.d = d;
  out.certificate.strip_self_loops = false;
  out.certificate.hamiltonian_cycles = std::move(cycles);
  return out;
}

GeneratedExpander generate_verified(const ExpanderConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t attempt = 0; attempt < cfg.max_retries; ++attempt) {
    std::vector<std::vector<NodeId>> cycles;
    MultiGraph candidate = draw_expander(cfg.n, cfg.d, cfg.variant, rng, &cycles);
    const auto check = near_ramanujan_from_spectrum(adjacency_eigenvalues(candidate), cfg.d, cfg.resolved_slack());
    best = std::min(best, check.achieved_bound);
    if (!check.passed) continue;

    GenerationCertificate cert;
    cert.variant = cfg.variant;
    cert.seed = cfg.seed;
    cert.n = cfg.n;
    cert.d = cfg.d;
    cert.slack = cfg.resolved_slack();
    cert.retries = attempt;
    cert.strip_self_loops = cfg.strip_self_loops;
    cert.passed_spectral = true;
    cert.achieved_bound = check.achieved_bound;
    if (cfg.variant == ExpanderVariant::HamiltonianCycle) cert.hamiltonian_cycles = std::move(cycles);
    if (cfg.strip_self_loops) candidate = candidate.without_self_loops();
    return {std::move(candidate), std::move(cert)};
  }
  throw RetriesExhausted(cfg.max_retries, best, cfg.threshold());
}

bool certificate_cycles_valid(const GenerationCertificate& cert, const MultiGraph& g) {
  if (!cert.hamiltonian_cycles) return false;
  const std::size_t n = g.num_nodes();
  if (cert.hamiltonian_cycles->empty()) return false;
  for (const auto& cycle : *cert.hamiltonian_cycles) {
    if (cycle.size() != n) return false;
    std::vector<bool> seen(n, false);
    for (NodeId v : cycle) {
      if (v >= n || seen[v]) return false;
      seen[v] = true;
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (g.multiplicity(cycle[k], cycle[(k + 1) % n]) == 0) return false;
    }
  }
  return true;
}

}  // namespace exphormer
