#include "exphormer/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "exphormer/error.hpp"

namespace exphormer {

namespace {

void check_budget(const MultiGraph& g) {
  if (g.num_nodes() > kDenseSpectrumBudget) {
    throw BudgetExceeded("dense spectrum limited to n <= " + std::to_string(kDenseSpectrumBudget) + ", got n=" +
                         std::to_string(g.num_nodes()));
  }
}

std::uint64_t require_regular(const MultiGraph& g, const char* op) {
  const auto d = g.regular_degree();
  if (!d) throw std::invalid_argument(std::string(op) + " requires a regular graph");
  return *d;
}

double tolerance_for(double d) { return kEigenTolerance * std::max(1.0, d); }

std::vector<double> descending(const Eigen::VectorXd& ascending) {
  std::vector<double> out(ascending.data(), ascending.data() + ascending.size());
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace

Eigen::MatrixXd adjacency_matrix(const MultiGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (const Neighbor& nb : g.neighbors(u)) {
      a(u, nb.node) = nb.node == u ? 2.0 * nb.multiplicity : static_cast<double>(nb.multiplicity);
    }
  }
  return a;
}

Eigen::MatrixXd laplacian_matrix(const MultiGraph& g) {
  Eigen::MatrixXd l = -adjacency_matrix(g);
  for (NodeId u = 0; u < g.num_nodes(); ++u) l(u, u) += static_cast<double>(g.degree(u));
  return l;
}

std::vector<double> adjacency_eigenvalues(const MultiGraph& g) {
  check_budget(g);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(adjacency_matrix(g), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("adjacency eigensolver failed to converge");
  return descending(solver.eigenvalues());
}

double nontrivial_bound(const std::vector<double>& desc) {
  if (desc.size() < 2) throw std::invalid_argument("need at least two eigenvalues");
  return std::max(std::abs(desc[1]), std::abs(desc.back()));
}

SpectralReport adjacency_spectrum(const MultiGraph& g) {
  if (g.num_nodes() < 2) throw std::invalid_argument("spectrum needs n >= 2");
  SpectralReport r;
  r.n = g.num_nodes();
  r.d_max = g.max_degree();
  r.eigenvalues = adjacency_eigenvalues(g);
  r.nontrivial_bound = nontrivial_bound(r.eigenvalues);

  std::vector<double> lap;  // ascending
  if (const auto d = g.regular_degree()) {
    const auto dd = static_cast<double>(*d);
    if (*d > 0) r.epsilon = r.nontrivial_bound / dd;
    if (*d >= 1) r.ramanujan_margin = 2.0 * std::sqrt(dd - 1.0) - r.nontrivial_bound;
    for (double lambda : r.eigenvalues) lap.push_back(dd - lambda);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian_matrix(g), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw Error("Laplacian eigensolver failed to converge");
    lap.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
  }
  r.laplacian_nontrivial_range = {lap[1], lap.back()};
  return r;
}

bool is_epsilon_expander(const MultiGraph& g, double eps) {
  const auto d = static_cast<double>(require_regular(g, "is_epsilon_expander"));
  const double bound = nontrivial_bound(adjacency_eigenvalues(g));
  return bound <= eps * d + tolerance_for(d);
}

RamanujanCheck near_ramanujan_from_spectrum(const std::vector<double>& desc, std::size_t d, double slack) {
  if (d < 1) throw std::invalid_argument("near-Ramanujan test needs d >= 1");
  RamanujanCheck c;
  c.achieved_bound = nontrivial_bound(desc);
  c.threshold = 2.0 * std::sqrt(static_cast<double>(d) - 1.0) + slack;
  c.passed = c.achieved_bound <= c.threshold + tolerance_for(static_cast<double>(d));
  return c;
}

RamanujanCheck is_near_ramanujan(const MultiGraph& g, double slack) {
  const auto d = require_regular(g, "is_near_ramanujan");
  return near_ramanujan_from_spectrum(adjacency_eigenvalues(g), d, slack);
}

bool laplacian_approx_check(const MultiGraph& g, double eps) {
  const auto d = static_cast<double>(require_regular(g, "laplacian_approx_check"));
  if (!is_connected(g)) throw std::invalid_argument("laplacian_approx_check requires a connected graph");
  const auto eig = adjacency_eigenvalues(g);
  const double tol = tolerance_for(d);
  for (std::size_t i = 1; i < eig.size(); ++i) {
    const double mu = d - eig[i];
    if (mu < d * (1.0 - eps) - tol || mu > d * (1.0 + eps) + tol) return false;
  }
  return true;
}

MixingBound mixing_bound(std::size_t n, double eps, double delta) {
  if (!(eps < 1.0)) throw std::invalid_argument("mixing bound needs eps < 1 (no spectral gap otherwise)");
  if (!(eps >= 0.0)) throw std::invalid_argument("mixing bound needs eps >= 0");
  if (!(delta > 0.0)) throw std::invalid_argument("mixing bound needs delta > 0");
  if (n == 0) throw std::invalid_argument("mixing bound needs n >= 1");
  const double raw = std::log(static_cast<double>(n) / (delta * delta)) / (2.0 * (1.0 - eps));
  const double t = std::max(0.0, std::ceil(raw));
  return {eps, delta, static_cast<std::size_t>(t)};
}

std::size_t empirical_mixing_time(const MultiGraph& g, double delta, NodeId start) {
  const auto d = static_cast<double>(require_regular(g, "empirical_mixing_time"));
  if (start >= g.num_nodes()) throw std::out_of_range("start node out of range");
  const double eps = nontrivial_bound(adjacency_eigenvalues(g)) / d;
  if (eps >= 1.0 - tolerance_for(d) / d) {
    throw NoConvergence("random walk has no spectral gap (bipartite or disconnected graph)", 0);
  }
  const auto bound = mixing_bound(g.num_nodes(), eps, delta);
  return empirical_mixing_time(g, delta, start, 10 * bound.t_bound);
}

std::size_t empirical_mixing_time(const MultiGraph& g, double delta, NodeId start, std::size_t max_steps) {
  auto dist = WalkDistribution::point_mass(g.num_nodes(), start);
  for (std::size_t t = 0;; ++t) {
    if (dist.distance_to_uniform() <= delta) return t;
    if (t == max_steps) break;
    dist = walk_step(g, dist);
  }
  throw NoConvergence("walk did not reach L1 distance " + std::to_string(delta) + " within " +
                          std::to_string(max_steps) + " steps",
                      max_steps);
}

Eigen::MatrixXd laplacian_pe(const MultiGraph& g, std::size_t k) {
  const std::size_t n = g.num_nodes();
  if (k == 0 || k >= n) throw std::invalid_argument("laplacian_pe needs 1 <= k < n");
  check_budget(g);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian_matrix(g));
  if (solver.info() != Eigen::Success) throw Error("Laplacian eigensolver failed to converge");

  const double zero_tol = 1e-8 * std::max<double>(1.0, static_cast<double>(g.max_degree()));
  Eigen::MatrixXd pe(n, k);
  std::size_t filled = 0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size() && filled < k; ++i) {
    if (solver.eigenvalues()(i) <= zero_tol) continue;
    Eigen::VectorXd v = solver.eigenvectors().col(i).normalized();
    for (Eigen::Index r = 0; r < v.size(); ++r) {
      if (std::abs(v(r)) > 1e-10) {
        if (v(r) < 0) v = -v;
        break;
      }
    }
    pe.col(static_cast<Eigen::Index>(filled++)) = v;
  }
  if (filled < k) {
    throw std::invalid_argument("graph has only " + std::to_string(filled) + " nonzero Laplacian eigenvalues");
  }
  return pe;
}

}  // namespace exphormer
