#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "exphormer/graph.hpp"

namespace exphormer {

// Dense decompositions are O(n^3); refuse anything larger.
inline constexpr std::size_t kDenseSpectrumBudget = 5000;

// Absolute slack applied to eigenvalue comparisons, scaled by max(1, d).
inline constexpr double kEigenTolerance = 1e-9;

struct SpectralReport {
  std::size_t n = 0;
  std::uint64_t d_max = 0;
  std::vector<double> eigenvalues;  // adjacency spectrum, descending
  // max{|l2|,|ln|}; the quantity every expansion test is phrased in.
  double nontrivial_bound = 0.0;
  std::optional<double> epsilon;           // regular graphs only
  std::optional<double> ramanujan_margin;  // 2 sqrt(d-1) - bound, regular with d >= 1
  std::pair<double, double> laplacian_nontrivial_range{0.0, 0.0};
};

struct MixingBound {
  double epsilon = 0.0;
  double delta = 0.0;
  std::size_t t_bound = 0;
};

Eigen::MatrixXd adjacency_matrix(const MultiGraph& g);
Eigen::MatrixXd laplacian_matrix(const MultiGraph& g);

// Adjacency eigenvalues, descending. Throws BudgetExceeded above the budget.
std::vector<double> adjacency_eigenvalues(const MultiGraph& g);

// max{|l2|,|ln|} from a descending spectrum of length >= 2.
double nontrivial_bound(const std::vector<double>& descending);

SpectralReport adjacency_spectrum(const MultiGraph& g);

// Throw std::invalid_argument on non-regular input.
bool is_epsilon_expander(const MultiGraph& g, double eps);

struct RamanujanCheck {
  bool passed = false;
  double achieved_bound = 0.0;
  double threshold = 0.0;
};
RamanujanCheck is_near_ramanujan(const MultiGraph& g, double slack);
// Same test on a precomputed spectrum.
RamanujanCheck near_ramanujan_from_spectrum(const std::vector<double>& descending, std::size_t d,
                                            double slack);

// Regular, connected input: every nontrivial Laplacian eigenvalue lies in
// [d(1-eps), d(1+eps)].
bool laplacian_approx_check(const MultiGraph& g, double eps);

// ceil(ln(n/delta^2) / (2(1-eps))), clamped at 0. Requires 0 < eps < 1 and
// delta > 0.
MixingBound mixing_bound(std::size_t n, double eps, double delta);

// Smallest t with ||walk^t(point mass at start) - uniform||_1 <= delta.
// The step cap is 10 * mixing_bound(n, eps(g), delta).t_bound; throws
// NoConvergence when the walk has no spectral gap or the cap is reached.
// Requires a regular graph.
std::size_t empirical_mixing_time(const MultiGraph& g, double delta, NodeId start);
std::size_t empirical_mixing_time(const MultiGraph& g, double delta, NodeId start,
                                  std::size_t max_steps);

// n x k: unit eigenvectors of L for the k smallest nonzero eigenvalues,
// ascending; the first entry of each column with |v| > 1e-10 is positive.
Eigen::MatrixXd laplacian_pe(const MultiGraph& g, std::size_t k);

}  // namespace exphormer
