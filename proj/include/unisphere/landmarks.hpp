#pragma once

#include <vector>

#include "unisphere/contraction.hpp"

namespace unisphere {

/// Absolute threshold on ||grad J(x0)|| below which x0 counts as critical.
inline constexpr double kDefaultGradTol = 1e-8;

/// Throws DegenerateBasePoint when ||grad J(x0)|| <= tol_grad.
void require_nondegenerate(const SmoothFunctional& J, const Point& x0,
                           double tol_grad = kDefaultGradTol);

struct LandmarkSample {
  double eps;
  double gamma;
  double J_value;
  double distance;
  int iterations;
};

/**
 * Lower estimates of
 *   alpha0 = inf { J(x) : x in M },   beta0 = dist(x0, M),
 * where M is the set of global minimizers of 1/2 ||x - x0||^2 - J(x)/L.
 *
 * For gamma > L the minimizer x_gamma of the shifted problem satisfies
 * J(x_gamma) <= alpha0 and ||x_gamma - x0|| <= beta0, so the maxima over the
 * schedule are certified lower bounds. The extrapolated values are a linear
 * fit in eps to eps = 0 and carry no certificate.
 */
struct Landmarks {
  double alpha0_lower;
  double beta0_lower;
  double alpha0_extrapolated;
  double beta0_extrapolated;
  std::vector<LandmarkSample> samples;
  /// M judged empty: both bounds are +inf.
  bool diverged;
  std::vector<double> gamma_schedule;
  double J_base;
};

struct LandmarkOptions {
  /// Decreasing entries in (0, 1]; gamma_k = L (1 + eps_k).
  std::vector<double> eps_schedule = default_schedule();
  double tol = 0.0;  ///< contraction tolerance; <= 0 selects the default
  double tol_grad = kDefaultGradTol;
  double divergence_cap = 0.0;  ///< <= 0 selects 1e6 (1 + ||x0||)

  static std::vector<double> default_schedule(int steps = 12);
};

Landmarks estimate_landmarks(const SmoothFunctional& J, const Point& x0,
                             const LandmarkOptions& options = {});

struct MonotonicityReport {
  std::vector<double> lambda_grid;
  std::vector<double> g_values;
  /// Indices i with g[i+1] < g[i] - 10 tol.
  std::vector<int> violations;
  double tol;
};

/// g(lambda) = J(x(lambda)), x(lambda) the minimizer of
/// 1/2 ||x - x0||^2 - lambda J(x); nondecreasing in lambda.
MonotonicityReport monotonicity_scan(const SmoothFunctional& J, const Point& x0,
                                     const std::vector<double>& lambda_grid, double tol = 0.0);

}  // namespace unisphere
