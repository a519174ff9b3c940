#pragma once

#include <optional>
#include <vector>

#include "unisphere/contraction.hpp"
#include "unisphere/landmarks.hpp"
#include "unisphere/levelset.hpp"

namespace unisphere {

/**
 * Unique global maximizer of J on S(x0, r).
 *
 * x_hat is the minimizer of 1/2 ||x - x0||^2 - J(x)/lambda_hat for the
 * multiplier lambda_hat > L at which ||x - x0|| = r, so
 * grad J(x_hat) = lambda_hat (x_hat - x0).
 */
struct SphereMaxResult {
  Point x_hat;
  double lambda_hat;
  double radius;
  double J_value;
  double radius_residual;
  double kkt_residual;
  int outer_iterations;
  /// d(lambda) - r at the endpoints; d(lo) - r >= 0 >= d(hi) - r.
  std::vector<BracketStep> bracket_history;
};

struct SphereOptions {
  double tol_radius = 0.0;  ///< <= 0 selects 1e-10 (1 + r)
  double tol_inner = 1e-10;
  double eps_cap = 1e-6;
  double lambda_cap = 1e12;  ///< in units of L
  int max_outer = 200;
  double tol_grad = kDefaultGradTol;
  /// First inner iterate; continuation passes the previous solution.
  std::optional<Vector> warm_start;
};

/// Throws SphereOutOfRange when d(L (1 + eps_cap)) < r, BracketFailure when
/// doubling passes lambda_cap * L, DegenerateBasePoint at a critical x0.
SphereMaxResult maximize_on_sphere(const SmoothFunctional& J, const Point& x0, double r,
                                   const SphereOptions& options = {});

}  // namespace unisphere
