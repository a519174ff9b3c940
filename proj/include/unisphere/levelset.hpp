#pragma once

#include <vector>

#include "unisphere/contraction.hpp"
#include "unisphere/landmarks.hpp"

namespace unisphere {

/// Bracket state at one outer iteration; `lo`/`hi` are multipliers with
/// their signed defects.
struct BracketStep {
  double lo;
  double hi;
  double value_lo;
  double value_hi;
};

/**
 * Nearest point y_r on J^{-1}(r) to x0.
 *
 * y_r is the fixed point y = x0 + lambda* grad J(y), i.e. the minimizer of
 * 1/2 ||x - x0||^2 - lambda* J(x) with 0 <= lambda* < 1/L.
 */
struct LevelProjection {
  Point y_r;
  double lambda_star;
  double level;
  double distance;
  double level_residual;
  double fixed_point_residual;
  int outer_iterations;
  double bracket_width;
  /// h(lambda) = J(x(lambda)) - r at the endpoints; h(lo) <= 0 <= h(hi).
  std::vector<BracketStep> bracket_history;
};

struct LevelOptions {
  double tol_level = 0.0;  ///< <= 0 selects 1e-8 (1 + |r|)
  double tol_inner = 1e-10;
  double eps_cap = 1e-6;
  int max_outer = 200;
  double tol_grad = kDefaultGradTol;
};

/// Throws BelowBase when r <= J(x0), LevelOutOfRange when the level is not
/// reached at lambda_max = (1 - eps_cap)/L, DegenerateBasePoint at a
/// critical x0 and NoConvergence when the outer budget runs out.
LevelProjection project_to_level(const SmoothFunctional& J, const Point& x0, double r,
                                 const LevelOptions& options = {});

}  // namespace unisphere
