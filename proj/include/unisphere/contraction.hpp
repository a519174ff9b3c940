#pragma once

#include <functional>
#include <optional>

#include "unisphere/hilbert.hpp"

namespace unisphere {

/// One step of the fixed-point iteration, as seen by an observer.
struct ContractionStep {
  int iteration;           ///< 1-based count of map applications
  const Vector& iterate;   ///< x_k after this step
  double step_norm;        ///< ||x_k - x_{k-1}||
  double error_bound;      ///< nu/(1-nu) * step_norm
};

struct ContractionOptions {
  /// <= 0 selects 1e-10 * (1 + ||x0||).
  double tol = 0.0;
  /// <= 0 selects the a-priori Banach count for `tol` plus 50.
  int max_iter = 0;
  /// Initial iterate; x0 when empty.
  std::optional<Vector> start;
  std::function<void(const ContractionStep&)> observer;
};

/**
 * Unique global minimizer of Phi(x) = 1/2 ||x - x0||^2 - J(x)/gamma.
 *
 * Critical points of Phi are the fixed points of T(x) = x0 + grad J(x)/gamma,
 * a contraction with factor nu = L/gamma whenever gamma > L.
 */
struct ContractionResult {
  Point x_min;
  double gamma;
  int iterations;
  double step_norm;           ///< last ||x_{k+1} - x_k||
  double residual;            ///< ||x_min - T(x_min)||
  double contraction_factor;  ///< nu = L / gamma
  double tol;                 ///< tolerance the solve was run with
  /// False when the iteration stalled at rounding level before the
  /// a-posteriori bound reached `tol`.
  bool certified;
};

/// Throws NotAContraction if gamma <= L, NoConvergence when the budget runs
/// out, LipschitzViolation when the step grows for 10 consecutive iterations
/// or the iterate overflows.
ContractionResult minimize_shifted(const SmoothFunctional& J, const Point& x0, double gamma,
                                   const ContractionOptions& options = {});

/// Phi evaluated at the result's minimizer.
double envelope_value(const SmoothFunctional& J, const Point& x0,
                      const ContractionResult& result);

double envelope_value(const SmoothFunctional& J, const Point& x0, double gamma,
                      const Vector& x);

double default_contraction_tol(const Point& x0);

}  // namespace unisphere
