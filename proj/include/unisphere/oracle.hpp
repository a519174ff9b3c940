#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "unisphere/hilbert.hpp"

namespace unisphere {

/**
 * A function Psi(x, lambda) sampled on a tensor grid in x (one or two axes)
 * times a grid in lambda.
 *
 * `row` fills out[j] = Psi(x, lambdas[j]) for one grid point x, so that
 * lambda-independent work is done once per x.
 */
struct MinimaxInstance {
  using RowFn = std::function<void(std::span<const double> x, std::span<const double> lambdas,
                                   std::span<double> out)>;
  using PointwiseFn = std::function<double(std::span<const double> x, double lambda)>;

  RowFn row;
  std::vector<std::vector<double>> x_axes;
  std::vector<double> lambda_grid;
  std::string description;

  static MinimaxInstance pointwise(PointwiseFn psi, std::vector<std::vector<double>> x_axes,
                                   std::vector<double> lambda_grid, std::string description);
};

struct MinimaxReport {
  double sup_inf;  ///< max over lambda of min over x
  double inf_sup;  ///< min over x of max over lambda
  double gap;      ///< inf_sup - sup_inf
  /// L_x h_x + L_lambda h_lambda: sampled Lipschitz moduli times the grid
  /// covering radii in x and lambda.
  double grid_bound;
  double lipschitz_x;
  double lipschitz_lambda;
  double covering_x;
  double covering_lambda;
  double tol;
  bool weak_duality;
  bool pass;
};

/// Exhaustive enumeration over the grids; deterministic in evaluation order.
MinimaxReport verify_minimax(const MinimaxInstance& instance, double tol = 1e-12);

/// n equally spaced points from a to b inclusive.
std::vector<double> uniform_axis(double a, double b, int n);

struct Box2 {
  double x_lo, x_hi, y_lo, y_hi;
};

/// Psi(x, lambda) = 1/2 ||x - x0||^2 + lambda (r - J(x)) on box x [0, 1/L].
MinimaxInstance level_minimax_instance(const SmoothFunctional& J, const Point& x0, double r,
                                       const Box2& box, int n_per_axis, int n_lambda);

struct SphereOracle {
  Point argmax;
  double max;
  /// max ||grad J|| over the sweep times the arc spacing 2 pi r / n.
  double resolution_bound;
};

/// Max of J over x0 + r (cos t, sin t), t on a uniform grid of n_angles.
SphereOracle brute_force_sphere_max(const SmoothFunctional& J, const Point& x0, double r,
                                    int n_angles);

struct LevelOracle {
  Point nearest;
  double distance;
  int crossings;
};

/// Scans an n_cells x n_cells grid on `box` for sign changes of J - r along
/// cell edges, bisects each crossing to working precision and returns the
/// crossing nearest to x0. Throws EmptyLevelSet when no edge crosses.
LevelOracle brute_force_level_projection(const SmoothFunctional& J, const Point& x0, double r,
                                         const Box2& box, int n_cells);

/// Uniformly distributed point on S(x0, r) in the geometry of x0.
Vector random_sphere_point(std::mt19937_64& rng, const Point& x0, double r);

/// Projected gradient ascent of J on S(x0, r) from `start`; converges to a
/// local maximum.
Point projected_gradient_ascent(const SmoothFunctional& J, const Point& x0, double r,
                                const Vector& start, int max_iter = 200000);

/// Local minimizer of ||x - x0|| on J^{-1}(r): Newton projection onto the
/// level set alternated with tangential descent, from `start`.
Point level_local_search(const SmoothFunctional& J, const Point& x0, double r,
                         const Vector& start, int max_iter = 200000);

}  // namespace unisphere
