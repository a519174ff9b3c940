#include "unisphere/contraction.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace unisphere {

namespace {

constexpr int kGrowthWindow = 10;
constexpr int kBudgetSlack = 50;
constexpr int kStallWindow = 50;

// Iterations needed for nu^k/(1-nu) * first_step <= tol.
int a_priori_budget(double nu, double first_step, double tol) {
  if (!(first_step > 0.0) || nu <= 0.0) return kBudgetSlack;
  const double needed = std::log(tol * (1.0 - nu) / first_step) / std::log(nu);
  if (!(needed > 0.0)) return kBudgetSlack;
  if (needed > 1e9) return std::numeric_limits<int>::max() - kBudgetSlack;
  return static_cast<int>(std::ceil(needed)) + kBudgetSlack;
}

}  // namespace

double default_contraction_tol(const Point& x0) { return 1e-10 * (1.0 + x0.norm()); }

ContractionResult minimize_shifted(const SmoothFunctional& J, const Point& x0, double gamma,
                                   const ContractionOptions& options) {
  const double L = J.lipschitz();
  if (!(gamma > L)) {
    throw NotAContraction(
        fmt::format("gamma = {:.17g} does not exceed the Lipschitz constant {:.17g}", gamma, L));
  }
  if (!same_geometry(x0.space(), J.space())) {
    throw ShapeError("base point and functional live in different spaces");
  }
  const double tol = options.tol > 0.0 ? options.tol : default_contraction_tol(x0);
  int max_iter = options.max_iter;
  if (options.max_iter < 0) throw std::invalid_argument("max_iter must be at least 1");

  const InnerProduct& space = *J.space();
  const Vector& base = x0.coords();
  const double nu = L / gamma;
  const double bound_factor = nu / (1.0 - nu);
  const double inv_gamma = 1.0 / gamma;

  auto apply_map = [&](const Vector& x) -> Vector { return base + inv_gamma * J.gradient(x); };

  Vector x = options.start ? *options.start : base;
  if (x.size() != base.size()) throw ShapeError("start iterate has the wrong dimension");

  double step = 0.0;
  double previous_step = std::numeric_limits<double>::infinity();
  double min_step = std::numeric_limits<double>::infinity();
  int growth = 0;
  int stall = 0;
  bool certified = true;
  int k = 0;
  Vector next;
  for (;;) {
    next = apply_map(x);
    ++k;
    if (!next.allFinite()) {
      throw LipschitzViolation(
          fmt::format("iterate overflowed after {} steps; the declared L = {:.17g} is too small",
                      k, L));
    }
    step = space.norm(next - x);
    if (k == 1 && max_iter == 0) max_iter = a_priori_budget(nu, step, tol);

    if (options.observer) options.observer({k, next, step, bound_factor * step});

    x.swap(next);
    if (bound_factor * step <= tol) break;

    // Rounding floor: the map no longer moves the iterate by more than a
    // few ulps, so the a-posteriori bound cannot shrink further.
    const double floor = 8.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, std::max(space.norm(x), x0.norm()));
    if (step <= floor) {
      certified = false;
      break;
    }
    // In a non-Euclidean norm the floor is wider than a few ulps; a step
    // that stops setting new minima has hit it too.
    if (step < min_step) {
      min_step = step;
      stall = 0;
    } else if (++stall >= kStallWindow) {
      certified = false;
      break;
    }

    growth = step > previous_step ? growth + 1 : 0;
    if (growth >= kGrowthWindow) {
      throw LipschitzViolation(fmt::format(
          "step norm grew for {} consecutive iterations (gamma = {:.17g}, declared L = {:.17g})",
          kGrowthWindow, gamma, L));
    }
    previous_step = step;

    if (k >= max_iter) {
      throw NoConvergence(
          fmt::format("contraction did not reach tol {:.3e} in {} iterations (bound {:.3e})",
                      tol, k, bound_factor * step),
          x);
    }
  }

  const double residual = space.norm(x - apply_map(x));
  return ContractionResult{Point(x0.space(), x), gamma, k, step, residual, nu, tol, certified};
}

double envelope_value(const SmoothFunctional& J, const Point& x0, double gamma,
                      const Vector& x) {
  const double d = J.space()->norm(x - x0.coords());
  return 0.5 * d * d - J.value(x) / gamma;
}

double envelope_value(const SmoothFunctional& J, const Point& x0,
                      const ContractionResult& result) {
  return envelope_value(J, x0, result.gamma, result.x_min.coords());
}

}  // namespace unisphere
