#include "unisphere/spheremax.hpp"

#include <cmath>

#include <fmt/format.h>

namespace unisphere {

SphereMaxResult maximize_on_sphere(const SmoothFunctional& J, const Point& x0, double r,
                                   const SphereOptions& options) {
  if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("radius must be positive");
  require_nondegenerate(J, x0, options.tol_grad);

  const double L = J.lipschitz();
  const double tol_radius = options.tol_radius > 0.0 ? options.tol_radius : 1e-10 * (1.0 + r);
  const InnerProduct& space = *J.space();

  ContractionOptions inner;
  inner.tol = options.tol_inner * (1.0 + x0.norm());
  inner.start = options.warm_start;

  auto solve = [&](double lambda) {
    ContractionResult res = minimize_shifted(J, x0, lambda, inner);
    inner.start = res.x_min.coords();
    return res;
  };
  auto defect = [&](const ContractionResult& res) {
    return space.norm(res.x_min.coords() - x0.coords()) - r;
  };

  int outer = 0;
  auto finish = [&](const ContractionResult& res, double lambda,
                    std::vector<BracketStep> history) {
    const Vector& x = res.x_min.coords();
    const double radius_res = std::abs(space.norm(x - x0.coords()) - r);
    const double kkt = space.norm(J.gradient(x) - lambda * (x - x0.coords()));
    return SphereMaxResult{res.x_min, lambda, r, J.value(x), radius_res, kkt, outer,
                           std::move(history)};
  };

  // d(lambda) = ||x(lambda) - x0|| decreases from beta0 (lambda -> L) to 0.
  double lo = 2.0 * L;
  ContractionResult at_lo = solve(lo);
  double value_lo = defect(at_lo);
  ++outer;
  if (std::abs(value_lo) <= tol_radius) return finish(at_lo, lo, {});

  double hi = lo, value_hi = value_lo;
  if (value_lo > 0.0) {
    for (;;) {
      hi *= 2.0;
      if (hi > options.lambda_cap * L) {
        throw BracketFailure(fmt::format(
            "d(lambda) stays above r = {:.17g} up to lambda = {:.17g}", r, hi / 2.0));
      }
      ContractionResult res = solve(hi);
      value_hi = defect(res);
      ++outer;
      if (std::abs(value_hi) <= tol_radius) return finish(res, hi, {});
      if (value_hi < 0.0) break;
      lo = hi;
      value_lo = value_hi;
    }
  } else {
    const double lambda_min = L * (1.0 + options.eps_cap);
    for (int k = 1;; ++k) {
      const double eps = std::ldexp(1.0, -k);
      const double lambda = eps > options.eps_cap ? L * (1.0 + eps) : lambda_min;
      ContractionResult res = solve(lambda);
      const double value = defect(res);
      ++outer;
      if (std::abs(value) <= tol_radius) return finish(res, lambda, {});
      if (value > 0.0) {
        lo = lambda;
        value_lo = value;
        break;
      }
      hi = lambda;
      value_hi = value;
      if (lambda == lambda_min) {
        const double reach = value + r;
        throw SphereOutOfRange(
            fmt::format("radius r = {:.17g} exceeds d(L (1 + eps_cap)) = {:.17g}; r is at or "
                        "beyond the beta0 threshold",
                        r, reach),
            reach);
      }
    }
  }

  std::vector<BracketStep> history{{lo, hi, value_lo, value_hi}};
  for (; outer < options.max_outer; ++outer) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    ContractionResult res = solve(mid);
    const double value = defect(res);
    if (std::abs(value) <= tol_radius) {
      ++outer;
      return finish(res, mid, std::move(history));
    }
    if (value > 0.0) {
      lo = mid;
      value_lo = value;
    } else {
      hi = mid;
      value_hi = value;
    }
    history.push_back({lo, hi, value_lo, value_hi});
  }
  throw NoConvergence(
      fmt::format("sphere bisection stalled with bracket [{:.17g}, {:.17g}], radius defects "
                  "({:.3e}, {:.3e}) against tol {:.3e}",
                  lo, hi, value_lo, value_hi, tol_radius),
      inner.start.value_or(x0.coords()));
}

}  // namespace unisphere
