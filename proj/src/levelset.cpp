#include "unisphere/levelset.hpp"

#include <cmath>
#include <optional>

#include <fmt/format.h>

namespace unisphere {

namespace {

// Minimizers x(lambda) of 1/2 ||x - x0||^2 - lambda J(x), warm-started from
// the most recent solve.
class MultiplierPath {
 public:
  MultiplierPath(const SmoothFunctional& J, const Point& x0, double tol)
      : J_(J), x0_(x0) {
    options_.tol = tol;
  }

  Vector solve(double lambda) {
    if (lambda == 0.0) return x0_.coords();
    const ContractionResult res = minimize_shifted(J_, x0_, 1.0 / lambda, options_);
    options_.start = res.x_min.coords();
    return res.x_min.coords();
  }

 private:
  const SmoothFunctional& J_;
  const Point& x0_;
  ContractionOptions options_;
};

}  // namespace

LevelProjection project_to_level(const SmoothFunctional& J, const Point& x0, double r,
                                 const LevelOptions& options) {
  const double J0 = J(x0);
  if (!(r > J0)) {
    throw BelowBase(
        fmt::format("level r = {:.17g} does not exceed J(x0) = {:.17g}", r, J0), J0);
  }
  require_nondegenerate(J, x0, options.tol_grad);

  const double L = J.lipschitz();
  const double tol_level = options.tol_level > 0.0 ? options.tol_level : 1e-8 * (1.0 + std::abs(r));
  const double inner_tol = options.tol_inner * (1.0 + x0.norm());
  const double lambda_max = (1.0 - options.eps_cap) / L;

  MultiplierPath path(J, x0, inner_tol);
  auto defect = [&](const Vector& x) { return J.value(x) - r; };

  auto finish = [&](double lambda, Vector y, int outer, double width,
                    std::vector<BracketStep> history) {
    const double dist = J.space()->norm(y - x0.coords());
    const double fp = J.space()->norm(y - x0.coords() - lambda * J.gradient(y));
    const double level_res = std::abs(J.value(y) - r);
    return LevelProjection{Point(x0.space(), std::move(y)), lambda, r, dist, level_res, fp,
                           outer, width, std::move(history)};
  };

  // Upper end of the bracket: approach lambda_max geometrically so that the
  // cheap, well-contracted probes come first.
  double lo = 0.0, value_lo = J0 - r;
  double hi = 0.0, value_hi = 0.0;
  Vector x_hi;
  bool bracketed = false;
  int outer = 0;
  for (int k = 1;; ++k) {
    const double eps = std::ldexp(1.0, -k);
    const double lambda = eps > options.eps_cap ? (1.0 - eps) / L : lambda_max;
    Vector x = path.solve(lambda);
    const double value = defect(x);
    ++outer;
    if (std::abs(value) <= tol_level) return finish(lambda, std::move(x), outer, 0.0, {});
    if (value > 0.0) {
      hi = lambda;
      value_hi = value;
      x_hi = std::move(x);
      bracketed = true;
      break;
    }
    lo = lambda;
    value_lo = value;
    if (lambda == lambda_max) break;
  }
  if (!bracketed) {
    throw LevelOutOfRange(
        fmt::format("level r = {:.17g} not reached at lambda_max = {:.17g} (J = {:.17g}); "
                    "r is at or beyond the alpha0 threshold",
                    r, lambda_max, value_lo + r),
        value_lo + r);
  }

  std::vector<BracketStep> history{{lo, hi, value_lo, value_hi}};
  for (; outer < options.max_outer; ++outer) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    Vector x = path.solve(mid);
    const double value = defect(x);
    if (std::abs(value) <= tol_level) {
      return finish(mid, std::move(x), outer + 1, hi - lo, std::move(history));
    }
    if (value < 0.0) {
      lo = mid;
      value_lo = value;
    } else {
      hi = mid;
      value_hi = value;
    }
    history.push_back({lo, hi, value_lo, value_hi});
  }
  throw NoConvergence(
      fmt::format("level bisection stalled with bracket [{:.17g}, {:.17g}], defects "
                  "({:.3e}, {:.3e}) against tol {:.3e}",
                  lo, hi, value_lo, value_hi, tol_level),
      x_hi);
}

}  // namespace unisphere
