#include "unisphere/landmarks.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace unisphere {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Linear extrapolation in eps through the last two samples.
double extrapolate(const std::vector<LandmarkSample>& samples, double LandmarkSample::*field) {
  if (samples.empty()) return kInf;
  if (samples.size() == 1) return samples.back().*field;
  const auto& a = samples[samples.size() - 2];
  const auto& b = samples.back();
  const double slope = (a.*field - b.*field) / (a.eps - b.eps);
  return b.*field - slope * b.eps;
}

// Distances that keep growing by non-shrinking increments have no visible
// finite limit as eps -> 0.
bool increments_not_shrinking(const std::vector<LandmarkSample>& samples) {
  if (samples.size() < 4) return false;
  const std::size_t n = samples.size();
  for (std::size_t k = n - 3; k + 1 < n; ++k) {
    const double prev = samples[k].distance - samples[k - 1].distance;
    const double next = samples[k + 1].distance - samples[k].distance;
    if (!(prev > 0.0) || next < prev) return false;
  }
  return true;
}

}  // namespace

void require_nondegenerate(const SmoothFunctional& J, const Point& x0, double tol_grad) {
  const double g = J.space()->norm(J.gradient(x0.coords()));
  if (!(g > tol_grad)) {
    throw DegenerateBasePoint(fmt::format(
        "||grad J(x0)|| = {:.3e} is below {:.3e}; thresholds may collapse at a critical point",
        g, tol_grad));
  }
}

std::vector<double> LandmarkOptions::default_schedule(int steps) {
  std::vector<double> eps;
  for (int k = 1; k <= steps; ++k) eps.push_back(std::ldexp(1.0, -k));
  return eps;
}

Landmarks estimate_landmarks(const SmoothFunctional& J, const Point& x0,
                             const LandmarkOptions& options) {
  require_nondegenerate(J, x0, options.tol_grad);
  const auto& schedule = options.eps_schedule;
  if (schedule.empty()) throw std::invalid_argument("empty eps schedule");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (!(schedule[k] > 0.0 && schedule[k] <= 1.0) ||
        (k > 0 && !(schedule[k] < schedule[k - 1]))) {
      throw std::invalid_argument("eps schedule must be decreasing within (0, 1]");
    }
  }

  const double L = J.lipschitz();
  const double cap =
      options.divergence_cap > 0.0 ? options.divergence_cap : 1e6 * (1.0 + x0.norm());

  Landmarks out{};
  out.J_base = J(x0);
  out.alpha0_lower = -kInf;
  out.beta0_lower = 0.0;
  out.diverged = false;

  ContractionOptions inner;
  inner.tol = options.tol;
  for (double eps : schedule) {
    const double gamma = L * (1.0 + eps);
    out.gamma_schedule.push_back(gamma);
    const ContractionResult res = minimize_shifted(J, x0, gamma, inner);
    const double dist = distance(res.x_min, x0);
    out.samples.push_back({eps, gamma, J(res.x_min), dist, res.iterations});
    out.alpha0_lower = std::max(out.alpha0_lower, out.samples.back().J_value);
    out.beta0_lower = std::max(out.beta0_lower, dist);
    if (dist > cap) {
      out.diverged = true;
      break;
    }
    inner.start = res.x_min.coords();
  }
  if (!out.diverged) out.diverged = increments_not_shrinking(out.samples);

  if (out.diverged) {
    out.alpha0_lower = out.beta0_lower = kInf;
    out.alpha0_extrapolated = out.beta0_extrapolated = kInf;
  } else {
    out.alpha0_extrapolated = extrapolate(out.samples, &LandmarkSample::J_value);
    out.beta0_extrapolated = extrapolate(out.samples, &LandmarkSample::distance);
  }
  return out;
}

MonotonicityReport monotonicity_scan(const SmoothFunctional& J, const Point& x0,
                                     const std::vector<double>& lambda_grid, double tol) {
  const double L = J.lipschitz();
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (lambda_grid[i] < 0.0 || !(lambda_grid[i] * L < 1.0)) {
      throw std::invalid_argument("lambda grid entries must lie in [0, 1/L)");
    }
    if (i > 0 && lambda_grid[i] < lambda_grid[i - 1]) {
      throw std::invalid_argument("lambda grid must be sorted ascending");
    }
  }

  MonotonicityReport report{lambda_grid, {}, {}, tol > 0.0 ? tol : default_contraction_tol(x0)};
  ContractionOptions inner;
  inner.tol = report.tol;
  for (double lambda : lambda_grid) {
    if (lambda == 0.0) {
      report.g_values.push_back(J(x0));
      continue;
    }
    const ContractionResult res = minimize_shifted(J, x0, 1.0 / lambda, inner);
    report.g_values.push_back(J(res.x_min));
    inner.start = res.x_min.coords();
  }
  for (std::size_t i = 0; i + 1 < report.g_values.size(); ++i) {
    if (report.g_values[i + 1] < report.g_values[i] - 10.0 * report.tol) {
      report.violations.push_back(static_cast<int>(i));
    }
  }
  return report;
}

}  // namespace unisphere
