#include "unisphere/pde.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <thread>

#include <fmt/format.h>

namespace unisphere::pde {

namespace {

// log(cosh t) without overflow.
double log_cosh(double t) {
  const double a = std::abs(t);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

}  // namespace

Nonlinearity make_nonlinearity(const std::string& name, double scale, double mu_override) {
  if (!(scale > 0.0)) throw std::invalid_argument("nonlinearity scale must be positive");
  Nonlinearity out;
  double mu = 0.0;
  if (name == "cos") {
    out.f = [scale](double t) { return scale * std::cos(t); };
    out.F = [scale](double t) { return scale * std::sin(t); };
    mu = 1.0;
  } else if (name == "sin-shift") {
    out.f = [scale](double t) { return scale * std::sin(t + 1.0); };
    out.F = [scale](double t) { return scale * (std::cos(1.0) - std::cos(t + 1.0)); };
    mu = 1.0;
  } else if (name == "tanh") {
    out.f = [scale](double t) { return scale * (1.0 + std::tanh(t)); };
    out.F = [scale](double t) { return scale * (t + log_cosh(t)); };
    mu = 1.0;
  } else if (name == "affine") {
    out.f = [scale](double t) { return scale * (1.0 + 0.5 * t); };
    out.F = [scale](double t) { return scale * (t + 0.25 * t * t); };
    mu = 0.5;
  } else {
    throw std::invalid_argument(fmt::format("unknown nonlinearity '{}'", name));
  }
  out.name = name;
  out.mu = mu_override > 0.0 ? mu_override : scale * mu;
  return out;
}

SparseMatrix stiffness_matrix(int n) {
  const double inv_h = static_cast<double>(n + 1);
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(3 * n);
  for (int i = 0; i < n; ++i) {
    entries.emplace_back(i, i, 2.0 * inv_h);
    if (i > 0) entries.emplace_back(i, i - 1, -inv_h);
    if (i + 1 < n) entries.emplace_back(i, i + 1, -inv_h);
  }
  SparseMatrix A(n, n);
  A.setFromTriplets(entries.begin(), entries.end());
  return A;
}

double discrete_first_eigenvalue(int n) {
  const double h = 1.0 / (n + 1);
  return 2.0 / (h * h) * (1.0 - std::cos(std::numbers::pi * h));
}

EigenResult first_eigenvalue(const InnerProduct& stiffness, double h, double tol, int max_iter) {
  const int n = stiffness.dim();
  Vector v = Vector::Ones(n);
  v /= std::sqrt(h * v.squaredNorm());
  double lambda = stiffness.inner(v, v);
  double residual = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= max_iter; ++k) {
    Vector w = stiffness.riesz(h * v);
    v = w / std::sqrt(h * w.squaredNorm());
    lambda = stiffness.inner(v, v);  // v^T M v = 1
    residual = (stiffness.apply(v) - lambda * h * v).norm();
    if (residual <= tol * lambda * h * v.norm()) {
      if (v.sum() < 0.0) v = -v;
      return EigenResult{lambda, v, k, residual};
    }
  }
  throw NoConvergence(fmt::format("inverse power iteration stalled at residual {:.3e}", residual),
                      v);
}

EigenResult first_eigenvalue(const DirichletProblem1D& problem) {
  return first_eigenvalue(*problem.space(), problem.h());
}

DirichletProblem1D assemble(int n, Nonlinearity f) {
  if (n < 3) throw std::invalid_argument("need at least 3 interior nodes");
  if (!(f.mu > 0.0)) throw std::invalid_argument("mu must be positive");
  if (f.f(0.0) == 0.0) {
    throw HypothesisViolation(fmt::format("nonlinearity '{}' vanishes at 0", f.name));
  }

  DirichletProblem1D p;
  p.n_ = n;
  p.h_ = 1.0 / (n + 1);
  p.space_ = InnerProduct::sparse(stiffness_matrix(n));
  p.eigen_ = first_eigenvalue(*p.space_, p.h_);

  const double h = p.h_;
  auto value = [h, F = f.F](const Vector& u) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) sum += F(u[i]);
    return h * sum;
  };
  auto dual_gradient = [h, g = f.f](const Vector& u) {
    Vector b(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) b[i] = h * g(u[i]);
    return b;
  };
  p.functional_.emplace(p.space_, value, dual_gradient, f.mu / p.eigen_.lambda1);
  p.f_ = std::move(f);
  return p;
}

Vector DirichletProblem1D::nodes() const {
  Vector x(n_);
  for (int i = 0; i < n_; ++i) x[i] = (i + 1) * h_;
  return x;
}

Vector DirichletProblem1D::lumped_load(const Vector& u) const {
  return functional_->dual_gradient(u);
}

double DirichletProblem1D::pde_residual(const Vector& u, double pde_lambda) const {
  return (space_->apply(u) - pde_lambda * lumped_load(u)).norm();
}

Delta0Estimate estimate_delta0(const DirichletProblem1D& problem,
                               const LandmarkOptions& options) {
  const Point origin = Point::zero(problem.space());
  Landmarks marks = [&] {
    try {
      return estimate_landmarks(problem.functional(), origin, options);
    } catch (const DegenerateBasePoint& e) {
      // grad J(0) = A^{-1}(h f(0) 1) cannot vanish once f(0) != 0.
      throw std::logic_error(fmt::format("assembly bug: {}", e.what()));
    }
  }();
  const double b = marks.beta0_lower;
  const double be = marks.beta0_extrapolated;
  return Delta0Estimate{b * b, be * be, std::move(marks)};
}

namespace {

BranchSample make_sample(const DirichletProblem1D& problem, double r,
                         const SphereMaxResult& res) {
  const double pde_lambda = 1.0 / res.lambda_hat;
  return BranchSample{r,
                      res.x_hat,
                      res.J_value,
                      res.lambda_hat,
                      pde_lambda,
                      problem.pde_residual(res.x_hat.coords(), pde_lambda),
                      res.radius_residual,
                      res.outer_iterations};
}

}  // namespace

BranchTrace trace_branch(const DirichletProblem1D& problem, const std::vector<double>& r_values,
                         const BranchOptions& options) {
  for (std::size_t i = 0; i < r_values.size(); ++i) {
    if (!(r_values[i] > 0.0) || (i > 0 && !(r_values[i] > r_values[i - 1]))) {
      throw std::invalid_argument("r values must be positive and increasing");
    }
  }
  const SmoothFunctional& J = problem.functional();
  const Point origin = Point::zero(problem.space());

  SphereOptions sphere;
  sphere.tol_inner = options.tol_inner;
  sphere.tol_radius = options.tol_radius;

  BranchTrace trace;
  if (options.mode == BranchMode::warm) {
    for (double r : r_values) {
      try {
        const SphereMaxResult res = maximize_on_sphere(J, origin, std::sqrt(r), sphere);
        trace.samples.push_back(make_sample(problem, r, res));
        sphere.warm_start = res.x_hat.coords();
      } catch (const SphereOutOfRange& e) {
        trace.failed_r = r;
        trace.failure = e.what();
        break;
      }
    }
    return trace;
  }

  const unsigned threads =
      options.threads > 0 ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::optional<BranchSample>> results(r_values.size());
  std::vector<std::string> failures(r_values.size());
  for (std::size_t begin = 0; begin < r_values.size(); begin += threads) {
    const std::size_t end = std::min(r_values.size(), begin + threads);
    std::vector<std::future<void>> jobs;
    for (std::size_t i = begin; i < end; ++i) {
      jobs.push_back(std::async(std::launch::async, [&, i] {
        try {
          const SphereMaxResult res =
              maximize_on_sphere(J, origin, std::sqrt(r_values[i]), sphere);
          results[i] = make_sample(problem, r_values[i], res);
        } catch (const SphereOutOfRange& e) {
          failures[i] = e.what();
        }
      }));
    }
    for (auto& job : jobs) job.get();
  }
  for (std::size_t i = 0; i < r_values.size(); ++i) {
    if (!results[i]) {
      trace.failed_r = r_values[i];
      trace.failure = failures[i];
      break;
    }
    trace.samples.push_back(std::move(*results[i]));
  }
  return trace;
}

std::vector<double> branch_grid(double r_min, double r_max, int steps, Spacing spacing) {
  if (!(r_min > 0.0) || !(r_max > r_min)) {
    throw std::invalid_argument("need 0 < r_min < r_max");
  }
  if (steps < 2) throw std::invalid_argument("need at least 2 steps");
  std::vector<double> r(steps);
  for (int k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) / (steps - 1);
    r[k] = spacing == Spacing::linear ? r_min + t * (r_max - r_min)
                                      : r_min * std::pow(r_max / r_min, t);
  }
  r.front() = r_min;
  r.back() = r_max;
  return r;
}

GammaDerivativeReport check_gamma_derivative(const std::vector<BranchSample>& samples,
                                             double threshold) {
  GammaDerivativeReport report;
  report.threshold = threshold;
  for (std::size_t i = 1; i + 1 < samples.size(); ++i) {
    const double h1 = samples[i].r - samples[i - 1].r;
    const double h2 = samples[i + 1].r - samples[i].r;
    const double fd = -h2 / (h1 * (h1 + h2)) * samples[i - 1].gamma +
                      (h2 - h1) / (h1 * h2) * samples[i].gamma +
                      h1 / (h2 * (h1 + h2)) * samples[i + 1].gamma;
    const double half = 0.5 * samples[i].lambda_hat;
    const double rel = std::abs(fd - half) / std::abs(half);
    report.r.push_back(samples[i].r);
    report.fd_derivative.push_back(fd);
    report.half_lambda.push_back(half);
    report.relative_discrepancy.push_back(rel);
    report.max_relative_discrepancy = std::max(report.max_relative_discrepancy, rel);
    if (!(fd > 0.0)) report.gamma_prime_positive = false;
  }
  report.within_threshold = report.max_relative_discrepancy <= threshold;
  return report;
}

}  // namespace unisphere::pde
