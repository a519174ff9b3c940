#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>
#include <Eigen/Dense>

#include "unisphere/pde.hpp"

using namespace unisphere;
using namespace unisphere::pde;

namespace {

constexpr double kPi = std::numbers::pi;

Nonlinearity constant_one() {
  return Nonlinearity{"one", [](double) { return 1.0; }, [](double t) { return t; }, 1.0};
}

// Global minimum of 1/2 u^T A u - (lambda1 / mu) h sum sin(u_i) by damped
// Newton from many starts, dense linear algebra throughout.
double dense_envelope_delta0(int n, double lambda1, double mu) {
  const double h = 1.0 / (n + 1);
  const Eigen::MatrixXd A = Eigen::MatrixXd(stiffness_matrix(n));
  const double k = lambda1 / mu * h;
  auto phi = [&](const Vector& u) { return 0.5 * u.dot(A * u) - k * u.array().sin().sum(); };

  std::mt19937_64 rng(123);
  std::normal_distribution<double> normal(0.0, 3.0);
  double best = std::numeric_limits<double>::infinity();
  double best_norm2 = 0.0;
  for (int start = 0; start < 40; ++start) {
    Vector u(n);
    for (int i = 0; i < n; ++i) u[i] = normal(rng);
    for (int it = 0; it < 500; ++it) {
      const Vector g = A * u - k * u.array().cos().matrix();
      if (g.norm() < 1e-13) break;
      Eigen::MatrixXd H = A;
      H.diagonal() += k * u.array().sin().matrix();
      // Levenberg shift keeps the step a descent direction.
      const double shift = std::max(0.0, -H.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff()) + 1e-12;
      H.diagonal().array() += shift;
      Vector step = H.ldlt().solve(g);
      double t = 1.0;
      const double f0 = phi(u);
      while (phi(u - t * step) > f0 - 1e-4 * t * g.dot(step) && t > 1e-12) t *= 0.5;
      u -= t * step;
    }
    const double value = phi(u);
    const double norm2 = u.dot(A * u);
    if (value < best - 1e-10 || (std::abs(value - best) <= 1e-10 && norm2 < best_norm2)) {
      best = value;
      best_norm2 = norm2;
    }
  }
  return best_norm2;
}

}  // namespace

TEST_CASE("stiffness matrix for n = 3") {
  const Eigen::MatrixXd A = Eigen::MatrixXd(stiffness_matrix(3));
  Eigen::MatrixXd expected(3, 3);
  expected << 8, -4, 0, -4, 8, -4, 0, -4, 8;
  CHECK(A == expected);
}

TEST_CASE("f = 1 gives a linear functional with constant load") {
  const auto p = assemble(7, constant_one());
  const Vector u = Vector::LinSpaced(7, -1.0, 2.0);
  CHECK(p.functional().value(u) == doctest::Approx(p.h() * u.sum()).epsilon(1e-15));
  CHECK(p.lumped_load(u) == Vector::Constant(7, p.h()));
}

TEST_CASE("gradient at zero samples x(1 - x)/2") {
  const auto p = assemble(31, make_nonlinearity("cos"));
  const Vector zero = Vector::Zero(31);
  CHECK(p.functional().value(zero) == 0.0);
  const Vector g = p.functional().gradient(zero);
  const Vector x = p.nodes();
  const Vector exact = (x.array() * (1.0 - x.array()) / 2.0).matrix();
  // Second differences are exact on quadratics.
  CHECK((g - exact).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("first eigenvalue is the discrete sine mode") {
  for (int n : {3, 9, 99}) {
    const auto p = assemble(n, make_nonlinearity("cos"));
    const double exact = discrete_first_eigenvalue(n);
    CHECK(std::abs(p.eigen().lambda1 - exact) <= 1e-10 * exact);
    CHECK(p.lipschitz() == doctest::Approx(1.0 / p.eigen().lambda1).epsilon(1e-15));

    const Vector& v = p.eigen().eigvec;
    CHECK(v.minCoeff() > 0.0);
    CHECK((v - v.reverse()).cwiseAbs().maxCoeff() <= 1e-8 * v.maxCoeff());
  }
  CHECK(discrete_first_eigenvalue(3) == doctest::Approx(32 * (1 - std::cos(kPi / 4))));
  CHECK(std::abs(discrete_first_eigenvalue(99) - kPi * kPi) <= 1e-3 * kPi * kPi);
}

TEST_CASE("eigenvalue error is second order in h") {
  double prev = 0.0;
  for (int n : {7, 15, 31, 63}) {
    const auto p = assemble(n, make_nonlinearity("cos"));
    const double err = std::abs(p.eigen().lambda1 - kPi * kPi);
    if (prev > 0.0) CHECK(std::abs(std::log2(prev / err) - 2.0) <= 0.1);
    prev = err;
  }
}

TEST_CASE("assembly preconditions") {
  CHECK_THROWS_AS(assemble(10, Nonlinearity{"sin", [](double t) { return std::sin(t); },
                                            [](double t) { return 1 - std::cos(t); }, 1.0}),
                  HypothesisViolation);
  CHECK_THROWS_AS(assemble(2, make_nonlinearity("cos")), std::invalid_argument);
  CHECK_THROWS_AS(make_nonlinearity("nope"), std::invalid_argument);
  CHECK_THROWS_AS(make_nonlinearity("cos", -1.0), std::invalid_argument);
}

TEST_CASE("declared mu bounds f on sampled pairs") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 5.0);
  for (const char* name : {"cos", "sin-shift", "tanh", "affine"}) {
    const auto f = make_nonlinearity(name);
    for (int k = 0; k < 200; ++k) {
      const double a = normal(rng), b = normal(rng);
      CHECK(std::abs(f.f(a) - f.f(b)) <= f.mu * std::abs(a - b) * (1 + 1e-12));
    }
    CHECK(f.F(0.0) == 0.0);
    // F' = f.
    for (double t : {-2.0, 0.3, 1.7}) {
      CHECK((f.F(t + 1e-5) - f.F(t - 1e-5)) / 2e-5 == doctest::Approx(f.f(t)).epsilon(1e-8));
    }
  }
}

TEST_CASE("delta0 for f = 1 matches the closed-form envelope minimizer") {
  const auto p = assemble(31, constant_one());
  const double lambda1 = p.eigen().lambda1;
  const Vector u_star = lambda1 * p.space()->riesz(Vector::Constant(31, p.h()));
  const double exact = p.space()->squared_norm(u_star);

  const auto est = estimate_delta0(p);
  CHECK_FALSE(est.landmarks.diverged);
  CHECK(est.delta0 <= exact);
  CHECK(std::abs(est.delta0_extrapolated - exact) <= 1e-5 * exact);
}

TEST_CASE("delta0 for f = cos against a dense envelope minimization") {
  const auto p = assemble(15, make_nonlinearity("cos"));
  const double oracle = dense_envelope_delta0(15, p.eigen().lambda1, 1.0);
  const auto est = estimate_delta0(p);
  CHECK(std::isfinite(est.delta0));
  CHECK(est.delta0 > 0.0);
  CHECK(est.delta0 <= oracle * (1 + 1e-9));
  CHECK(std::abs(est.delta0_extrapolated - oracle) <= 5e-3 * oracle);
}

TEST_CASE("scaling f and mu together leaves delta0 unchanged") {
  const auto a = estimate_delta0(assemble(31, make_nonlinearity("cos")));
  const auto b = estimate_delta0(assemble(31, make_nonlinearity("cos", 2.0)));
  CHECK(b.delta0 == doctest::Approx(a.delta0).epsilon(1e-9));
}

TEST_CASE("branch for f = cos, n = 99") {
  const auto p = assemble(99, make_nonlinearity("cos"));
  const double delta0 = estimate_delta0(p).delta0;
  const auto grid = branch_grid(1e-4, 0.9 * delta0, 50, Spacing::geometric);
  const auto trace = trace_branch(p, grid);
  REQUIRE_FALSE(trace.failed_r);
  REQUIRE(trace.samples.size() == 50);

  double prev_gamma = 0.0;
  for (const auto& s : trace.samples) {
    CHECK(s.residual <= 1e-8 * (1 + s.u.norm()));
    CHECK(std::abs(s.u.norm() * s.u.norm() - s.r) <= 1e-8 * (1 + s.r));
    CHECK(s.gamma > 0.0);
    CHECK(s.gamma >= prev_gamma);
    CHECK(s.lambda_hat > p.lipschitz());
    CHECK(s.pde_lambda == 1.0 / s.lambda_hat);
    prev_gamma = s.gamma;
  }
  const auto& first = trace.samples.front();
  CHECK(std::abs(first.gamma - std::sqrt(first.r / 12)) <= 0.02 * std::sqrt(first.r / 12));
  CHECK(std::abs(0.5 * first.lambda_hat - 1 / (2 * std::sqrt(12 * first.r))) <=
        0.02 / (2 * std::sqrt(12 * first.r)));

  const auto report = check_gamma_derivative(trace.samples);
  CHECK(report.gamma_prime_positive);
  CHECK(report.within_threshold);
  CHECK(report.max_relative_discrepancy <= 0.01);
}

TEST_CASE("gamma derivative on a uniform grid with dr = 1e-3") {
  const auto p = assemble(49, make_nonlinearity("cos"));
  std::vector<double> grid;
  for (int k = 0; k <= 20; ++k) grid.push_back(0.5 + 1e-3 * k);
  const auto report = check_gamma_derivative(trace_branch(p, grid).samples);
  CHECK(report.r.size() == 19);
  CHECK(report.within_threshold);
  CHECK(report.gamma_prime_positive);
}

TEST_CASE("branch continuity: halving dr halves the gap") {
  const auto p = assemble(49, make_nonlinearity("cos"));
  const double r = 1.0;
  const auto base = trace_branch(p, {r}).samples.at(0).u;
  std::vector<double> gaps;
  for (double dr : {0.08, 0.04, 0.02, 0.01}) {
    const auto u = trace_branch(p, {r + dr}).samples.at(0).u;
    gaps.push_back(distance(u, base));
  }
  for (std::size_t i = 1; i < gaps.size(); ++i) CHECK(std::log2(gaps[i - 1] / gaps[i]) >= 0.9);
}

TEST_CASE("warm and cold sweeps agree") {
  const auto p = assemble(49, make_nonlinearity("tanh"));
  const auto grid = branch_grid(1e-3, 0.5, 12, Spacing::linear);
  const auto warm = trace_branch(p, grid);
  BranchOptions cold_opts;
  cold_opts.mode = BranchMode::cold;
  cold_opts.threads = 3;
  const auto cold = trace_branch(p, grid, cold_opts);
  REQUIRE(warm.samples.size() == cold.samples.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double tol = 1e-10 * (1 + grid[i]);
    CHECK(distance(warm.samples[i].u, cold.samples[i].u) <= 10 * tol * (1 + warm.samples[i].u.norm()));
    CHECK(std::abs(warm.samples[i].gamma - cold.samples[i].gamma) <= 10 * tol);
  }
}

TEST_CASE("sweep stops past the threshold and keeps earlier samples") {
  const auto p = assemble(31, make_nonlinearity("cos"));
  const double delta0 = estimate_delta0(p).delta0_extrapolated;
  const auto trace = trace_branch(p, {0.5 * delta0, 0.8 * delta0, 1.5 * delta0, 2 * delta0});
  REQUIRE(trace.failed_r);
  CHECK(*trace.failed_r == 1.5 * delta0);
  CHECK(trace.samples.size() == 2);
  CHECK_FALSE(trace.failure.empty());

  CHECK_THROWS_AS(trace_branch(p, {0.2, 0.1}), std::invalid_argument);
}

TEST_CASE("constant gamma samples are flagged") {
  const auto p = assemble(7, make_nonlinearity("cos"));
  const Point u = Point::zero(p.space());
  std::vector<BranchSample> samples;
  for (double r : {0.1, 0.2, 0.3, 0.4}) samples.push_back(BranchSample{r, u, 0.5, 2.0, 0.5, 0, 0, 0});
  const auto report = check_gamma_derivative(samples);
  CHECK_FALSE(report.within_threshold);
  CHECK_FALSE(report.gamma_prime_positive);
  CHECK(report.max_relative_discrepancy == 1.0);
}

TEST_CASE("branch grids") {
  const auto lin = branch_grid(1.0, 2.0, 5, Spacing::linear);
  CHECK(lin == std::vector<double>{1.0, 1.25, 1.5, 1.75, 2.0});
  const auto geo = branch_grid(1e-4, 1.0, 5, Spacing::geometric);
  CHECK(geo.front() == 1e-4);
  CHECK(geo.back() == 1.0);
  CHECK(geo[2] == doctest::Approx(1e-2).epsilon(1e-12));
  CHECK_THROWS_AS(branch_grid(1.0, 2.0, 1, Spacing::linear), std::invalid_argument);
  CHECK_THROWS_AS(branch_grid(0.0, 2.0, 5, Spacing::linear), std::invalid_argument);
}
