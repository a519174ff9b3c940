// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cli.hpp"
#include "unisphere/builtins.hpp"
#include "unisphere/contraction.hpp"
#include "unisphere/landmarks.hpp"
#include "unisphere/levelset.hpp"
#include "unisphere/oracle.hpp"
#include "unisphere/pde.hpp"
#include "unisphere/spheremax.hpp"

using namespace unisphere;

namespace {

const std::string kSpecs = UNISPHERE_SPEC_DIR;

struct Verdict {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Vector vec(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
  return out;
}

Verdict criterion1() {
  const auto t0 = Clock::now();
  const Space eye = InnerProduct::identity(2);
  const auto J = builtins::quadratic(eye);
  const Point x0(eye, vec(1, 0));
  const auto s = maximize_on_sphere(J, x0, 1.0);
  const auto p = project_to_level(J, x0, 2.0);
  const double elapsed = seconds_since(t0);

  const double ex = (s.x_hat.coords() - vec(2, 0)).norm();
  const double el = std::abs(s.lambda_hat - 2.0);
  const double ey = (p.y_r.coords() - vec(2, 0)).norm();
  const double es = std::abs(p.lambda_star - 0.5);
  const bool ok = ex <= 1e-8 && el <= 1e-8 && ey <= 1e-8 && es <= 1e-8 && elapsed < 0.1;
  return {ok, fmt::format("|x-(2,0)|={:.2e} |lam-2|={:.2e} |y-(2,0)|={:.2e} |lam*-0.5|={:.2e} "
                          "time={:.4f}s",
                          ex, el, ey, es, elapsed)};
}

Verdict criterion2() {
  const Space eye = InnerProduct::identity(2);
  const auto J = builtins::linear(eye, vec(1, 0), 1.0);
  const Point x0 = Point::zero(eye);
  const auto m = estimate_landmarks(J, x0);
  const double ea = std::abs(m.alpha0_extrapolated - 1.0);
  const double eb = std::abs(m.beta0_extrapolated - 1.0);
  const bool certified = m.alpha0_lower <= 1.0 && m.beta0_lower <= 1.0;
  const auto s = maximize_on_sphere(J, x0, 0.5);
  const double ex = (s.x_hat.coords() - vec(0.5, 0)).norm();
  const double el = std::abs(s.lambda_hat - 2.0);
  const bool ok = ea <= 1e-6 && eb <= 1e-6 && certified && !m.diverged && ex <= 1e-8 && el <= 1e-8;
  return {ok, fmt::format("alpha0 est={:.12f} beta0 est={:.12f} (certified lower {:.9f}) "
                          "|x-(0.5,0)|={:.2e} |lam-2|={:.2e}",
                          m.alpha0_extrapolated, m.beta0_extrapolated, m.alpha0_lower, ex, el)};
}

Verdict criterion3() {
  const Space eye = InnerProduct::identity(2);
  const auto J = builtins::quadratic(eye);
  const Point x0(eye, vec(1, 0));
  const Vector exact = vec(2, 0);
  double prev_err = (x0.coords() - exact).norm();
  double worst_ratio = 0.0;
  bool bound_holds = true;
  int counted = 0;
  ContractionOptions opts;
  opts.tol = 1e-14;
  opts.observer = [&](const ContractionStep& s) {
    const double err = (s.iterate - exact).norm();
    if (prev_err > 1e-13) {
      worst_ratio = std::max(worst_ratio, err / prev_err);
      ++counted;
    }
    if (err > s.error_bound * (1 + 1e-12) + 1e-15) bound_holds = false;
    prev_err = err;
  };
  minimize_shifted(J, x0, 2.0, opts);
  const bool ok = worst_ratio <= 0.5 + 1e-9 && bound_holds;
  return {ok, fmt::format("max error ratio={:.12f} over {} iterations, bound holds={}", worst_ratio,
                          counted, bound_holds)};
}

Verdict criterion4() {
  const auto t0 = Clock::now();
  const auto J = builtins::nonconvex2d();
  const Point x0 = Point::zero(J.space());
  const double beta = estimate_landmarks(J, x0).beta0_lower;
  std::mt19937_64 rng(4);
  double worst_spread = 0.0;
  double worst_oracle = 0.0;  // |J(x_hat) - oracle max| / resolution bound
  bool dominated = true;
  bool ok = true;
  for (int k = 1; k <= 5; ++k) {
    const double r = beta * k / 6.0;
    const auto s = maximize_on_sphere(J, x0, r);
    for (int i = 0; i < 32; ++i) {
      const Point q = projected_gradient_ascent(J, x0, r, random_sphere_point(rng, x0, r));
      const double spread = distance(q, s.x_hat) / (1.0 + r);
      worst_spread = std::max(worst_spread, spread);
    }
    const auto o = brute_force_sphere_max(J, x0, r, 10000);
    const double diff = std::abs(s.J_value - o.max);
    worst_oracle = std::max(worst_oracle, diff / o.resolution_bound);
    if (o.max > s.J_value + 1e-9) dominated = false;
  }
  const double elapsed = seconds_since(t0);
  ok = worst_spread <= 1e-6 && worst_oracle <= 1.0 && dominated && elapsed < 5.0;
  return {ok, fmt::format("beta0_lower={:.6f} max spread/(1+r)={:.2e} max |J-oracle|/bound={:.2e} "
                          "time={:.3f}s",
                          beta, worst_spread, worst_oracle, elapsed)};
}

Verdict criterion5() {
  const Space eye = InnerProduct::identity(2);
  struct Case {
    const char* name;
    SmoothFunctional J;
    Point x0;
  };
  std::vector<Case> cases{
      {"linear", builtins::linear(eye, vec(1, 0), 1.0), Point::zero(eye)},
      {"quadratic", builtins::quadratic(eye), Point(eye, vec(1, 0))},
      {"nonconvex2d", builtins::nonconvex2d(), Point::zero(eye)},
      {"zero", builtins::zero(eye, 1.0), Point(eye, vec(1, 1))},
  };
  std::size_t total = 0;
  std::string parts;
  for (const auto& c : cases) {
    const auto rep = monotonicity_scan(c.J, c.x0, linspace(0.0, 0.95 / c.J.lipschitz(), 20));
    total += rep.violations.size();
    parts += fmt::format(" {}={}", c.name, rep.violations.size());
  }
  return {total == 0, "violations:" + parts};
}

Verdict criterion6() {
  const Space eye = InnerProduct::identity(2);
  const auto J = builtins::quadratic(eye);
  const Point x0(eye, vec(1, 0));
  const Box2 box{-1, 3, -2, 2};
  std::vector<MinimaxReport> reps;
  for (auto [n, m] : {std::pair{201, 101}, std::pair{401, 201}, std::pair{801, 401}}) {
    reps.push_back(verify_minimax(level_minimax_instance(J, x0, 2.0, box, n, m)));
  }
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    ok &= reps[i].pass && reps[i].gap <= reps[i].grid_bound;
    if (i > 0) ok &= reps[i].grid_bound <= 0.5 * reps[i - 1].grid_bound;
    detail += fmt::format("{}gap={:.3e} bound={:.4e}", i ? "; " : "", reps[i].gap, reps[i].grid_bound);
  }
  return {ok, detail};
}

Verdict criterion7() {
  const Space line = InnerProduct::identity(1);
  const auto J = builtins::quadratic(line);
  const Point x0 = Point::zero(line);
  int raised = 0;
  const std::vector<std::function<void()>> calls{
      [&] { estimate_landmarks(J, x0); },
      [&] { maximize_on_sphere(J, x0, 1.0); },
      [&] { project_to_level(J, x0, 1.0); },
  };
  for (const auto& call : calls) {
    try {
      call();
    } catch (const DegenerateBasePoint&) {
      ++raised;
    }
  }
  std::ostringstream out, err;
  const int code = cli::run({"landmarks", kSpecs + "/quadratic_origin.json"}, out, err);
  return {raised == 3 && code == 2,
          fmt::format("DegenerateBasePoint raised by {}/3 operations, CLI exit code {}", raised, code)};
}

Verdict criterion8() {
  double worst = 0.0;
  for (int n : {3, 9, 99}) {
    const auto p = pde::assemble(n, pde::make_nonlinearity("cos"));
    const double exact = pde::discrete_first_eigenvalue(n);
    worst = std::max(worst, std::abs(p.eigen().lambda1 - exact) / exact);
  }
  std::vector<double> orders;
  double prev = 0.0;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (int n : {7, 15, 31, 63}) {
    const double err = std::abs(pde::assemble(n, pde::make_nonlinearity("cos")).eigen().lambda1 - pi2);
    if (prev > 0.0) orders.push_back(std::log2(prev / err));
    prev = err;
  }
  bool ok = worst <= 1e-10;
  for (double o : orders) ok &= std::abs(o - 2.0) <= 0.1;
  return {ok, fmt::format("max relative error={:.2e} orders={:.4f},{:.4f},{:.4f}", worst, orders[0],
                          orders[1], orders[2])};
}

Verdict criterion9() {
  const auto t0 = Clock::now();
  const auto p = pde::assemble(99, pde::make_nonlinearity("cos"));
  const double delta0 = pde::estimate_delta0(p).delta0;
  const auto grid = pde::branch_grid(1e-4, 0.9 * delta0, 50, pde::Spacing::geometric);
  const auto trace = pde::trace_branch(p, grid);
  const double elapsed = seconds_since(t0);

  bool ok = !trace.failed_r && trace.samples.size() == 50;
  double max_residual = 0.0;
  bool gamma_ok = true;
  double prev = 0.0;
  double small_r_err = 0.0;
  int small_r = 0;
  for (const auto& s : trace.samples) {
    max_residual = std::max(max_residual, s.residual);
    gamma_ok &= s.gamma > 0.0 && s.gamma >= prev;
    prev = s.gamma;
    // Small r: r <= 1e-2, where the O(r) correction to sqrt(r/12) is below 1%.
    if (s.r <= 1e-2) {
      const double asym = std::sqrt(s.r / 12.0);
      small_r_err = std::max(small_r_err, std::abs(s.gamma - asym) / asym);
      ++small_r;
    }
  }
  const auto g = pde::check_gamma_derivative(trace.samples, 0.01);
  ok &= max_residual <= 1e-8 && gamma_ok && g.within_threshold && g.gamma_prime_positive &&
        small_r > 0 && small_r_err <= 0.02 && elapsed < 30.0;
  return {ok, fmt::format("delta0={:.6f} samples={} max residual={:.2e} gamma positive and "
                          "nondecreasing={} max |gamma'-lam/2|/(lam/2)={:.4f} small-r ({} samples) "
                          "max rel err={:.4f} time={:.3f}s",
                          delta0, trace.samples.size(), max_residual, gamma_ok,
                          g.max_relative_discrepancy, small_r, small_r_err, elapsed)};
}

Verdict criterion10() {
  bool identical = true;
  int runs = 0;
  for (const char* spec : {"nonconvex2d", "pde_cos", "quadratic"}) {
    for (const char* fmt : {"csv", "records"}) {
      std::ostringstream a, b, e1, e2;
      const std::string path = kSpecs + "/" + spec + ".json";
      cli::run({"verify", path, "--format", fmt, "--seed", "11"}, a, e1);
      cli::run({"verify", path, "--format", fmt, "--seed", "11"}, b, e2);
      identical &= !a.str().empty() && a.str() == b.str();
      ++runs;
    }
  }
  return {identical, fmt::format("{} verify output pairs byte-identical={}", runs, identical)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"quadratic closed forms", criterion1},   {"linear closed forms", criterion2},
      {"contraction certificate", criterion3},  {"spherical maximum uniqueness", criterion4},
      {"monotonicity", criterion5},             {"minimax grid refinement", criterion6},
      {"degenerate base point", criterion7},    {"discrete eigenvalue", criterion8},
      {"PDE branch", criterion9},               {"determinism", criterion10},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v{false, ""};
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, fmt::format("exception: {}", e.what())};
    }
    failed += !v.pass;
    std::printf("criterion %zu: %s  %s: %s\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first,
                v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
