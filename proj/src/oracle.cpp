#include "unisphere/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace unisphere {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double max_spacing(const std::vector<double>& axis) {
  double s = 0.0;
  for (std::size_t i = 1; i < axis.size(); ++i) s = std::max(s, axis[i] - axis[i - 1]);
  return s;
}

// Running Lipschitz modulus along one grid direction. For two adjacent
// intervals with difference quotients q_prev, q_cur the derivative on either
// interval is bounded by max(|q_prev|, |q_cur|) + |q_cur - q_prev| up to
// third-order terms.
void update_modulus(double& modulus, double q_prev, double q_cur) {
  const double m = std::max(std::abs(q_prev), std::abs(q_cur)) + std::abs(q_cur - q_prev);
  modulus = std::max(modulus, m);
}

void require_dim2(const Point& x0) {
  if (x0.dim() != 2) {
    throw ShapeError(fmt::format("brute-force oracles need dimension 2, got {}", x0.dim()));
  }
}

// Columns map the unit circle onto the unit sphere of the space norm.
Eigen::Matrix2d sphere_frame(const InnerProduct& space) {
  const Eigen::Matrix2d gram = Eigen::MatrixXd(space.gram());
  const Eigen::Matrix2d upper = gram.llt().matrixU();
  return upper.inverse();
}

}  // namespace

MinimaxInstance MinimaxInstance::pointwise(PointwiseFn psi,
                                           std::vector<std::vector<double>> x_axes,
                                           std::vector<double> lambda_grid,
                                           std::string description) {
  RowFn row = [psi = std::move(psi)](std::span<const double> x, std::span<const double> lambdas,
                                     std::span<double> out) {
    for (std::size_t j = 0; j < lambdas.size(); ++j) out[j] = psi(x, lambdas[j]);
  };
  return MinimaxInstance{std::move(row), std::move(x_axes), std::move(lambda_grid),
                         std::move(description)};
}

std::vector<double> uniform_axis(double a, double b, int n) {
  if (n < 1) throw std::invalid_argument("axis needs at least one point");
  std::vector<double> axis(n);
  for (int i = 0; i < n; ++i) {
    axis[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return axis;
}

MinimaxReport verify_minimax(const MinimaxInstance& instance, double tol) {
  const auto& axes = instance.x_axes;
  const auto& lambdas = instance.lambda_grid;
  if (axes.empty() || axes.size() > 2) throw ShapeError("minimax grids must have 1 or 2 x-axes");
  for (const auto& axis : axes) {
    if (axis.empty()) throw std::invalid_argument("empty x-axis");
  }
  if (lambdas.empty()) throw std::invalid_argument("empty lambda grid");

  const std::size_t n0 = axes[0].size();
  const std::size_t n1 = axes.size() == 2 ? axes[1].size() : 1;
  const std::size_t nl = lambdas.size();

  // Rows for the last 2 n0 grid points, enough for second differences
  // along both axes.
  const std::size_t ring = 2 * n0 + 1;
  std::vector<double> rows(ring * nl);
  auto row_at = [&](std::size_t p) { return std::span<double>(rows).subspan((p % ring) * nl, nl); };

  std::vector<double> column_min(nl, kInf);
  double inf_sup = kInf;
  double mod_x[2] = {0.0, 0.0};
  double mod_lambda = 0.0;
  double scale = 0.0;

  std::vector<double> x(axes.size());
  for (std::size_t j = 0; j < n1; ++j) {
    for (std::size_t i = 0; i < n0; ++i) {
      const std::size_t p = j * n0 + i;
      x[0] = axes[0][i];
      if (axes.size() == 2) x[1] = axes[1][j];
      auto cur = row_at(p);
      instance.row(x, lambdas, cur);

      double row_max = -kInf;
      for (std::size_t t = 0; t < nl; ++t) {
        if (!std::isfinite(cur[t])) {
          throw std::invalid_argument(fmt::format("non-finite Psi value in '{}'",
                                                  instance.description));
        }
        column_min[t] = std::min(column_min[t], cur[t]);
        row_max = std::max(row_max, cur[t]);
        scale = std::max(scale, std::abs(cur[t]));
      }
      inf_sup = std::min(inf_sup, row_max);

      if (nl == 2) {
        const double q = (cur[1] - cur[0]) / (lambdas[1] - lambdas[0]);
        mod_lambda = std::max(mod_lambda, std::abs(q));
      }
      for (std::size_t t = 2; t < nl; ++t) {
        const double q_prev = (cur[t - 1] - cur[t - 2]) / (lambdas[t - 1] - lambdas[t - 2]);
        const double q_cur = (cur[t] - cur[t - 1]) / (lambdas[t] - lambdas[t - 1]);
        update_modulus(mod_lambda, q_prev, q_cur);
      }

      // Axis 0 neighbours are p-1, p-2; axis 1 neighbours are p-n0, p-2 n0.
      auto along = [&](int a, std::size_t idx, std::size_t stride, const std::vector<double>& ax) {
        if (idx == 0) return;
        const double h_cur = ax[idx] - ax[idx - 1];
        auto back1 = row_at(p - stride);
        if (idx == 1) {
          if (ax.size() == 2) {
            for (std::size_t t = 0; t < nl; ++t) {
              mod_x[a] = std::max(mod_x[a], std::abs((cur[t] - back1[t]) / h_cur));
            }
          }
          return;
        }
        const double h_prev = ax[idx - 1] - ax[idx - 2];
        auto back2 = row_at(p - 2 * stride);
        for (std::size_t t = 0; t < nl; ++t) {
          update_modulus(mod_x[a], (back1[t] - back2[t]) / h_prev, (cur[t] - back1[t]) / h_cur);
        }
      };
      along(0, i, 1, axes[0]);
      if (axes.size() == 2) along(1, j, n0, axes[1]);
    }
  }

  MinimaxReport report{};
  report.sup_inf = *std::max_element(column_min.begin(), column_min.end());
  report.inf_sup = inf_sup;
  report.gap = inf_sup - report.sup_inf;
  report.lipschitz_x = std::hypot(mod_x[0], mod_x[1]);
  report.lipschitz_lambda = mod_lambda;
  double cover = 0.0;
  for (const auto& axis : axes) cover += std::pow(max_spacing(axis), 2);
  report.covering_x = 0.5 * std::sqrt(cover);
  report.covering_lambda = 0.5 * max_spacing(lambdas);
  report.grid_bound =
      report.lipschitz_x * report.covering_x + report.lipschitz_lambda * report.covering_lambda;
  report.tol = tol;
  report.weak_duality =
      report.gap >= -10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, scale);
  report.pass = report.weak_duality && report.gap <= report.grid_bound + tol;
  return report;
}

MinimaxInstance level_minimax_instance(const SmoothFunctional& J, const Point& x0, double r,
                                       const Box2& box, int n_per_axis, int n_lambda) {
  require_dim2(x0);
  const Space space = J.space();
  const Vector base = x0.coords();
  auto row = [J, space, base, r](std::span<const double> x, std::span<const double> lambdas,
                                 std::span<double> out) {
    const Vector p = Eigen::Vector2d(x[0], x[1]);
    const double d = space->norm(p - base);
    const double half_sq = 0.5 * d * d;
    const double slack = r - J.value(p);
    for (std::size_t t = 0; t < lambdas.size(); ++t) out[t] = half_sq + lambdas[t] * slack;
  };
  return MinimaxInstance{
      std::move(row),
      {uniform_axis(box.x_lo, box.x_hi, n_per_axis), uniform_axis(box.y_lo, box.y_hi, n_per_axis)},
      uniform_axis(0.0, 1.0 / J.lipschitz(), n_lambda),
      fmt::format("level Psi, r = {}, {}^2 x {} grid", r, n_per_axis, n_lambda)};
}

SphereOracle brute_force_sphere_max(const SmoothFunctional& J, const Point& x0, double r,
                                    int n_angles) {
  require_dim2(x0);
  if (n_angles < 8) throw std::invalid_argument("n_angles must be at least 8");
  const Eigen::Matrix2d frame = sphere_frame(*J.space());
  const double step = 2.0 * std::numbers::pi / n_angles;

  Vector best;
  double best_value = -kInf;
  double grad_max = 0.0;
  for (int k = 0; k < n_angles; ++k) {
    const double t = step * k;
    const Vector x = x0.coords() + r * frame * Eigen::Vector2d(std::cos(t), std::sin(t));
    const double value = J.value(x);
    grad_max = std::max(grad_max, J.space()->norm(J.gradient(x)));
    if (value > best_value) {
      best_value = value;
      best = x;
    }
  }
  return SphereOracle{Point(x0.space(), best), best_value, grad_max * r * step};
}

LevelOracle brute_force_level_projection(const SmoothFunctional& J, const Point& x0, double r,
                                         const Box2& box, int n_cells) {
  require_dim2(x0);
  if (n_cells < 1) throw std::invalid_argument("n_cells must be positive");
  const int n = n_cells + 1;
  const auto xs = uniform_axis(box.x_lo, box.x_hi, n);
  const auto ys = uniform_axis(box.y_lo, box.y_hi, n);
  auto defect = [&](double x, double y) { return J.value(Eigen::Vector2d(x, y)) - r; };

  std::vector<double> values(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) values[j * n + i] = defect(xs[i], ys[j]);
  }

  LevelOracle best{x0, kInf, 0};
  auto consider = [&](Eigen::Vector2d a, Eigen::Vector2d b, double fa, double fb) {
    if (fa == 0.0) b = a;
    else if (fb == 0.0) a = b;
    else if ((fa < 0.0) == (fb < 0.0)) return;
    for (int it = 0; it < 200 && a != b; ++it) {
      const Eigen::Vector2d mid = 0.5 * (a + b);
      if (mid == a || mid == b) break;
      const double fm = defect(mid[0], mid[1]);
      if (fm == 0.0) {
        a = b = mid;
        break;
      }
      if ((fm < 0.0) == (fa < 0.0)) {
        a = mid;
        fa = fm;
      } else {
        b = mid;
      }
    }
    const Vector crossing = 0.5 * (a + b);
    ++best.crossings;
    const double d = J.space()->norm(crossing - x0.coords());
    if (d < best.distance) {
      best.distance = d;
      best.nearest = Point(x0.space(), crossing);
    }
  };

  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double f = values[j * n + i];
      if (i + 1 < n) {
        consider({xs[i], ys[j]}, {xs[i + 1], ys[j]}, f, values[j * n + i + 1]);
      }
      if (j + 1 < n) {
        consider({xs[i], ys[j]}, {xs[i], ys[j + 1]}, f, values[(j + 1) * n + i]);
      }
    }
  }
  if (best.crossings == 0) {
    throw EmptyLevelSet(fmt::format("J - {:.17g} has no sign change on the {}x{} grid", r,
                                    n_cells, n_cells));
  }
  return best;
}

Vector random_sphere_point(std::mt19937_64& rng, const Point& x0, double r) {
  std::normal_distribution<double> normal;
  Vector v(x0.dim());
  double n = 0.0;
  while (!(n > 0.0)) {
    for (int i = 0; i < v.size(); ++i) v[i] = normal(rng);
    n = x0.space()->norm(v);
  }
  return x0.coords() + (r / n) * v;
}

Point projected_gradient_ascent(const SmoothFunctional& J, const Point& x0, double r,
                                const Vector& start, int max_iter) {
  const InnerProduct& space = *J.space();
  const Vector& c = x0.coords();
  auto project = [&](const Vector& y) -> Vector {
    const double n = space.norm(y - c);
    if (!(n > 0.0)) throw std::runtime_error("projection through the sphere center");
    return c + (r / n) * (y - c);
  };

  Vector x = project(start);
  const double L = J.lipschitz();
  for (int k = 0; k < max_iter; ++k) {
    const Vector g = J.gradient(x);
    const double eta = 1.0 / (L + space.norm(g) / r);
    const Vector next = project(x + eta * g);
    const double step = space.norm(next - x);
    x = next;
    if (step <= 1e-15 * (1.0 + r)) break;
  }
  return Point(x0.space(), x);
}

Point level_local_search(const SmoothFunctional& J, const Point& x0, double r,
                         const Vector& start, int max_iter) {
  const InnerProduct& space = *J.space();
  auto newton_project = [&](Vector x) {
    for (int it = 0; it < 100; ++it) {
      const double defect = r - J.value(x);
      if (std::abs(defect) <= 1e-15 * (1.0 + std::abs(r))) break;
      const Vector g = J.gradient(x);
      const double gg = space.squared_norm(g);
      if (!(gg > 0.0)) throw std::runtime_error("level search hit a critical point");
      x += (defect / gg) * g;
    }
    return x;
  };

  Vector x = newton_project(start);
  for (int k = 0; k < max_iter; ++k) {
    const Vector g = J.gradient(x);
    const Vector d = x - x0.coords();
    const Vector tangent = d - (space.inner(d, g) / space.squared_norm(g)) * g;
    const Vector next = newton_project(x - 0.5 * tangent);
    const double step = space.norm(next - x);
    x = next;
    if (step <= 1e-15 * (1.0 + space.norm(x))) break;
  }
  return Point(x0.space(), x);
}

}  // namespace unisphere
