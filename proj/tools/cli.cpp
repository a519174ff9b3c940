#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "unisphere/builtins.hpp"
#include "unisphere/contraction.hpp"
#include "unisphere/landmarks.hpp"
#include "unisphere/levelset.hpp"
#include "unisphere/oracle.hpp"
#include "unisphere/spheremax.hpp"

namespace unisphere::cli {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return fmt::format("{:016x}", h);
}

// ---- spec parsing ---------------------------------------------------------

void check_keys(const json& j, const std::set<std::string>& allowed) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw SpecError(fmt::format("unknown key '{}'", key));
  }
}

double get_positive(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw SpecError(fmt::format("'{}' must be a number", key));
  const double v = j[key].get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) throw SpecError(fmt::format("'{}' must be positive", key));
  return v;
}

Vector get_vector(const json& j, const char* key) {
  const json& a = j.at(key);
  if (!a.is_array() || a.empty()) throw SpecError(fmt::format("'{}' must be a nonempty array", key));
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw SpecError(fmt::format("'{}' entries must be numbers", key));
    v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  }
  if (!v.allFinite()) throw SpecError(fmt::format("'{}' entries must be finite", key));
  return v;
}

Space get_space(const json& j, int dim) {
  if (!j.contains("gram")) return InnerProduct::identity(dim);
  const json& g = j["gram"];
  if (!g.is_array() || static_cast<int>(g.size()) != dim) {
    throw SpecError(fmt::format("'gram' must have {} rows", dim));
  }
  Eigen::MatrixXd m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    if (!g[i].is_array() || static_cast<int>(g[i].size()) != dim) {
      throw SpecError(fmt::format("'gram' must be {0}x{0}", dim));
    }
    for (int k = 0; k < dim; ++k) {
      if (!g[i][k].is_number()) throw SpecError("'gram' entries must be numbers");
      m(i, k) = g[i][k].get<double>();
    }
  }
  try {
    return InnerProduct::dense(m);
  } catch (const FactorizationError& e) {
    throw SpecError(fmt::format("'gram': {}", e.what()));
  }
}

}  // namespace

ProblemSpec parse_spec(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecError(fmt::format("spec is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw SpecError("spec must be a JSON object");
  if (!j.contains("kind") || !j["kind"].is_string()) throw SpecError("spec needs a string 'kind'");

  ProblemSpec spec;
  spec.kind = j["kind"].get<std::string>();
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<std::int64_t>() < 0) {
      throw SpecError("'seed' must be a nonnegative integer");
    }
    spec.seed = j["seed"].get<std::uint64_t>();
  }

  if (spec.kind == "builtin-linear") {
    check_keys(j, {"kind", "seed", "c", "x0", "lipschitz", "gram"});
    if (!j.contains("c")) throw SpecError("builtin-linear needs 'c'");
  } else if (spec.kind == "builtin-quadratic") {
    check_keys(j, {"kind", "seed", "x0", "lipschitz", "gram"});
    if (!j.contains("x0")) throw SpecError("builtin-quadratic needs 'x0'");
  } else if (spec.kind == "builtin-nonconvex2d") {
    check_keys(j, {"kind", "seed", "x0", "lipschitz"});
  } else if (spec.kind == "pde1d") {
    check_keys(j, {"kind", "seed", "n", "nonlinearity", "scale", "mu"});
    if (!j.contains("n") || !j["n"].is_number_integer()) throw SpecError("pde1d needs integer 'n'");
    if (!j.contains("nonlinearity") || !j["nonlinearity"].is_string()) {
      throw SpecError("pde1d needs a string 'nonlinearity'");
    }
  } else {
    throw SpecError(fmt::format("unknown kind '{}'", spec.kind));
  }
  spec.raw = std::move(j);
  spec.digest = fnv1a_hex(spec.raw.dump());
  return spec;
}

Problem build_problem(const ProblemSpec& spec) {
  const json& j = spec.raw;
  Problem p;
  if (spec.kind == "pde1d") {
    const auto n = j["n"].get<std::int64_t>();
    if (n < 3 || n > 1000000) throw SpecError("'n' must lie in [3, 1000000]");
    pde::Nonlinearity f;
    try {
      f = pde::make_nonlinearity(j["nonlinearity"].get<std::string>(),
                                 get_positive(j, "scale", 1.0), get_positive(j, "mu", 0.0));
    } catch (const std::invalid_argument& e) {
      throw SpecError(e.what());
    }
    p.pde.emplace(pde::assemble(static_cast<int>(n), std::move(f)));
    p.J.emplace(p.pde->functional());
    p.x0.emplace(Point::zero(p.pde->space()));
    return p;
  }

  if (spec.kind == "builtin-nonconvex2d") {
    p.J.emplace(builtins::nonconvex2d(get_positive(j, "lipschitz", builtins::kNonconvexAmplitude)));
    p.x0.emplace(j.contains("x0") ? Point(p.J->space(), get_vector(j, "x0"))
                                  : Point::zero(p.J->space()));
    if (p.x0->dim() != 2) throw SpecError("builtin-nonconvex2d lives in dimension 2");
    return p;
  }

  const double L = get_positive(j, "lipschitz", 1.0);
  if (spec.kind == "builtin-linear") {
    const Vector c = get_vector(j, "c");
    const Space space = get_space(j, static_cast<int>(c.size()));
    p.J.emplace(builtins::linear(space, c, L));
    p.x0.emplace(j.contains("x0") ? Point(space, get_vector(j, "x0")) : Point::zero(space));
  } else {
    const Vector x0 = get_vector(j, "x0");
    const Space space = get_space(j, static_cast<int>(x0.size()));
    p.J.emplace(builtins::quadratic(space, L));
    p.x0.emplace(space, x0);
  }
  return p;
}

// ---- emission -------------------------------------------------------------

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", x);
}

namespace {

std::string plain(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, double>) {
          return format_double(x);
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else {
          return std::to_string(x);
        }
      },
      v);
}

std::string human(const Value& v) {
  if (const double* d = std::get_if<double>(&v); d && std::isfinite(*d)) {
    return fmt::format("{:.10g}", *d);
  }
  return plain(v);
}

std::string json_value(const Value& v) {
  if (const double* d = std::get_if<double>(&v); d && std::isfinite(*d)) return format_double(*d);
  if (std::holds_alternative<std::int64_t>(v) || std::holds_alternative<bool>(v)) return plain(v);
  return json(plain(v)).dump();
}

void emit_csv(const RunResult& r, std::ostream& out) {
  out << "# command=" << r.command << '\n' << "# spec_digest=" << r.spec_digest << '\n';
  for (const auto& [k, v] : r.header) out << "# " << k << '=' << plain(v) << '\n';
  for (std::size_t i = 0; i < r.columns.size(); ++i) out << (i ? "," : "") << r.columns[i];
  out << '\n';
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << plain(row[i]);
    out << '\n';
  }
  for (const auto& [k, v] : r.footer) out << "# " << k << '=' << plain(v) << '\n';
  for (const auto& w : r.warnings) out << "# warning=" << w << '\n';
}

void emit_records(const RunResult& r, std::ostream& out) {
  auto object = [&](const char* type, const std::vector<Field>& fields) {
    out << "{\"type\":\"" << type << '"';
    for (const auto& [k, v] : fields) out << ',' << json(k).dump() << ':' << json_value(v);
    out << "}\n";
  };
  std::vector<Field> head{{"command", r.command}, {"spec_digest", r.spec_digest}};
  head.insert(head.end(), r.header.begin(), r.header.end());
  object("header", head);
  for (const auto& row : r.rows) {
    std::vector<Field> fields;
    for (std::size_t i = 0; i < row.size(); ++i) fields.emplace_back(r.columns[i], row[i]);
    object("row", fields);
  }
  object("footer", r.footer);
  for (const auto& w : r.warnings) object("warning", {{"message", w}});
}

void emit_human(const RunResult& r, std::ostream& out) {
  out << r.command << " (spec " << r.spec_digest << ")\n";
  for (const auto& [k, v] : r.header) out << "  " << k << ": " << human(v) << '\n';
  if (!r.columns.empty()) {
    std::vector<std::size_t> width(r.columns.size());
    for (std::size_t i = 0; i < r.columns.size(); ++i) width[i] = r.columns[i].size();
    for (const auto& row : r.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], human(row[i]).size());
    }
    out << '\n';
    for (std::size_t i = 0; i < r.columns.size(); ++i) {
      out << (i ? "  " : "") << std::setw(static_cast<int>(width[i])) << r.columns[i];
    }
    out << '\n';
    for (const auto& row : r.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        out << (i ? "  " : "") << std::setw(static_cast<int>(width[i])) << human(row[i]);
      }
      out << '\n';
    }
  }
  if (!r.footer.empty()) out << '\n';
  for (const auto& [k, v] : r.footer) out << "  " << k << ": " << human(v) << '\n';
  for (const auto& w : r.warnings) out << "warning: " << w << '\n';
}

}  // namespace

void emit(const RunResult& result, Format format, std::ostream& out) {
  switch (format) {
    case Format::csv: emit_csv(result, out); break;
    case Format::records: emit_records(result, out); break;
    case Format::human: emit_human(result, out); break;
  }
}

// ---- commands -------------------------------------------------------------

namespace {

struct Flags {
  std::string spec_path;
  double tol = 0.0;
  int max_iter = 0;
  std::optional<std::uint64_t> seed;
  Format format = Format::human;
  std::string output;

  double r = 0.0;  // project / spheremax

  // pde-branch
  double r_min = 1e-4;
  std::optional<double> r_max;
  double r_max_fraction = 0.9;
  int steps = 50;
  pde::Spacing spacing = pde::Spacing::geometric;
  bool emit_solutions = false;
  bool cold = false;
  unsigned threads = 0;
};

/// Carries a result that must still be emitted when a command ends early.
struct PartialResult {
  RunResult result;
  int code;
  std::string message;
};

void push_coordinates(RunResult& res, const Vector& x, const char* name) {
  res.columns = {"index", name};
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    res.rows.push_back({static_cast<std::int64_t>(i), x[i]});
  }
}

RunResult cmd_landmarks(const ProblemSpec& spec, const Problem& p, const Flags& flags) {
  LandmarkOptions opts;
  opts.tol = flags.tol;
  const Landmarks m = estimate_landmarks(*p.J, *p.x0, opts);
  RunResult res;
  res.header = {{"lipschitz", p.J->lipschitz()},
                {"J_base", m.J_base},
                {"alpha0_lower", m.alpha0_lower},
                {"beta0_lower", m.beta0_lower},
                {"alpha0_extrapolated", m.alpha0_extrapolated},
                {"beta0_extrapolated", m.beta0_extrapolated},
                {"diverged", m.diverged}};
  res.columns = {"eps", "gamma", "J_value", "distance", "iterations"};
  for (const auto& s : m.samples) {
    res.rows.push_back({s.eps, s.gamma, s.J_value, s.distance, static_cast<std::int64_t>(s.iterations)});
  }
  if (m.diverged) res.warnings.push_back("minimizer set judged empty; bounds are +inf");
  (void)spec;
  return res;
}

RunResult cmd_project(const Problem& p, const Flags& flags) {
  LevelOptions opts;
  opts.tol_level = flags.tol;
  if (flags.max_iter > 0) opts.max_outer = flags.max_iter;
  const LevelProjection y = project_to_level(*p.J, *p.x0, flags.r, opts);
  RunResult res;
  res.header = {{"level", y.level},
                {"lambda_star", y.lambda_star},
                {"distance", y.distance},
                {"J_value", (*p.J)(y.y_r)},
                {"level_residual", y.level_residual},
                {"fixed_point_residual", y.fixed_point_residual},
                {"outer_iterations", static_cast<std::int64_t>(y.outer_iterations)},
                {"bracket_width", y.bracket_width}};
  push_coordinates(res, y.y_r.coords(), "y");
  return res;
}

RunResult cmd_spheremax(const Problem& p, const Flags& flags) {
  SphereOptions opts;
  opts.tol_radius = flags.tol;
  if (flags.max_iter > 0) opts.max_outer = flags.max_iter;
  const SphereMaxResult s = maximize_on_sphere(*p.J, *p.x0, flags.r, opts);
  RunResult res;
  res.header = {{"radius", s.radius},
                {"lambda_hat", s.lambda_hat},
                {"J_value", s.J_value},
                {"radius_residual", s.radius_residual},
                {"kkt_residual", s.kkt_residual},
                {"outer_iterations", static_cast<std::int64_t>(s.outer_iterations)}};
  push_coordinates(res, s.x_hat.coords(), "x");
  return res;
}

RunResult cmd_pde_branch(const Problem& p, const Flags& flags) {
  if (!p.pde) throw SpecError("pde-branch needs a pde1d spec");
  if (flags.steps < 2) throw SpecError("--steps must be at least 2");
  if (!(flags.r_min > 0.0)) throw SpecError("--r-min must be positive");
  const pde::DirichletProblem1D& prob = *p.pde;
  const pde::Delta0Estimate d0 = pde::estimate_delta0(prob);

  double r_max = 0.0;
  if (flags.r_max) {
    r_max = *flags.r_max;
  } else {
    if (!std::isfinite(d0.delta0)) throw SpecError("delta0 estimate is infinite; pass --r-max");
    r_max = flags.r_max_fraction * d0.delta0;
  }
  if (!(r_max > flags.r_min)) throw SpecError("need 0 < r-min < r-max");

  const auto grid = pde::branch_grid(flags.r_min, r_max, flags.steps, flags.spacing);
  pde::BranchOptions opts;
  opts.mode = flags.cold ? pde::BranchMode::cold : pde::BranchMode::warm;
  opts.tol_radius = flags.tol;
  opts.threads = flags.threads;
  const pde::BranchTrace trace = pde::trace_branch(prob, grid, opts);

  RunResult res;
  res.header = {{"n", static_cast<std::int64_t>(prob.n())},
                {"h", prob.h()},
                {"nonlinearity", prob.nonlinearity().name},
                {"mu", prob.nonlinearity().mu},
                {"lambda1", prob.eigen().lambda1},
                {"lipschitz", prob.lipschitz()},
                {"delta0", d0.delta0},
                {"delta0_extrapolated", d0.delta0_extrapolated},
                {"r_min", flags.r_min},
                {"r_max", r_max},
                {"steps", static_cast<std::int64_t>(flags.steps)},
                {"spacing", flags.spacing == pde::Spacing::geometric ? "geometric" : "linear"},
                {"mode", flags.cold ? "cold" : "warm"}};
  res.columns = {"r", "gamma", "lambda_hat", "pde_lambda", "radius_residual", "pde_residual"};
  if (flags.emit_solutions) {
    for (int i = 1; i <= prob.n(); ++i) res.columns.push_back(fmt::format("u_{}", i));
  }
  double max_residual = 0.0;
  for (const auto& s : trace.samples) {
    std::vector<Value> row{s.r, s.gamma, s.lambda_hat, s.pde_lambda, s.radius_residual, s.residual};
    if (flags.emit_solutions) {
      for (Eigen::Index i = 0; i < s.u.dim(); ++i) row.emplace_back(s.u[i]);
    }
    res.rows.push_back(std::move(row));
    max_residual = std::max(max_residual, s.residual);
  }

  res.footer = {{"samples", static_cast<std::int64_t>(trace.samples.size())},
                {"max_pde_residual", max_residual}};
  if (trace.samples.size() >= 3) {
    const auto g = pde::check_gamma_derivative(trace.samples);
    res.footer.emplace_back("gamma_prime_max_relative_discrepancy", g.max_relative_discrepancy);
    res.footer.emplace_back("gamma_prime_threshold", g.threshold);
    res.footer.emplace_back("gamma_prime_within_threshold", g.within_threshold);
    res.footer.emplace_back("gamma_prime_positive", g.gamma_prime_positive);
  }
  if (trace.failed_r) {
    res.footer.emplace_back("failed_r", *trace.failed_r);
    throw PartialResult{std::move(res), kOutOfRange,
                        fmt::format("sweep left the admissible range at r = {}: {}",
                                    format_double(*trace.failed_r), trace.failure)};
  }
  return res;
}

// ---- verify -----------------------------------------------------------------

class Suite {
 public:
  explicit Suite(RunResult& res) : res_(res) {
    res_.columns = {"check", "passed", "measured", "relation", "threshold"};
  }

  /// `fn` returns the measured value; the check passes when
  /// measured <relation> threshold.
  void check(const std::string& name, const std::string& relation, double threshold,
             const std::function<double()>& fn) {
    check(name, relation, [&] { return std::pair{fn(), threshold}; });
  }

  /// Variant for thresholds that depend on the computation itself.
  void check(const std::string& name, const std::string& relation,
             const std::function<std::pair<double, double>()>& fn) {
    double measured = std::numeric_limits<double>::quiet_NaN();
    double threshold = std::numeric_limits<double>::quiet_NaN();
    bool passed = false;
    try {
      std::tie(measured, threshold) = fn();
      if (relation == "<=") passed = measured <= threshold;
      else if (relation == ">=") passed = measured >= threshold;
      else if (relation == ">") passed = measured > threshold;
      else passed = measured == threshold;
    } catch (const Error& e) {
      res_.warnings.push_back(fmt::format("{}: {}", name, e.what()));
    }
    res_.rows.push_back({name, passed, measured, relation, threshold});
    all_ &= passed;
    ++count_;
  }

  bool all_passed() const { return all_; }
  int count() const { return count_; }

 private:
  RunResult& res_;
  bool all_ = true;
  int count_ = 0;
};

Box2 box_around(const Point& x0, double radius) {
  // Offsetting by an irrational fraction of the width keeps grid lines off
  // the symmetry axes of the built-ins.
  const double w = 1.5 * radius + 0.1;
  const double shift = (std::numbers::sqrt2 - 1.0) * w / 97.0;
  return Box2{x0[0] - w + shift, x0[0] + w + shift, x0[1] - w + shift, x0[1] + w + shift};
}

RunResult cmd_verify(const ProblemSpec& spec, const Problem& p, const Flags& flags) {
  const SmoothFunctional& J = *p.J;
  const Point& x0 = *p.x0;
  const double L = J.lipschitz();
  const std::uint64_t seed = flags.seed.value_or(spec.seed);
  const int dim = x0.dim();

  require_nondegenerate(J, x0);

  RunResult res;
  res.header = {{"kind", spec.kind},
                {"seed", static_cast<std::int64_t>(seed)},
                {"dimension", static_cast<std::int64_t>(dim)},
                {"lipschitz", L}};
  Suite suite(res);

  const ValidationReport val =
      validate_functional(J, gaussian_pair_sampler(dim, seed, 1.0, x0.coords()), 100, 1e-5);
  suite.check("lipschitz_ratio", "<=", L * (1 + 1e-12), [&] { return val.max_lipschitz_ratio; });
  suite.check("gradient_fd_discrepancy", "<=", 1e-6, [&] { return val.max_fd_discrepancy; });
  suite.check("gradient_norm_x0", ">", kDefaultGradTol,
              [&] { return J.space()->norm(J.gradient(x0.coords())); });

  const double nu = 0.5;
  suite.check("contraction_step_ratio", "<=", nu + 1e-9, [&] {
    double worst = 0.0, prev = 0.0;
    const double floor = 1e-12 * (1.0 + x0.norm());
    ContractionOptions opts;
    opts.observer = [&](const ContractionStep& s) {
      if (prev > floor && s.step_norm > floor) worst = std::max(worst, s.step_norm / prev);
      prev = s.step_norm;
    };
    minimize_shifted(J, x0, L / nu, opts);
    return worst;
  });
  suite.check("contraction_residual", "<=", default_contraction_tol(x0),
              [&] { return minimize_shifted(J, x0, L / nu).residual; });

  std::optional<Landmarks> marks;
  suite.check("landmarks_alpha_gap", ">", 0.0, [&] {
    marks = estimate_landmarks(J, x0);
    return marks->alpha0_lower - marks->J_base;
  });
  suite.check("landmarks_beta_positive", ">", 0.0,
              [&] { return marks ? marks->beta0_lower : std::numeric_limits<double>::quiet_NaN(); });
  suite.check("landmarks_monotone_violations", "==", 0.0, [&] {
    if (!marks) throw Error("landmarks unavailable");
    int bad = 0;
    for (std::size_t k = 1; k < marks->samples.size(); ++k) {
      const double slack = 10 * default_contraction_tol(x0);
      if (marks->samples[k].J_value < marks->samples[k - 1].J_value - slack) ++bad;
      if (marks->samples[k].distance < marks->samples[k - 1].distance - slack) ++bad;
    }
    return static_cast<double>(bad);
  });
  suite.check("monotonicity_violations", "==", 0.0, [&] {
    std::vector<double> grid(20);
    for (int i = 0; i < 20; ++i) grid[i] = 0.95 / L * i / 19.0;
    return static_cast<double>(monotonicity_scan(J, x0, grid).violations.size());
  });

  const double J0 = J(x0);
  const double level = marks && std::isfinite(marks->alpha0_lower)
                           ? J0 + 0.5 * (marks->alpha0_lower - J0)
                           : J0 + 1.0;
  const double radius = marks && std::isfinite(marks->beta0_lower) ? 0.5 * marks->beta0_lower : 1.0;
  res.header.emplace_back("level", level);
  res.header.emplace_back("radius", radius);

  std::optional<LevelProjection> proj;
  const double tol_level = 1e-8 * (1.0 + std::abs(level));
  suite.check("level_residual", "<=", tol_level, [&] {
    proj = project_to_level(J, x0, level);
    return proj->level_residual;
  });
  suite.check("level_fixed_point_residual", "<=", 1e-10 * (1.0 + x0.norm()), [&] {
    if (!proj) throw Error("projection unavailable");
    return proj->fixed_point_residual;
  });
  suite.check("level_bracket_violations", "==", 0.0, [&] {
    if (!proj) throw Error("projection unavailable");
    int bad = 0;
    for (const auto& b : proj->bracket_history) bad += !(b.value_lo <= 0.0 && b.value_hi >= 0.0);
    return static_cast<double>(bad);
  });

  std::optional<SphereMaxResult> smax;
  suite.check("sphere_radius_residual", "<=", 1e-10 * (1.0 + radius), [&] {
    smax = maximize_on_sphere(J, x0, radius);
    return smax->radius_residual;
  });
  suite.check("sphere_multiplier_margin", ">=", 1.0 + 1e-6, [&] {
    if (!smax) throw Error("sphere maximum unavailable");
    return smax->lambda_hat / L;
  });
  suite.check("sphere_kkt_residual", "<=", 1.0, [&] {
    if (!smax) throw Error("sphere maximum unavailable");
    return smax->kkt_residual / (1e-10 * smax->lambda_hat * (1.0 + x0.norm()));
  });
  suite.check("sphere_bracket_violations", "==", 0.0, [&] {
    if (!smax) throw Error("sphere maximum unavailable");
    int bad = 0;
    for (const auto& b : smax->bracket_history) bad += !(b.value_lo >= 0.0 && b.value_hi <= 0.0);
    return static_cast<double>(bad);
  });

  if (dim == 2) {
    std::mt19937_64 rng(seed);
    std::optional<SphereOracle> oracle;
    // x_hat sits within radius_residual of the sphere, which shifts J by at
    // most that much times the gradient norm.
    suite.check("sphere_oracle_dominance", "<=", [&] {
      if (!smax) throw Error("sphere maximum unavailable");
      oracle = brute_force_sphere_max(J, x0, radius, 10000);
      const double slack =
          J.space()->norm(J.gradient(smax->x_hat.coords())) * smax->radius_residual + 1e-12;
      return std::pair{oracle->max - smax->J_value, slack};
    });
    suite.check("sphere_oracle_resolution", "<=", [&] {
      if (!oracle) throw Error("oracle unavailable");
      return std::pair{smax->J_value - oracle->max, oracle->resolution_bound + 1e-12};
    });
    suite.check("sphere_multistart_spread", "<=", 1e-6 * (1.0 + radius), [&] {
      if (!smax) throw Error("sphere maximum unavailable");
      double worst = 0.0;
      for (int k = 0; k < 32; ++k) {
        const Point q = projected_gradient_ascent(J, x0, radius, random_sphere_point(rng, x0, radius));
        worst = std::max(worst, distance(q, smax->x_hat));
      }
      return worst;
    });

    if (proj) {
      const Box2 box = box_around(x0, proj->distance);
      const int cells = 200;
      const double cell_diag = std::hypot(box.x_hi - box.x_lo, box.y_hi - box.y_lo) / cells;
      std::optional<LevelOracle> lo;
      suite.check("level_oracle_minimality", "<=", 1e-9, [&] {
        lo = brute_force_level_projection(J, x0, level, box, cells);
        return proj->distance - lo->distance;
      });
      suite.check("level_oracle_resolution", "<=", cell_diag, [&] {
        if (!lo) throw Error("oracle unavailable");
        return lo->distance - proj->distance;
      });
      suite.check("level_multistart_spread", "<=", 1e-6 * (1.0 + proj->y_r.norm()), [&] {
        std::uniform_real_distribution<double> ux(box.x_lo, box.x_hi), uy(box.y_lo, box.y_hi);
        double worst = 0.0;
        for (int k = 0; k < 32; ++k) {
          Vector start(2);
          start << ux(rng), uy(rng);
          const Point q = level_local_search(J, x0, level, start);
          const double d = distance(q, x0);
          // A strictly closer level point would contradict minimality.
          if (d < proj->distance - 1e-7) return kInf;
          if (d <= proj->distance + 1e-7) worst = std::max(worst, distance(q, proj->y_r));
        }
        return worst;
      });
      std::optional<MinimaxReport> mm;
      suite.check("minimax_gap", "<=", [&] {
        mm = verify_minimax(level_minimax_instance(J, x0, level, box, 101, 51));
        res.footer.emplace_back("minimax_sup_inf", mm->sup_inf);
        res.footer.emplace_back("minimax_inf_sup", mm->inf_sup);
        return std::pair{mm->gap, mm->grid_bound + mm->tol};
      });
      suite.check("minimax_weak_duality", "==", 1.0, [&] {
        if (!mm) throw Error("minimax report unavailable");
        return mm->weak_duality ? 1.0 : 0.0;
      });
    }
  }

  if (p.pde) {
    const auto& prob = *p.pde;
    suite.check("eigenvalue_relative_error", "<=", 1e-10, [&] {
      const double exact = pde::discrete_first_eigenvalue(prob.n());
      return std::abs(prob.eigen().lambda1 - exact) / exact;
    });
    suite.check("eigen_residual", "<=", 1e-10, [&] {
      const auto& e = prob.eigen();
      return e.residual / (e.lambda1 * prob.h() * e.eigvec.norm());
    });
    std::optional<pde::BranchTrace> trace;
    suite.check("branch_max_residual", "<=", 1e-8, [&] {
      if (!marks || !std::isfinite(marks->beta0_lower)) throw Error("delta0 unavailable");
      const double delta0 = marks->beta0_lower * marks->beta0_lower;
      trace = pde::trace_branch(prob, pde::branch_grid(1e-4 * delta0, 0.5 * delta0, 12,
                                                       pde::Spacing::geometric));
      if (trace->failed_r) throw Error(trace->failure);
      double worst = 0.0;
      for (const auto& s : trace->samples) worst = std::max(worst, s.residual / (1 + s.u.norm()));
      return worst;
    });
    suite.check("branch_gamma_monotone_violations", "==", 0.0, [&] {
      if (!trace) throw Error("branch unavailable");
      int bad = 0;
      double prev = 0.0;
      for (const auto& s : trace->samples) {
        bad += !(s.gamma > 0.0 && s.gamma >= prev);
        prev = s.gamma;
      }
      return static_cast<double>(bad);
    });
  }

  res.footer.insert(res.footer.begin(),
                    {{"checks", static_cast<std::int64_t>(suite.count())},
                     {"all_passed", suite.all_passed()}});
  if (!suite.all_passed()) throw PartialResult{std::move(res), kVerificationFailed, "verification failed"};
  return res;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError(fmt::format("cannot read spec file '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("unisphere");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Flags flags;
  CLI::App app{"Unique nearest points on level sets and unique spherical maxima"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  const std::map<std::string, Format> formats{
      {"human", Format::human}, {"csv", Format::csv}, {"records", Format::records}};
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("spec", flags.spec_path, "Problem spec (JSON)")->required();
    sub->add_option("--tol", flags.tol, "Solver tolerance; 0 selects the default")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--max-iter", flags.max_iter, "Outer iteration budget; 0 selects the default")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", flags.seed, "Overrides the spec seed");
    sub->add_option("--format", flags.format, "human, csv or records")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
    sub->add_option("--output,-o", flags.output, "Write to PATH instead of stdout");
  };

  auto* landmarks = app.add_subcommand("landmarks", "Certified lower bounds for alpha0, beta0");
  add_common(landmarks);
  auto* project = app.add_subcommand("project", "Nearest point of J^-1(R) to x0");
  add_common(project);
  project->add_option("R", flags.r, "Level")->required();
  auto* spheremax = app.add_subcommand("spheremax", "Maximum of J on the sphere S(x0, R)");
  add_common(spheremax);
  spheremax->add_option("R", flags.r, "Radius")->required();
  auto* branch = app.add_subcommand("pde-branch", "Trace the Dirichlet solution branch");
  add_common(branch);
  branch->add_option("--r-min", flags.r_min, "Smallest squared norm");
  branch->add_option("--r-max", flags.r_max, "Largest squared norm");
  branch->add_option("--r-max-fraction", flags.r_max_fraction,
                     "r-max as a fraction of the delta0 estimate")
      ->check(CLI::PositiveNumber);
  branch->add_option("--steps", flags.steps, "Number of samples");
  const std::map<std::string, pde::Spacing> spacings{{"geometric", pde::Spacing::geometric},
                                                     {"linear", pde::Spacing::linear}};
  branch->add_option("--spacing", flags.spacing, "geometric or linear")
      ->transform(CLI::CheckedTransformer(spacings, CLI::ignore_case));
  branch->add_flag("--emit-solutions", flags.emit_solutions, "Append the nodal values of u");
  auto* warm = branch->add_flag("--warm", "Continuation from the previous sample (default)");
  branch->add_flag("--cold", flags.cold, "Independent concurrent solves")->excludes(warm);
  branch->add_option("--threads", flags.threads, "Worker threads for --cold; 0 = all cores");
  auto* verify = app.add_subcommand("verify", "Run the invariant suite for the spec");
  add_common(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  auto finish = [&](RunResult& res, const ProblemSpec& spec) -> void {
    res.command = command;
    res.spec_digest = spec.digest;
    if (flags.output.empty()) {
      emit(res, flags.format, out);
      return;
    }
    std::ofstream file(flags.output, std::ios::binary);
    if (!file) throw SpecError(fmt::format("cannot write '{}'", flags.output));
    emit(res, flags.format, file);
  };

  ProblemSpec spec;
  try {
    spec = parse_spec(read_file(flags.spec_path));
    const Problem problem = build_problem(spec);
    RunResult res;
    try {
      if (command == "landmarks") res = cmd_landmarks(spec, problem, flags);
      else if (command == "project") res = cmd_project(problem, flags);
      else if (command == "spheremax") res = cmd_spheremax(problem, flags);
      else if (command == "pde-branch") res = cmd_pde_branch(problem, flags);
      else res = cmd_verify(spec, problem, flags);
    } catch (PartialResult& partial) {
      finish(partial.result, spec);
      err << "error: " << partial.message << '\n';
      return partial.code;
    }
    finish(res, spec);
    return kOk;
  } catch (const SpecError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DegenerateBasePoint& e) {
    err << "error: degenerate base point: " << e.what() << '\n';
    return kDegenerate;
  } catch (const OutOfRange& e) {
    err << "error: " << e.what() << " (threshold estimate " << format_double(e.threshold_estimate())
        << ")\n";
    return kOutOfRange;
  } catch (const HypothesisViolation& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: solver failure: " << e.what() << '\n';
    return kVerificationFailed;
  }
}

}  // namespace unisphere::cli
