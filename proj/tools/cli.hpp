#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "unisphere/hilbert.hpp"
#include "unisphere/pde.hpp"

namespace unisphere::cli {

enum ExitCode : int {
  kOk = 0,
  kVerificationFailed = 1,
  kDegenerate = 2,
  kUsage = 3,
  kOutOfRange = 4,
};

/// Raised for malformed spec files and invalid flag combinations (exit 3).
class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * Parsed problem spec. Schema (JSON object):
 *   kind       "builtin-linear" | "builtin-quadratic" | "builtin-nonconvex2d" | "pde1d"
 *   seed       integer >= 0, default 0
 *   builtin-linear:      c (array), x0 (array, default zeros), lipschitz (> 0, default 1),
 *                        gram (square array of rows, default identity)
 *   builtin-quadratic:   x0 (array), lipschitz (default 1), gram
 *   builtin-nonconvex2d: x0 (length 2, default zeros), lipschitz (default 0.3)
 *   pde1d:               n (>= 3), nonlinearity (cos | sin-shift | tanh | affine),
 *                        scale (> 0, default 1), mu (> 0, overrides the declared constant)
 * Unknown keys are rejected.
 */
struct ProblemSpec {
  std::string kind;
  nlohmann::json raw;
  std::uint64_t seed = 0;
  std::string digest;  ///< FNV-1a 64 of the canonical JSON, 16 hex digits
};

ProblemSpec parse_spec(const std::string& text);

/// A problem built from a spec: a functional and its base point, plus the
/// assembled PDE when kind == pde1d.
struct Problem {
  std::optional<SmoothFunctional> J;
  std::optional<Point> x0;
  std::optional<pde::DirichletProblem1D> pde;
};

Problem build_problem(const ProblemSpec& spec);

using Value = std::variant<double, std::int64_t, bool, std::string>;
using Field = std::pair<std::string, Value>;

struct RunResult {
  std::string command;
  std::string spec_digest;
  std::vector<Field> header;
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
  std::vector<Field> footer;
  std::vector<std::string> warnings;
};

enum class Format { human, csv, records };

/// %.17g, with inf / -inf / nan spelled out.
std::string format_double(double x);

void emit(const RunResult& result, Format format, std::ostream& out);

/// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace unisphere::cli
