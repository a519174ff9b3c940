#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "unisphere/landmarks.hpp"
#include "unisphere/spheremax.hpp"

namespace unisphere::pde {

/// Scalar nonlinearity f with antiderivative F (F(0) = 0) and declared
/// Lipschitz constant mu.
struct Nonlinearity {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> F;
  double mu;
};

/// Named nonlinearities, multiplied by `scale` (mu scales with it):
///   cos        f = cos t,            mu = 1
///   sin-shift  f = sin(t + 1),       mu = 1
///   tanh       f = 1 + tanh t,       mu = 1
///   affine     f = 1 + t / 2,        mu = 1/2
/// `mu_override` replaces the declared constant when positive.
Nonlinearity make_nonlinearity(const std::string& name, double scale = 1.0,
                               double mu_override = 0.0);

struct EigenResult {
  double lambda1;
  Vector eigvec;  ///< unit length in the lumped-mass norm, positive entries
  int iterations;
  double residual;  ///< ||A v - lambda1 M v||_2
};

/**
 * -u'' = lambda f(u) on (0, 1), u(0) = u(1) = 0, on n interior nodes.
 *
 * X carries the stiffness form <u, v> = u^T A v with A = (1/h) tridiag(-1, 2, -1);
 * the L2 pairing uses the lumped mass M = h I. J(u) = h sum F(u_i) and its
 * dual gradient is b(u) = h f(u_i), so the Riesz gradient is Lipschitz with
 * constant mu / lambda1 where lambda1 is the smallest eigenvalue of
 * A v = lambda M v.
 */
class DirichletProblem1D {
 public:
  int n() const noexcept { return n_; }
  double h() const noexcept { return h_; }
  const Nonlinearity& nonlinearity() const noexcept { return f_; }
  const Space& space() const noexcept { return space_; }
  const SmoothFunctional& functional() const noexcept { return *functional_; }
  const EigenResult& eigen() const noexcept { return eigen_; }
  double lipschitz() const noexcept { return functional_->lipschitz(); }
  /// Interior node abscissae x_i = i h.
  Vector nodes() const;

  /// b(u) = h f(u_i).
  Vector lumped_load(const Vector& u) const;
  /// ||A u - pde_lambda b(u)||_2.
  double pde_residual(const Vector& u, double pde_lambda) const;

 private:
  friend DirichletProblem1D assemble(int n, Nonlinearity f);
  DirichletProblem1D() = default;

  int n_ = 0;
  double h_ = 0.0;
  Nonlinearity f_;
  Space space_;
  EigenResult eigen_{};
  std::optional<SmoothFunctional> functional_;
};

/// Throws HypothesisViolation when f(0) == 0, std::invalid_argument when
/// n < 3 or mu <= 0.
DirichletProblem1D assemble(int n, Nonlinearity f);

/// Stiffness matrix (1/h) tridiag(-1, 2, -1) for n interior nodes.
SparseMatrix stiffness_matrix(int n);

/// Inverse power iteration on (A, h I) from the all-ones vector. Throws
/// NoConvergence when the residual does not reach tol * lambda ||M v||.
EigenResult first_eigenvalue(const InnerProduct& stiffness, double h, double tol = 1e-10,
                             int max_iter = 2000);
EigenResult first_eigenvalue(const DirichletProblem1D& problem);

/// (2/h^2)(1 - cos(pi h)).
double discrete_first_eigenvalue(int n);

struct Delta0Estimate {
  double delta0;  ///< beta0_lower^2, +inf when M was judged empty
  double delta0_extrapolated;
  Landmarks landmarks;
};

/// Squared beta0 landmark at x0 = 0.
Delta0Estimate estimate_delta0(const DirichletProblem1D& problem,
                               const LandmarkOptions& options = {});

struct BranchSample {
  double r;  ///< ||u||^2
  Point u;
  double gamma;       ///< J(u)
  double lambda_hat;  ///< sphere multiplier at radius sqrt(r)
  double pde_lambda;  ///< 1 / lambda_hat
  double residual;    ///< ||A u - pde_lambda b(u)||_2
  double radius_residual;
  int outer_iterations;
};

enum class BranchMode { warm, cold };

struct BranchOptions {
  BranchMode mode = BranchMode::warm;
  double tol_inner = 1e-12;
  double tol_radius = 0.0;  ///< <= 0 selects the sphere default
  unsigned threads = 0;     ///< cold mode only; 0 uses hardware concurrency
};

struct BranchTrace {
  std::vector<BranchSample> samples;
  std::optional<double> failed_r;
  std::string failure;
};

/// Spherical maxima of J on ||u||^2 = r for increasing r. Warm mode starts
/// each solve from the previous u; cold mode solves independently and in
/// parallel. A SphereOutOfRange stops the sweep and is reported in the
/// trace together with the samples computed so far.
BranchTrace trace_branch(const DirichletProblem1D& problem, const std::vector<double>& r_values,
                         const BranchOptions& options = {});

enum class Spacing { linear, geometric };

std::vector<double> branch_grid(double r_min, double r_max, int steps, Spacing spacing);

struct GammaDerivativeReport {
  std::vector<double> r;            ///< interior sample radii
  std::vector<double> fd_derivative;
  std::vector<double> half_lambda;  ///< lambda_hat / 2
  std::vector<double> relative_discrepancy;
  double max_relative_discrepancy = 0.0;
  double threshold = 0.01;
  bool within_threshold = true;
  bool gamma_prime_positive = true;
};

/// Three-point derivative of gamma on the (possibly non-uniform) r-grid,
/// compared against lambda_hat / 2 at every interior sample.
GammaDerivativeReport check_gamma_derivative(const std::vector<BranchSample>& samples,
                                             double threshold = 0.01);

}  // namespace unisphere::pde
