#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "unisphere/errors.hpp"

namespace unisphere {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/**
 * SPD bilinear form <u, v> = u^T G v on R^dim.
 *
 * The Cholesky factorization of G is computed once at construction; every
 * Riesz solve afterwards is a pair of triangular solves. Instances are
 * immutable and are shared between points and functionals through `Space`.
 */
class InnerProduct {
 public:
  /// Throws ShapeError for non-square input, FactorizationError when G is
  /// not symmetric, not positive-definite, or numerically singular.
  explicit InnerProduct(SparseMatrix gram);

  static std::shared_ptr<const InnerProduct> identity(int dim);
  static std::shared_ptr<const InnerProduct> dense(const Eigen::MatrixXd& gram);
  static std::shared_ptr<const InnerProduct> sparse(SparseMatrix gram);

  int dim() const noexcept { return static_cast<int>(gram_.rows()); }
  const SparseMatrix& gram() const noexcept { return gram_; }

  double inner(const Vector& u, const Vector& v) const;
  double squared_norm(const Vector& u) const { return inner(u, u); }
  double norm(const Vector& u) const;

  /// G u: maps a point to the dual vector it represents.
  Vector apply(const Vector& u) const;

  /// G^{-1} b: the Riesz representative of the dual vector b.
  Vector riesz(const Vector& b) const;

 private:
  void check_dim(const Vector& u) const;

  SparseMatrix gram_;
  Eigen::SimplicialLLT<SparseMatrix> llt_;
};

using Space = std::shared_ptr<const InnerProduct>;

/// True when both spaces carry the same Gram matrix.
bool same_geometry(const Space& a, const Space& b);

/// A vector of coordinates tied to the geometry it lives in.
class Point {
 public:
  /// Throws ShapeError on length mismatch or non-finite entries.
  Point(Space space, Vector coords);

  static Point zero(Space space);

  const Vector& coords() const noexcept { return coords_; }
  const Space& space() const noexcept { return space_; }
  int dim() const noexcept { return static_cast<int>(coords_.size()); }
  double operator[](int i) const { return coords_[i]; }

  double norm() const { return space_->norm(coords_); }

  friend Point operator+(const Point& a, const Point& b);
  friend Point operator-(const Point& a, const Point& b);
  friend Point operator*(double s, const Point& a);

 private:
  Space space_;
  Vector coords_;
};

/// Throws ShapeError unless both points share one inner product.
double inner(const Point& u, const Point& v);
double distance(const Point& u, const Point& v);

/**
 * A C^1 functional J with Lipschitz Riesz gradient.
 *
 * `dual_gradient` returns the coordinates of the linear functional J'(x),
 * i.e. the vector b with J'(x)(w) = b . w. The Riesz gradient is G^{-1} b.
 * `lipschitz` is the declared constant of the Riesz gradient in the
 * space norm; nothing in the library estimates it.
 */
class SmoothFunctional {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using DualGradientFn = std::function<Vector(const Vector&)>;

  SmoothFunctional(Space space, ValueFn value, DualGradientFn dual_gradient,
                   double lipschitz);

  const Space& space() const noexcept { return space_; }
  int dim() const noexcept { return space_->dim(); }
  double lipschitz() const noexcept { return lipschitz_; }

  double value(const Vector& x) const { return value_(x); }
  double operator()(const Point& x) const { return value_(x.coords()); }

  Vector dual_gradient(const Vector& x) const { return dual_gradient_(x); }
  Vector gradient(const Vector& x) const { return space_->riesz(dual_gradient_(x)); }

  /// Same functional with a different declared constant.
  SmoothFunctional with_lipschitz(double lipschitz) const;

 private:
  Space space_;
  ValueFn value_;
  DualGradientFn dual_gradient_;
  double lipschitz_;
};

/// Riesz representative of J'(x); satisfies <g, w> = b(x) . w for all w.
Point riesz_gradient(const SmoothFunctional& J, const Point& x);

struct Sphere {
  Sphere(Point center, double radius);

  bool contains(const Point& x, double tol) const;

  Point center;
  double radius;
};

using PairSampler = std::function<std::pair<Vector, Vector>()>;

/// Pairs of independent N(center, scale^2 I) points, reproducible from `seed`.
PairSampler gaussian_pair_sampler(int dim, std::uint64_t seed, double scale = 1.0,
                                  Vector center = {});

struct ValidationReport {
  int samples = 0;
  double max_lipschitz_ratio = 0.0;
  double max_fd_discrepancy = 0.0;
  /// Set when some sampled ratio exceeds the declared constant.
  bool violation = false;
};

/// Falsification check of the declared Lipschitz constant plus a central
/// finite-difference check of the dual gradient along the pair direction.
ValidationReport validate_functional(const SmoothFunctional& J, const PairSampler& sampler,
                                     int n_samples, double h);

/// Observed orders log2(e(h)/e(h/2)) of the central-difference derivative
/// error along unit direction w, starting at h0 and halving `levels` times.
std::vector<double> gradient_check_orders(const SmoothFunctional& J, const Vector& x,
                                          const Vector& w, double h0, int levels);

}  // namespace unisphere
