#include "unisphere/hilbert.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

namespace unisphere {

namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace

InnerProduct::InnerProduct(SparseMatrix gram) : gram_(std::move(gram)) {
  if (gram_.rows() != gram_.cols() || gram_.rows() == 0) {
    throw ShapeError(fmt::format("gram matrix must be square and nonempty, got {}x{}",
                                 gram_.rows(), gram_.cols()));
  }
  gram_.makeCompressed();

  const SparseMatrix transposed = gram_.transpose();
  const SparseMatrix skew = gram_ - transposed;
  for (int k = 0; k < skew.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(skew, k); it; ++it) {
      if (it.value() != 0.0) {
        throw FactorizationError(fmt::format("gram matrix is not symmetric at ({}, {})",
                                             it.row(), it.col()));
      }
    }
  }

  llt_.compute(gram_);
  if (llt_.info() != Eigen::Success) {
    throw FactorizationError("gram matrix is not positive-definite");
  }
  const Vector pivots = llt_.matrixL().toDense().diagonal();
  const double largest = pivots.cwiseAbs().maxCoeff();
  const double smallest = pivots.cwiseAbs().minCoeff();
  if (!(smallest > 0.0) || smallest * smallest < 1e-14 * largest * largest) {
    throw FactorizationError(
        fmt::format("gram matrix is numerically singular (pivot ratio {:.3e})",
                    smallest / largest));
  }
}

std::shared_ptr<const InnerProduct> InnerProduct::identity(int dim) {
  if (dim <= 0) throw ShapeError("dimension must be positive");
  SparseMatrix eye(dim, dim);
  eye.setIdentity();
  return std::make_shared<const InnerProduct>(std::move(eye));
}

std::shared_ptr<const InnerProduct> InnerProduct::dense(const Eigen::MatrixXd& gram) {
  return std::make_shared<const InnerProduct>(gram.sparseView());
}

std::shared_ptr<const InnerProduct> InnerProduct::sparse(SparseMatrix gram) {
  return std::make_shared<const InnerProduct>(std::move(gram));
}

void InnerProduct::check_dim(const Vector& u) const {
  if (u.size() != gram_.rows()) {
    throw ShapeError(fmt::format("vector of length {} in a space of dimension {}", u.size(),
                                 gram_.rows()));
  }
}

double InnerProduct::inner(const Vector& u, const Vector& v) const {
  check_dim(u);
  check_dim(v);
  return u.dot(gram_ * v);
}

double InnerProduct::norm(const Vector& u) const {
  return std::sqrt(std::max(0.0, squared_norm(u)));
}

Vector InnerProduct::apply(const Vector& u) const {
  check_dim(u);
  return gram_ * u;
}

Vector InnerProduct::riesz(const Vector& b) const {
  check_dim(b);
  Vector g = llt_.solve(b);
  if (llt_.info() != Eigen::Success || !all_finite(g)) {
    throw FactorizationError("Riesz solve failed");
  }
  return g;
}

bool same_geometry(const Space& a, const Space& b) {
  if (a == b) return true;
  if (!a || !b || a->dim() != b->dim()) return false;
  return (a->gram() - b->gram()).norm() == 0.0;
}

Point::Point(Space space, Vector coords) : space_(std::move(space)), coords_(std::move(coords)) {
  if (!space_) throw ShapeError("point without a space");
  if (coords_.size() != space_->dim()) {
    throw ShapeError(fmt::format("point of length {} in a space of dimension {}",
                                 coords_.size(), space_->dim()));
  }
  if (!all_finite(coords_)) throw ShapeError("point has non-finite coordinates");
}

Point Point::zero(Space space) {
  const int dim = space->dim();
  return Point(std::move(space), Vector::Zero(dim));
}

namespace {

void require_same_space(const Point& a, const Point& b) {
  if (!same_geometry(a.space(), b.space())) {
    throw ShapeError(fmt::format("points live in different spaces (dimensions {} and {})",
                                 a.dim(), b.dim()));
  }
}

}  // namespace

Point operator+(const Point& a, const Point& b) {
  require_same_space(a, b);
  return Point(a.space_, a.coords_ + b.coords_);
}

Point operator-(const Point& a, const Point& b) {
  require_same_space(a, b);
  return Point(a.space_, a.coords_ - b.coords_);
}

Point operator*(double s, const Point& a) { return Point(a.space_, s * a.coords_); }

double inner(const Point& u, const Point& v) {
  require_same_space(u, v);
  return u.space()->inner(u.coords(), v.coords());
}

double distance(const Point& u, const Point& v) {
  require_same_space(u, v);
  return u.space()->norm(u.coords() - v.coords());
}

SmoothFunctional::SmoothFunctional(Space space, ValueFn value, DualGradientFn dual_gradient,
                                   double lipschitz)
    : space_(std::move(space)),
      value_(std::move(value)),
      dual_gradient_(std::move(dual_gradient)),
      lipschitz_(lipschitz) {
  if (!space_) throw ShapeError("functional without a space");
  if (!(lipschitz_ > 0.0) || !std::isfinite(lipschitz_)) {
    throw std::invalid_argument("declared Lipschitz constant must be positive and finite");
  }
}

SmoothFunctional SmoothFunctional::with_lipschitz(double lipschitz) const {
  return SmoothFunctional(space_, value_, dual_gradient_, lipschitz);
}

Point riesz_gradient(const SmoothFunctional& J, const Point& x) {
  if (!same_geometry(x.space(), J.space())) {
    throw ShapeError("point and functional live in different spaces");
  }
  return Point(x.space(), J.gradient(x.coords()));
}

Sphere::Sphere(Point c, double r) : center(std::move(c)), radius(r) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("sphere radius must be positive");
  }
}

bool Sphere::contains(const Point& x, double tol) const {
  return std::abs(distance(x, center) - radius) <= tol;
}

PairSampler gaussian_pair_sampler(int dim, std::uint64_t seed, double scale, Vector center) {
  if (center.size() == 0) center = Vector::Zero(dim);
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [dim, scale, center = std::move(center), rng]() {
    std::normal_distribution<double> normal(0.0, scale);
    Vector u(dim), v(dim);
    for (int i = 0; i < dim; ++i) u[i] = center[i] + normal(*rng);
    for (int i = 0; i < dim; ++i) v[i] = center[i] + normal(*rng);
    return std::pair{u, v};
  };
}

ValidationReport validate_functional(const SmoothFunctional& J, const PairSampler& sampler,
                                     int n_samples, double h) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be at least 1");
  if (!(h > 0.0)) throw std::invalid_argument("h must be positive");

  const InnerProduct& space = *J.space();
  ValidationReport report;
  for (int s = 0; s < n_samples; ++s) {
    const auto [u, v] = sampler();
    const double separation = space.norm(u - v);
    if (!(separation > 0.0)) continue;
    ++report.samples;

    const double ratio = space.norm(J.gradient(u) - J.gradient(v)) / separation;
    report.max_lipschitz_ratio = std::max(report.max_lipschitz_ratio, ratio);

    const Vector w = (v - u) / separation;
    const double fd = (J.value(u + h * w) - J.value(u - h * w)) / (2.0 * h);
    const double exact = J.dual_gradient(u).dot(w);
    report.max_fd_discrepancy = std::max(report.max_fd_discrepancy, std::abs(fd - exact));
  }
  report.violation = report.max_lipschitz_ratio > J.lipschitz() * (1.0 + 1e-12);
  return report;
}

std::vector<double> gradient_check_orders(const SmoothFunctional& J, const Vector& x,
                                          const Vector& w, double h0, int levels) {
  const double exact = J.dual_gradient(x).dot(w);
  std::vector<double> errors;
  double h = h0;
  for (int k = 0; k <= levels; ++k, h *= 0.5) {
    const double fd = (J.value(x + h * w) - J.value(x - h * w)) / (2.0 * h);
    errors.push_back(std::abs(fd - exact));
  }
  std::vector<double> orders;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    orders.push_back(std::log2(errors[k] / errors[k + 1]));
  }
  return orders;
}

}  // namespace unisphere
