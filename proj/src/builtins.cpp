#include "unisphere/builtins.hpp"

#include <cmath>

#include <fmt/format.h>

namespace unisphere::builtins {

SmoothFunctional linear(Space space, Vector c, double declared_lipschitz) {
  if (c.size() != space->dim()) {
    throw ShapeError(fmt::format("coefficient vector of length {} in dimension {}", c.size(),
                                 space->dim()));
  }
  Vector dual = space->apply(c);
  return SmoothFunctional(
      space, [dual](const Vector& x) { return dual.dot(x); },
      [dual](const Vector&) { return dual; }, declared_lipschitz);
}

SmoothFunctional quadratic(Space space, double declared_lipschitz) {
  const Space geometry = space;
  return SmoothFunctional(
      std::move(space), [geometry](const Vector& x) { return 0.5 * geometry->squared_norm(x); },
      [geometry](const Vector& x) { return geometry->apply(x); }, declared_lipschitz);
}

SmoothFunctional nonconvex2d(double declared_lipschitz) {
  constexpr double a = kNonconvexAmplitude;
  return SmoothFunctional(
      InnerProduct::identity(2), [](const Vector& x) { return x[0] + a * std::sin(x[1]); },
      [](const Vector& x) {
        Vector g(2);
        g << 1.0, a * std::cos(x[1]);
        return g;
      },
      declared_lipschitz);
}

SmoothFunctional zero(Space space, double declared_lipschitz) {
  const int dim = space->dim();
  return SmoothFunctional(
      std::move(space), [](const Vector&) { return 0.0; },
      [dim](const Vector&) { return Vector::Zero(dim).eval(); }, declared_lipschitz);
}

}  // namespace unisphere::builtins
