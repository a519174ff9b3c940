#pragma once

#include "unisphere/hilbert.hpp"

namespace unisphere::builtins {

/// J(x) = <c, x> in the geometry of `space`; gradient is the constant c.
SmoothFunctional linear(Space space, Vector c, double declared_lipschitz);

/// J(x) = 1/2 ||x||^2; gradient is the identity map, true constant 1.
SmoothFunctional quadratic(Space space, double declared_lipschitz = 1.0);

/// J(x) = <c, x> + a sin(<d, x>) on Euclidean R^2 with c = (1, 0),
/// d = (0, 1), a = 0.3. Its gradient c + a cos(<d, x>) d is a-Lipschitz
/// and never vanishes since ||c|| > a ||d||.
SmoothFunctional nonconvex2d(double declared_lipschitz = 0.3);

inline constexpr double kNonconvexAmplitude = 0.3;

/// J == 0 with an arbitrary positive declared constant.
SmoothFunctional zero(Space space, double declared_lipschitz);

}  // namespace unisphere::builtins
