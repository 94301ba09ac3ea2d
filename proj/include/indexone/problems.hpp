#pragma once

#include <functional>
#include <string>

#include "indexone/vakonomic.hpp"

namespace indexone {

struct NamedState {
  std::string label;
  PhaseState state;
  std::string note;
};

// ---------------------------------------------------------------------------
// Two-wheeled vehicle, q = (x, y, theta, phi): front wheel at (x, y), body
// angle theta, steering angle phi, wheelbase L.
//
//   L = 1/2 (x'^2 + y'^2 + alpha theta'^2 + beta phi'^2) - V
//   x' sin(phi)   - y' cos(phi)           = 0   (front wheel)
//   x' sin(theta) - y' cos(theta) + L theta' = 0 (back wheel)
//
// The cosine bowl is V = -cos r with r the distance of the body midpoint
// (x - L/2 cos(theta), y - L/2 sin(theta)) from the origin.
// ---------------------------------------------------------------------------

enum class VehiclePotential { zero, cosine_bowl };

struct VehicleParams {
  double L = 0.3;
  double alpha = 1.0;
  double beta = 1.0;
  VehiclePotential potential = VehiclePotential::zero;
  bool lock_steering = false;  // adds the holonomic constraint phi - pi/2 = 0

  void validate() const;
};

VakonomicProblem vehicle_problem(const VehicleParams& params);

enum class VehicleMotion { straight, circular };

// straight: q = 0, p = (1, 0, 0, 0).
// circular: q = (L, 0, 0, pi/2), qdot = (0, aL, a, a); the body pivots about
// the back wheel at the origin.  lambda is fixed by requiring zero linear
// momentum (p_x = p_y = 0), which a rotating relative equilibrium must have.
NamedState vehicle_named_state(VehicleMotion kind, const VehicleParams& params, double rate = 1.0);

// Vehicle released inside the cosine bowl with some steering rate.
NamedState vehicle_bowl_state(const VehicleParams& params);

// A state compatible with the steering lock phi = pi/2 (phi' = 0).
NamedState vehicle_locked_state(const VehicleParams& params);

// ---------------------------------------------------------------------------
// Heisenberg problem: n = 3, M = I, g(q) = (-y, x, 1).
// ---------------------------------------------------------------------------

VakonomicProblem heisenberg_problem(std::function<double(const Vector&)> potential = {},
                                    std::function<Vector(const Vector&)> potential_gradient = {});

// lambda = -(g . p) / (g . g)
double heisenberg_multiplier(const Vector& q, const Vector& p);

// (x, y, z, x', y', z', lambda) = (0, 0, 0, 0.1, 0.3, 0, 1), so p = (0.1, 0.3, -1).
NamedState heisenberg_named_state();

// ---------------------------------------------------------------------------
// Particle on a circle of radius R in a uniform field: n = 2, k = 0, l = 1,
// H = 1/2 |p|^2 + gravity * y, h(q) = |q|^2 - R^2.
// ---------------------------------------------------------------------------

struct CircleParams {
  double radius = 1.0;
  double gravity = 1.0;
  void validate() const;
};

VakonomicProblem circle_problem(const CircleParams& params);

// q = (R, 0), p = (0, speed).
NamedState circle_named_state(const CircleParams& params, double speed = 1.0);

}  // namespace indexone
