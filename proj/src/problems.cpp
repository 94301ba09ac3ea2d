#include "indexone/problems.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace indexone {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

// sin(r) / r, smooth through r = 0
double sinc(double r) {
  if (std::abs(r) < 1e-4) return 1.0 - r * r / 6.0;
  return std::sin(r) / r;
}

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

NamedState finish(const VakonomicSystem& system, std::string label, PhaseState state, std::string note) {
  const double residual = constraint_residual_norm(system, state.pack());
  if (!(residual <= 1e-12)) {
    std::ostringstream os;
    os << "named state '" << label << "' is off the constraint manifold (|H_lambda| = " << residual << ")";
    throw Error(ErrorCode::internal, os.str());
  }
  return NamedState{std::move(label), std::move(state), std::move(note)};
}

}  // namespace

void VehicleParams::validate() const {
  if (!(L > 0.0)) throw ConfigError("vehicle wheelbase L must be positive", "L");
  if (!(alpha > 0.0)) throw ConfigError("vehicle alpha must be positive", "alpha");
  if (!(beta > 0.0)) throw ConfigError("vehicle beta must be positive", "beta");
}

VakonomicProblem vehicle_problem(const VehicleParams& params) {
  params.validate();
  const double len = params.L;
  VakonomicProblem pb;
  pb.name = "vehicle";
  pb.n = 4;
  pb.mass = Vector(vec({1.0, 1.0, params.alpha, params.beta})).asDiagonal();

  if (params.potential == VehiclePotential::zero) {
    pb.potential = [](const Vector&) { return 0.0; };
    pb.potential_gradient = [](const Vector&) -> Vector { return Vector::Zero(4); };
  } else {
    pb.potential = [len](const Vector& q) {
      const double mx = q[0] - 0.5 * len * std::cos(q[2]);
      const double my = q[1] - 0.5 * len * std::sin(q[2]);
      return -std::cos(std::hypot(mx, my));
    };
    pb.potential_gradient = [len](const Vector& q) -> Vector {
      const double mx = q[0] - 0.5 * len * std::cos(q[2]);
      const double my = q[1] - 0.5 * len * std::sin(q[2]);
      const double scale = sinc(std::hypot(mx, my));  // dV/dr / r
      Vector g = Vector::Zero(4);
      g[0] = scale * mx;
      g[1] = scale * my;
      g[2] = scale * 0.5 * len * (mx * std::sin(q[2]) - my * std::cos(q[2]));
      return g;
    };
  }

  VelocityConstraint front;
  front.field = [](const Vector& q) -> Vector { return vec({std::sin(q[3]), -std::cos(q[3]), 0.0, 0.0}); };
  front.jacobian = [](const Vector& q) -> Matrix {
    Matrix d = Matrix::Zero(4, 4);
    d(0, 3) = std::cos(q[3]);
    d(1, 3) = std::sin(q[3]);
    return d;
  };
  VelocityConstraint back;
  back.field = [len](const Vector& q) -> Vector { return vec({std::sin(q[2]), -std::cos(q[2]), len, 0.0}); };
  back.jacobian = [](const Vector& q) -> Matrix {
    Matrix d = Matrix::Zero(4, 4);
    d(0, 2) = std::cos(q[2]);
    d(1, 2) = std::sin(q[2]);
    return d;
  };
  pb.velocity_constraints = {front, back};

  if (params.lock_steering) {
    HolonomicConstraint lock;
    lock.value = [](const Vector& q) { return q[3] - kHalfPi; };
    lock.gradient = [](const Vector&) -> Vector { return vec({0.0, 0.0, 0.0, 1.0}); };
    pb.holonomic_constraints = {lock};
  }
  return pb;
}

NamedState vehicle_named_state(VehicleMotion kind, const VehicleParams& params, double rate) {
  VehicleParams free = params;
  free.lock_steering = false;
  const VakonomicSystem system(vehicle_problem(free));

  if (kind == VehicleMotion::straight) {
    PhaseState s(Vector::Zero(4), vec({1.0, 0.0, 0.0, 0.0}), Vector::Zero(2));
    s.lambda = system.solve_multipliers(s.q, s.p);
    return finish(system, "straight", std::move(s), "theta = phi = 0, x' = 1: straight-line relative equilibrium");
  }

  const double a = rate;
  const double c = a * params.L;
  const Vector q = vec({params.L, 0.0, 0.0, kHalfPi});
  const Vector qdot = vec({0.0, c, a, a});

  // zero linear momentum: sum_i lambda_i g_i(q)_{x,y} = M_{xy} qdot_{xy}
  const Matrix g = system.constraint_matrix(q);
  const Matrix gxy = g.leftCols(2).transpose();
  const Vector lambda = solve_dense_linear(gxy, qdot.head(2));
  PhaseState s(q, system.legendre(q, qdot, lambda), lambda);

  const Vector check = system.solve_multipliers(s.q, s.p);
  if ((check - lambda).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + lambda.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::internal, "circular state multipliers are not self-consistent");
  }
  std::ostringstream note;
  note << "rotation about the back wheel with theta' = phi' = " << a << ", radius " << params.L;
  return finish(system, "circular", std::move(s), note.str());
}

NamedState vehicle_bowl_state(const VehicleParams& params) {
  VehicleParams free = params;
  free.lock_steering = false;
  const VakonomicSystem system(vehicle_problem(free));
  const Vector q = vec({0.5, 0.0, 0.0, 0.0});
  const Vector qdot = vec({0.5, 0.0, 0.0, 0.4});
  const Vector lambda = vec({0.3, -0.2});
  PhaseState s(q, system.legendre(q, qdot, lambda), lambda);
  return finish(system, "bowl", std::move(s), "released at x = 0.5 inside the cosine bowl with steering rate 0.4");
}

NamedState vehicle_locked_state(const VehicleParams& params) {
  VehicleParams locked = params;
  locked.lock_steering = true;
  const VakonomicSystem system(vehicle_problem(locked));
  const double theta = kHalfPi + 0.1;
  const double ydot = 0.5;
  const Vector q = vec({0.2, 0.0, theta, kHalfPi});
  const Vector qdot = vec({0.0, ydot, ydot * std::cos(theta) / params.L, 0.0});
  const Vector lambda = vec({0.1, 0.05});
  PhaseState s(q, system.legendre(q, qdot, lambda), lambda, Vector::Zero(1));
  return finish(system, "locked", std::move(s), "steering locked at phi = pi/2, compatible velocity");
}

VakonomicProblem heisenberg_problem(std::function<double(const Vector&)> potential,
                                    std::function<Vector(const Vector&)> potential_gradient) {
  VakonomicProblem pb;
  pb.name = "heisenberg";
  pb.n = 3;
  pb.mass = Matrix::Identity(3, 3);
  if (potential) {
    if (!potential_gradient) throw Error(ErrorCode::invalid_argument, "heisenberg potential needs a gradient");
    pb.potential = std::move(potential);
    pb.potential_gradient = std::move(potential_gradient);
  } else {
    pb.potential = [](const Vector&) { return 0.0; };
    pb.potential_gradient = [](const Vector&) -> Vector { return Vector::Zero(3); };
  }
  VelocityConstraint g;
  g.field = [](const Vector& q) -> Vector { return vec({-q[1], q[0], 1.0}); };
  g.jacobian = [](const Vector&) -> Matrix {
    Matrix d = Matrix::Zero(3, 3);
    d(0, 1) = -1.0;
    d(1, 0) = 1.0;
    return d;
  };
  pb.velocity_constraints = {g};
  return pb;
}

double heisenberg_multiplier(const Vector& q, const Vector& p) {
  const Vector g = vec({-q[1], q[0], 1.0});
  return -g.dot(p) / g.dot(g);
}

NamedState heisenberg_named_state() {
  const VakonomicSystem system(heisenberg_problem());
  const Vector q = Vector::Zero(3);
  const Vector qdot = vec({0.1, 0.3, 0.0});
  const Vector lambda = vec({1.0});
  PhaseState s(q, system.legendre(q, qdot, lambda), lambda);
  return finish(system, "geodesic", std::move(s),
                "(x, y, z, x', y', z', lambda) = (0, 0, 0, 0.1, 0.3, 0, 1); p_z = -1 follows from p = qdot - lambda g");
}

void CircleParams::validate() const {
  if (!(radius > 0.0)) throw ConfigError("circle radius must be positive", "radius");
  if (!std::isfinite(gravity)) throw ConfigError("gravity must be finite", "gravity");
}

VakonomicProblem circle_problem(const CircleParams& params) {
  params.validate();
  const double r2 = params.radius * params.radius;
  const double grav = params.gravity;
  VakonomicProblem pb;
  pb.name = "circle";
  pb.n = 2;
  pb.mass = Matrix::Identity(2, 2);
  pb.potential = [grav](const Vector& q) { return grav * q[1]; };
  pb.potential_gradient = [grav](const Vector&) -> Vector { return vec({0.0, grav}); };
  HolonomicConstraint h;
  h.value = [r2](const Vector& q) { return q.squaredNorm() - r2; };
  h.gradient = [](const Vector& q) -> Vector { return 2.0 * q; };
  pb.holonomic_constraints = {h};
  return pb;
}

NamedState circle_named_state(const CircleParams& params, double speed) {
  const VakonomicSystem system(circle_problem(params));
  PhaseState s(vec({params.radius, 0.0}), vec({0.0, speed}), Vector(0), Vector::Zero(1));
  return finish(system, "circle", std::move(s), "on the circle at angle 0 with tangential speed");
}

}  // namespace indexone
