#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "indexone/diagnostics.hpp"
#include "indexone/integrators.hpp"
#include "indexone/problems.hpp"
#include "oracles.hpp"

using namespace indexone;
using namespace indexone::testing;

// ---------------------------------------------------------------------------
// tableaux

TEST(GaussTableau, MidpointCoefficients) {
  const ButcherTableau t = gauss_tableau(1);
  ASSERT_EQ(t.stages(), 1);
  EXPECT_EQ(t.a(0, 0), 0.5);
  EXPECT_EQ(t.b[0], 1.0);
  EXPECT_EQ(t.c[0], 0.5);
  EXPECT_EQ(symplecticity_residual(t), 0.0);
}

TEST(GaussTableau, TwoStageOrderConditions) {
  const ButcherTableau t = gauss_tableau(2);
  EXPECT_LE(symplecticity_residual(t), 1e-16);
  EXPECT_NEAR(t.b.sum(), 1.0, 1e-15);
  EXPECT_NEAR(t.b.dot(t.c), 0.5, 1e-15);
  EXPECT_NEAR(t.b.dot(t.c.cwiseAbs2()), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(t.b.dot(t.c.array().cube().matrix()), 0.25, 1e-15);
}

TEST(GaussTableau, ThreeStageOrderConditions) {
  const ButcherTableau t = gauss_tableau(3);
  EXPECT_LE(symplecticity_residual(t), 1e-15);
  // quadrature conditions B(6): sum b_i c_i^(k-1) = 1/k
  for (int k = 1; k <= 6; ++k) {
    EXPECT_NEAR(t.b.dot(t.c.array().pow(k - 1).matrix()), 1.0 / k, 1e-15) << "k = " << k;
  }
}

TEST(GaussTableau, CollocationConditions) {
  // C(s): sum_j a_ij c_j^(k-1) = c_i^k / k for k <= s
  for (int s = 1; s <= 3; ++s) {
    const ButcherTableau t = gauss_tableau(s);
    EXPECT_LE(row_sum_residual(t), 1e-15);
    for (int k = 1; k <= s; ++k) {
      const Vector lhs = t.a * t.c.array().pow(k - 1).matrix();
      const Vector rhs = t.c.array().pow(k) / k;
      EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-15) << "s = " << s << ", k = " << k;
    }
  }
}

TEST(GaussTableau, UnsupportedStageCount) {
  EXPECT_THROW(gauss_tableau(0), Error);
  EXPECT_THROW(gauss_tableau(4), Error);
}

TEST(Tableau, ExplicitEulerIsNotSymplectic) {
  EXPECT_EQ(symplecticity_residual(explicit_euler_tableau()), 1.0);
}

TEST(Tableau, ByName) {
  EXPECT_EQ(tableau_by_name("midpoint").stages(), 1);
  EXPECT_EQ(tableau_by_name("gauss1").stages(), 1);
  EXPECT_EQ(tableau_by_name("gauss2").stages(), 2);
  EXPECT_EQ(tableau_by_name("gauss3").stages(), 3);
  EXPECT_EQ(tableau_by_name("explicit-euler").a(0, 0), 0.0);
  EXPECT_THROW(tableau_by_name("rk4"), Error);
}

TEST(Tableau, ShapeValidation) {
  ButcherTableau t = gauss_tableau(2);
  t.b = Vector::Ones(3);
  EXPECT_THROW(t.validate(), DimensionError);
}

// ---------------------------------------------------------------------------
// SRK steps

TEST(SrkStep, MidpointOscillatorClosedForm) {
  for (bool with_hessian : {false, true}) {
    const FunctionSystem osc = oscillator(with_hessian);
    SolverConfig cfg;
    cfg.dt = 0.1;
    const PhaseState z1 = srk_step(osc, PhaseState(vec({1.0}), vec({0.0})), gauss_tableau(1), cfg);
    const double dt = cfg.dt;
    const double den = 1.0 + dt * dt / 4.0;
    EXPECT_NEAR(z1.q[0], (1.0 - dt * dt / 4.0) / den, 1e-15);
    EXPECT_NEAR(z1.p[0], -dt / den, 1e-15);
    EXPECT_NEAR(z1.q[0], 399.0 / 401.0, 1e-15);
  }
}

TEST(SrkStep, FiniteDifferenceAndAnalyticJacobiansAgree) {
  const FunctionSystem osc = oscillator(true);
  SolverConfig cfg;
  cfg.dt = 0.3;
  const PhaseState z0(vec({0.3}), vec({-0.8}));
  const PhaseState a = srk_step(osc, z0, gauss_tableau(3), cfg);
  cfg.jacobian_mode = JacobianMode::finite_difference;
  const PhaseState b = srk_step(osc, z0, gauss_tableau(3), cfg);
  EXPECT_NEAR(a.q[0], b.q[0], 1e-14);
  EXPECT_NEAR(a.p[0], b.p[0], 1e-14);
}

TEST(SrkStep, VehicleStraightLineIsExact) {
  auto sys = build_system(vehicle_problem(VehicleParams{}));
  SolverConfig cfg;
  cfg.dt = 0.1;
  const PhaseState z0 = vehicle_named_state(VehicleMotion::straight, VehicleParams{}).state;
  const PhaseState z1 = srk_step(*sys, z0, gauss_tableau(1), cfg);
  EXPECT_NEAR(z1.q[0], 0.1, 1e-15);
  for (int i = 1; i < 4; ++i) EXPECT_LE(std::abs(z1.q[i]), 1e-12);
  EXPECT_LE((z1.p - z0.p).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(z1.lambda.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SrkStep, HeisenbergEndpointOnManifold) {
  auto sys = build_system(heisenberg_problem());
  SolverConfig cfg;
  cfg.dt = 0.05;
  const PhaseState z0 = heisenberg_named_state().state;
  for (int s = 1; s <= 3; ++s) {
    SrkStepper stepper(*sys, gauss_tableau(s), cfg);
    const StepResult r = stepper.step(z0);
    EXPECT_LE(constraint_residual_norm(*sys, r.state.pack()), cfg.newton_tol);
    EXPECT_LE(r.record.endpoint_residual, cfg.newton_tol);
    EXPECT_LE(r.record.stage_residual_max, cfg.newton_tol);
    EXPECT_GE(r.record.newton_iterations, 1);
  }
}

TEST(SrkStep, OffManifoldInputIsProjectedFirst) {
  auto sys = build_system(heisenberg_problem());
  SolverConfig cfg;
  cfg.dt = 0.05;
  PhaseState z0 = heisenberg_named_state().state;
  const PhaseState ref = srk_step(*sys, z0, gauss_tableau(2), cfg);
  z0.lambda[0] = 7.0;
  const PhaseState moved = srk_step(*sys, z0, gauss_tableau(2), cfg);
  EXPECT_LE((moved.pack() - ref.pack()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SrkStep, NewtonBudgetExhaustedIsStepFailure) {
  auto sys = build_system(heisenberg_problem());
  SolverConfig cfg;
  cfg.dt = 0.5;
  cfg.newton_max_iter = 1;
  cfg.newton_tol = 1e-15;
  SrkStepper stepper(*sys, gauss_tableau(3), cfg);
  PhaseState z0 = place_on_manifold(*sys, PhaseState(vec({0.5, -0.3, 0.2}), vec({1.0, 2.0, -0.5}), vec({0.0})));
  try {
    stepper.step(z0);
    FAIL() << "expected StepFailure";
  } catch (const StepFailure& e) {
    EXPECT_GT(e.residual(), cfg.newton_tol);
  }
  try {
    integrate(stepper, z0, 2.0);
    FAIL() << "expected StepFailure";
  } catch (const StepFailure& e) {
    ASSERT_TRUE(e.step().has_value());
    EXPECT_EQ(*e.step(), 1);
  }
}

TEST(SrkStep, DegenerateConstraintIsIndexViolation) {
  FunctionSystem sys(
      DarbouxDims(1, 1), [](const Vector& z) { return 0.5 * z[1] * z[1] + z[2] * z[0]; },
      [](const Vector& z) -> Vector { return vec({z[2], z[1], z[0]}); });
  SolverConfig cfg;
  cfg.dt = 0.1;
  EXPECT_THROW(srk_step(sys, PhaseState(vec({1.0}), vec({0.0}), vec({0.0})), gauss_tableau(1), cfg), IndexViolation);
}

TEST(SrkStep, NonFiniteInputRejected) {
  const FunctionSystem osc = oscillator(false);
  SolverConfig cfg;
  EXPECT_THROW(srk_step(osc, PhaseState(vec({NAN}), vec({0.0})), gauss_tableau(1), cfg), StepFailure);
  EXPECT_THROW(srk_step(osc, PhaseState(vec({1.0, 2.0}), vec({0.0})), gauss_tableau(1), cfg), DimensionError);
}

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  cfg.dt = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SolverConfig{};
  cfg.newton_tol = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SolverConfig{};
  cfg.newton_max_iter = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

// ---------------------------------------------------------------------------
// integrate

TEST(Integrate, StepCount) {
  EXPECT_EQ(step_count(5.0, 0.01), 500);
  EXPECT_EQ(step_count(1.0, 0.08), 13);
  EXPECT_EQ(step_count(1.0, 0.1), 10);
  EXPECT_THROW(step_count(0.0, 0.1), ConfigError);
  EXPECT_THROW(step_count(1.0, -0.1), ConfigError);
}

TEST(Integrate, FreeParticleIsExact) {
  FunctionSystem free(
      DarbouxDims(1, 0), [](const Vector& z) { return 0.5 * z[1] * z[1]; },
      [](const Vector& z) -> Vector { return vec({0.0, z[1]}); });
  SolverConfig cfg;
  cfg.dt = 0.25;
  const Trajectory traj = integrate(free, PhaseState(vec({0.0}), vec({1.0})), 1.0, gauss_tableau(1), cfg);
  ASSERT_EQ(traj.size(), 5u);
  EXPECT_EQ(traj.states.back().q[0], 1.0);
  EXPECT_EQ(traj.times.back(), 1.0);
  for (std::size_t i = 1; i < traj.times.size(); ++i) EXPECT_DOUBLE_EQ(traj.times[i] - traj.times[i - 1], 0.25);
}

TEST(Integrate, WarnsWhenInitialMultiplierIsReplaced) {
  auto sys = build_system(heisenberg_problem());
  SolverConfig cfg;
  cfg.dt = 0.1;
  PhaseState z0 = heisenberg_named_state().state;
  EXPECT_TRUE(integrate(*sys, z0, 0.2, gauss_tableau(1), cfg).warnings.empty());
  z0.lambda[0] = 0.0;
  const Trajectory traj = integrate(*sys, z0, 0.2, gauss_tableau(1), cfg);
  ASSERT_EQ(traj.warnings.size(), 1u);
  EXPECT_EQ(traj.states.front().lambda[0], 1.0);
}

TEST(Integrate, HeisenbergEnergyErrorIsSecondOrder) {
  // Midpoint does not conserve H here exactly; the error oscillates with
  // amplitude O(dt^2).
  auto sys = build_system(heisenberg_problem());
  const PhaseState z0 = heisenberg_named_state().state;
  double amp[2];
  for (int i = 0; i < 2; ++i) {
    SolverConfig cfg;
    cfg.dt = 0.01 / (1 << i);
    const Trajectory traj = integrate(*sys, z0, 5.0, gauss_tableau(1), cfg);
    amp[i] = summarize_energy(energy_error_series(*sys, traj)).max_abs;
    EXPECT_LE(summarize_energy(energy_error_series(*sys, traj)).second_half_max,
              2.0 * summarize_energy(energy_error_series(*sys, traj)).first_half_max);
  }
  EXPECT_NEAR(amp[0] / amp[1], 4.0, 1.0);
}

TEST(Integrate, EveryEndpointOnManifold) {
  auto sys = build_system(heisenberg_problem());
  SolverConfig cfg;
  cfg.dt = 0.05;
  for (int s = 1; s <= 3; ++s) {
    const Trajectory traj = integrate(*sys, heisenberg_named_state().state, 2.0, gauss_tableau(s), cfg);
    for (const auto& r : traj.records) {
      EXPECT_LE(r.endpoint_residual, cfg.newton_tol);
      EXPECT_LE(r.stage_residual_max, cfg.newton_tol);
    }
  }
}

TEST(Integrate, VehicleCircleHoldsRadius) {
  VehicleParams params;
  auto sys = build_system(vehicle_problem(params));
  SolverConfig cfg;
  cfg.dt = 0.1;
  const PhaseState z0 = vehicle_named_state(VehicleMotion::circular, params, 1.0).state;
  const double r0 = z0.q.head(2).norm();
  const Trajectory traj = integrate(*sys, z0, 3 * 2 * std::numbers::pi, gauss_tableau(1), cfg);
  double worst = 0.0;
  for (const auto& s : traj.states) worst = std::max(worst, std::abs(s.q.head(2).norm() - r0) / r0);
  EXPECT_LE(worst, 0.01);
  EXPECT_GE(traj.states.back().q[2], 3 * 2 * std::numbers::pi);
}

TEST(Integrate, VehicleStraightLineOverHundredSteps) {
  auto sys = build_system(vehicle_problem(VehicleParams{}));
  SolverConfig cfg;
  cfg.dt = 0.1;
  const Trajectory traj =
      integrate(*sys, vehicle_named_state(VehicleMotion::straight, VehicleParams{}).state, 10.0, gauss_tableau(1), cfg);
  ASSERT_EQ(traj.size(), 101u);
  for (const auto& s : traj.states) {
    for (int i = 1; i < 4; ++i) {
      EXPECT_LE(std::abs(s.q[i]), 1e-10);
      EXPECT_LE(std::abs(s.p[i]), 1e-10);
    }
  }
  EXPECT_NEAR(traj.states.back().q[0], 10.0, 1e-12);
}

TEST(Integrate, RejectsHolonomicSystemsWithoutRattle) {
  auto sys = build_system(circle_problem(CircleParams{}));
  SolverConfig cfg;
  EXPECT_THROW(integrate(*sys, circle_named_state(CircleParams{}).state, 1.0, gauss_tableau(1), cfg), Error);
  EXPECT_THROW(make_stepper(*sys, "midpoint", cfg), Error);
  EXPECT_NO_THROW(make_stepper(*sys, "rattle-midpoint", cfg));
}

// ---------------------------------------------------------------------------
// equivalence with elimination

TEST(Elimination, IndexOneStepMatchesEliminatedStep) {
  auto sys = build_system(heisenberg_problem());
  std::mt19937 rng(4242);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SolverConfig cfg;
  cfg.dt = 0.1;
  for (int s = 1; s <= 3; ++s) {
    const ButcherTableau t = gauss_tableau(s);
    SrkStepper stepper(*sys, t, cfg);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const Vector q = vec({u(rng), u(rng), u(rng)});
      const Vector p = vec({u(rng), u(rng), u(rng)});
      const Vector x1 = eliminated_rk_step(heisenberg_reduced_field, t, cfg.dt, concat(q, p));
      const PhaseState z1 = stepper.step(PhaseState(q, p, vec({heisenberg_multiplier(q, p)}))).state;
      worst = std::max(worst, (concat(z1.q, z1.p) - x1).cwiseAbs().maxCoeff());
    }
    EXPECT_LE(worst, 1e-10) << t.name;
  }
}

// ---------------------------------------------------------------------------
// RATTLE

TEST(Rattle, CircleMatchesTextbookRattle) {
  const CircleParams params{1.0, 1.0};
  auto sys = build_system(circle_problem(params));
  SolverConfig cfg;
  cfg.dt = 0.05;
  RattleStepper stepper(*sys, cfg);
  PhaseState z = circle_named_state(params, 1.0).state;
  Vector q = z.q, p = z.p;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const StepResult r = stepper.step(z);
    textbook_rattle_circle(q, p, cfg.dt, params.radius, params.gravity);
    worst = std::max(worst, (concat(r.state.q, r.state.p) - concat(q, p)).cwiseAbs().maxCoeff());
    // compare one step from the same start so differences do not accumulate
    q = r.state.q;
    p = r.state.p;
    EXPECT_LE(std::abs(r.state.q.squaredNorm() - 1.0), 1e-12);
    EXPECT_LE(std::abs(r.state.q.dot(r.state.p)), 1e-12);
    EXPECT_LE(r.record.holonomic_residual, 1e-12);
    EXPECT_LE(r.record.hidden_residual, 1e-12);
    EXPECT_EQ(r.state.lambda_h[0], 0.0);
    z = r.state;
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Rattle, LinearConstraintReducesToMidpoint) {
  // h = a.q - c with a = (1, 1)/sqrt2, V = b.q: the projection removes the
  // normal part of the force, so the step is the midpoint rule for the
  // tangential force alone.
  const Vector a = vec({1.0, 1.0}) / std::sqrt(2.0);
  const Vector b = vec({0.3, -0.7});
  const double c = 0.5;
  VakonomicProblem pb;
  pb.n = 2;
  pb.mass = Matrix::Identity(2, 2);
  pb.potential = [b](const Vector& q) { return b.dot(q); };
  pb.potential_gradient = [b](const Vector&) -> Vector { return b; };
  HolonomicConstraint h;
  h.value = [a, c](const Vector& q) { return a.dot(q) - c; };
  h.gradient = [a](const Vector&) -> Vector { return a; };
  pb.holonomic_constraints = {h};
  auto sys = build_system(pb);

  const Vector tangent = vec({1.0, -1.0}) / std::sqrt(2.0);
  const Vector q0 = c * a + 0.2 * tangent;
  const Vector p0 = 0.8 * tangent;
  SolverConfig cfg;
  cfg.dt = 0.1;
  const PhaseState z1 = rattle_step(*sys, PhaseState(q0, p0, Vector(0), vec({0.0})), cfg);
  const Vector ft = tangent * tangent.dot(b);
  const Vector q1 = q0 + cfg.dt * p0 - 0.5 * cfg.dt * cfg.dt * ft;
  const Vector p1 = p0 - cfg.dt * ft;
  EXPECT_LE((z1.q - q1).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((z1.p - p1).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(a.dot(z1.q), c, 1e-15);

  // without a force the constraint is inert
  pb.potential = [](const Vector&) { return 0.0; };
  pb.potential_gradient = [](const Vector&) -> Vector { return Vector::Zero(2); };
  auto free = build_system(pb);
  const PhaseState f1 = rattle_step(*free, PhaseState(q0, p0, Vector(0), vec({0.0})), cfg);
  EXPECT_LE((f1.q - (q0 + cfg.dt * p0)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((f1.p - p0).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Rattle, VehicleSteeringLock) {
  VehicleParams params;
  params.potential = VehiclePotential::cosine_bowl;
  params.lock_steering = true;
  auto sys = build_system(vehicle_problem(params));
  SolverConfig cfg;
  cfg.dt = 0.05;
  RattleStepper stepper(*sys, cfg);
  const PhaseState z0 = vehicle_locked_state(params).state;
  const Trajectory traj = integrate(stepper, z0, 5.0);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    EXPECT_NEAR(traj.states[i].q[3], std::numbers::pi / 2, 1e-12);
    EXPECT_LE(traj.records[i].hidden_residual, 1e-10);
    EXPECT_LE(traj.records[i].endpoint_residual, 1e-11);
    EXPECT_LE(traj.records[i].stage_residual_max, 1e-11);
  }
}

TEST(Rattle, VehicleSteeringLockConvergesAtSecondOrder) {
  VehicleParams params;
  params.potential = VehiclePotential::cosine_bowl;
  params.lock_steering = true;
  auto sys = build_system(vehicle_problem(params));
  ReferenceSpec ref;
  ref.method = "rattle-midpoint";
  ref.dt = 0.0005;
  const ConvergenceReport rep = estimate_order(*sys, vehicle_locked_state(params).state, 1.0, "rattle-midpoint",
                                               {0.08, 0.04, 0.02, 0.01}, SolverConfig{}, ref);
  EXPECT_TRUE(rep.failures.empty());
  EXPECT_NEAR(rep.order, 2.0, 0.2);
}

TEST(Rattle, Preconditions) {
  auto sys = build_system(circle_problem(CircleParams{}));
  SolverConfig cfg;
  EXPECT_THROW(rattle_step(*sys, PhaseState(vec({1.1, 0.0}), vec({0.0, 1.0}), Vector(0), vec({0.0})), cfg),
               ProjectionFailure);
  auto unconstrained = build_system(heisenberg_problem());
  EXPECT_THROW(RattleStepper(*unconstrained, cfg), Error);
  RattleStepper stepper(*sys, cfg);
  EXPECT_EQ(stepper.name(), "rattle-midpoint");
  EXPECT_NEAR(stepper.hidden_constraint(vec({1.0, 0.0}), vec({0.5, 1.0}))[0], 1.0, 1e-15);
}
