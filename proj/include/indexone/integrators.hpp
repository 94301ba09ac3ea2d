#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "indexone/core.hpp"

namespace indexone {

struct ButcherTableau {
  std::string name;
  Matrix a;  // s x s
  Vector b;
  Vector c;

  int stages() const noexcept { return static_cast<int>(b.size()); }
  void validate() const;  // shape checks only
};

// Gauss-Legendre collocation with s = 1 (midpoint), 2 or 3 stages.
ButcherTableau gauss_tableau(int s);
ButcherTableau explicit_euler_tableau();

// Accepts "midpoint", "gauss1", "gauss2", "gauss3" and "explicit-euler".
ButcherTableau tableau_by_name(std::string_view name);

// max_{i,j} |b_i b_j - b_j a_ji - b_i a_ij|; zero for symplectic methods.
double symplecticity_residual(const ButcherTableau& tableau);
// max_i |c_i - sum_j a_ij|
double row_sum_residual(const ButcherTableau& tableau);

enum class JacobianMode { analytic_if_available, finite_difference };

struct SolverConfig {
  double dt = 0.01;
  double newton_tol = 1e-12;
  int newton_max_iter = 50;
  JacobianMode jacobian_mode = JacobianMode::analytic_if_available;
  double fd_step = kDefaultFdStep;

  void validate() const;
};

struct StepRecord {
  double energy = 0.0;
  double endpoint_residual = 0.0;  // ||H_lambda||_inf at the step endpoint
  int newton_iterations = 0;
  double stage_residual_max = 0.0;  // max_i ||H_lambda(Z_i)||_inf
  double holonomic_residual = 0.0;  // ||h(q)||_inf, rattle only
  double hidden_residual = 0.0;     // ||Dh(q) H_p||_inf, rattle only
};

struct StepResult {
  PhaseState state;
  StepRecord record;
};

struct Trajectory {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<PhaseState> states;
  std::vector<StepRecord> records;  // records[0] describes the initial state
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return states.size(); }
};

// One-step map.  A stepper keeps a Newton workspace and must not be shared
// between threads; it holds a reference to the system, which must outlive it.
class Stepper {
 public:
  virtual ~Stepper() = default;
  virtual StepResult step(const PhaseState& z0) = 0;
  virtual std::string name() const = 0;
  virtual const IndexOneSystem& system() const = 0;
  virtual const SolverConfig& config() const = 0;
};

// Symplectic Runge-Kutta step for an index-1 system.  All stages (Q_i, P_i,
// Lambda_i) are solved simultaneously by Newton's method; the endpoint
// multiplier comes from H_lambda(q1, p1, lambda1) = 0.  Holonomic multipliers
// are carried through unchanged.
class SrkStepper final : public Stepper {
 public:
  SrkStepper(const IndexOneSystem& system, ButcherTableau tableau, SolverConfig config);

  StepResult step(const PhaseState& z0) override;
  std::string name() const override { return tableau_.name; }
  const IndexOneSystem& system() const override { return system_; }
  const SolverConfig& config() const override { return config_; }
  const ButcherTableau& tableau() const noexcept { return tableau_; }

 private:
  Matrix stage_hessian(const Vector& z) const;

  const IndexOneSystem& system_;
  ButcherTableau tableau_;
  SolverConfig config_;
  DarbouxDims dims_;
  int width_;  // 2n + k unknowns per stage

  // workspace
  std::vector<Vector> stage_states_;
  std::vector<Vector> stage_gradients_;
  Vector unknowns_;
  Vector residual_;
  Matrix jacobian_;
};

// RATTLE for systems with holonomic constraints h(q) = 0, using the midpoint
// rule on H(q, p, lambda, 0) as the inner step:
//   p0+ = p0 - Dh(q0)^T mu,  (q1, p1-) = midpoint(q0, p0+),  h(q1) = 0,
//   p1  = p1- - Dh(q1)^T nu, Dh(q1) H_p(q1, p1, lambda~(q1, p1), 0) = 0.
class RattleStepper final : public Stepper {
 public:
  RattleStepper(const IndexOneSystem& system, SolverConfig config);

  StepResult step(const PhaseState& z0) override;
  std::string name() const override { return "rattle-midpoint"; }
  const IndexOneSystem& system() const override { return system_; }
  const SolverConfig& config() const override { return config_; }

  // Dh(q) H_p(q, p, lambda~(q, p), 0)
  Vector hidden_constraint(const Vector& q, const Vector& p) const;

 private:
  const IndexOneSystem& system_;
  SolverConfig config_;
  DarbouxDims dims_;
  SrkStepper inner_;
};

PhaseState srk_step(const IndexOneSystem& system, const PhaseState& z0, const ButcherTableau& tableau,
                    const SolverConfig& config);
PhaseState rattle_step(const IndexOneSystem& system, const PhaseState& z0, const SolverConfig& config);

// Number of uniform steps of size dt needed to reach t_end (ceil, tolerant of
// round-off in t_end / dt).
long step_count(double t_end, double dt);

// Places z0 on the constraint manifold, then applies `stepper` step_count
// times.  Step failures are rethrown with the failing step index.
Trajectory integrate(Stepper& stepper, const PhaseState& z0, double t_end);
Trajectory integrate(const IndexOneSystem& system, const PhaseState& z0, double t_end, const ButcherTableau& tableau,
                     const SolverConfig& config);

// Integrator identifiers: a tableau name or "rattle-midpoint".
std::unique_ptr<Stepper> make_stepper(const IndexOneSystem& system, std::string_view method,
                                      const SolverConfig& config);

}  // namespace indexone
