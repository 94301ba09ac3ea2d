#pragma once

#include <optional>
#include <string>
#include <vector>

#include "indexone/integrators.hpp"
#include "indexone/vakonomic.hpp"

namespace indexone {

// H(z_i) - H(z_0) for every recorded state.
std::vector<double> energy_error_series(const IndexOneSystem& system, const Trajectory& traj);

struct EnergySummary {
  double max_abs = 0.0;
  double first_half_max = 0.0;
  double second_half_max = 0.0;
  bool bounded = true;  // second_half_max <= 2 * first_half_max
};

// Halves are split by index: [0, N/2] and (N/2, N].
EnergySummary summarize_energy(const std::vector<double>& series);

// ||A^T J_c A - J_c||_inf (maximum absolute row sum).
double symplecticity_defect(const Matrix& a);

// Central-difference Jacobian of the n-step map (q0, p0) -> (q_n, p_n).
// Each perturbed start has lambda re-solved from H_lambda = 0; component i
// is perturbed by rel_step * max(1, |x_i|).
Matrix flow_map_jacobian(Stepper& stepper, const PhaseState& z0, int n_steps, double rel_step = kDefaultFdStep);
Matrix flow_map_jacobian(const IndexOneSystem& system, const PhaseState& z0, const ButcherTableau& tableau,
                         const SolverConfig& config, int n_steps);

struct SymplecticityReport {
  int n_steps = 0;
  double fd_step = kDefaultFdStep;
  double defect = 0.0;
  // Per column: ||column(h) - column(2h)||_inf, an estimate of the
  // finite-difference error in that column.
  std::vector<double> column_condition;
};

SymplecticityReport symplecticity_report(Stepper& stepper, const PhaseState& z0, int n_steps,
                                         double rel_step = kDefaultFdStep);

// Least-squares slope of log(error) against log(dt).
double fit_order(const std::vector<double>& dts, const std::vector<double>& errors);

struct ReferenceSpec {
  std::string method = "gauss3";
  double dt = 0.0;                      // 0: min(dts) / 20
  std::optional<PhaseState> solution;   // use this instead of computing one
};

struct ConvergenceReport {
  std::vector<double> dts;            // requested step sizes
  std::vector<double> effective_dts;  // t_end / steps, so every run ends at t_end
  std::vector<double> errors;         // ||(q, p)(t_end) - reference||_inf
  double order = 0.0;
  double reference_dt = 0.0;
  std::string reference_method;
  std::vector<std::string> failures;
};

// Runs `method` at each dt up to t_end and fits the convergence order.
// Needs at least three geometrically spaced dt values.  A failing run is
// recorded in `failures` (its error is NaN) and the fit uses the rest.
ConvergenceReport estimate_order(const IndexOneSystem& system, const PhaseState& z0, double t_end,
                                 const std::string& method, const std::vector<double>& dts,
                                 const SolverConfig& base_config, const ReferenceSpec& reference = {});

struct ConstraintAudit {
  std::vector<double> endpoint;  // per step
  double endpoint_max = 0.0;
  double stage_max = 0.0;
  double holonomic_max = 0.0;
  double hidden_max = 0.0;
};

// Endpoint residuals max_i |g_i(q) . qdot|.  With a problem, qdot is rebuilt
// from the problem data (M^-1 (p + sum lambda_i g_i)); otherwise H_lambda of
// the system is used.  Stage residuals come from the trajectory records.
ConstraintAudit constraint_audit(const IndexOneSystem& system, const Trajectory& traj,
                                 const VakonomicProblem* problem = nullptr);

}  // namespace indexone
