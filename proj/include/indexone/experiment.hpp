#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "indexone/diagnostics.hpp"
#include "indexone/integrators.hpp"
#include "indexone/problems.hpp"
#include "indexone/vakonomic.hpp"

namespace indexone {

// Flat experiment description.  Parsed from a JSON object whose keys match the
// field names below (see README for the full list).
struct ExperimentConfig {
  std::string experiment = "custom";
  std::string problem;  // vehicle | heisenberg | circle

  // problem parameters
  VehicleParams vehicle;
  CircleParams circle;

  // initial state: a named state, or explicit vectors
  std::string initial_state;  // empty: the problem's default
  double rate = 1.0;          // vehicle circular turning rate a; circle speed
  std::optional<std::vector<double>> q;
  std::optional<std::vector<double>> p;
  std::optional<std::vector<double>> qdot;
  std::optional<std::vector<double>> lambda;

  std::string tableau = "midpoint";  // or "custom" with custom_tableau
  std::optional<ButcherTableau> custom_tableau;
  SolverConfig solver;
  double t_end = 0.0;

  bool energy = true;
  bool constraints = true;
  bool symplecticity = false;
  int symplecticity_steps = 10;
  bool convergence = false;
  std::vector<double> dts;
  double reference_dt = 0.0;

  std::string trajectory_file = "trajectory.csv";
  std::string diagnostics_file = "diagnostics.json";
};

// Parses a JSON document.  A "preset" key loads that preset first and the
// remaining keys override it.  With require_run_fields, dt and t_end must be
// present.  Errors are ConfigError carrying the field (and line for syntax
// errors).
ExperimentConfig parse_config(std::string_view json_text, bool require_run_fields = true);

std::vector<std::string> preset_names();
std::string preset_description(std::string_view name);
std::string preset_json(std::string_view name);  // throws ConfigError if unknown

struct ProblemInstance {
  std::string name;
  std::shared_ptr<const VakonomicSystem> system;
  std::vector<std::string> columns;  // CSV header
  bool newton_column = true;
};

ProblemInstance make_problem(const ExperimentConfig& config);
NamedState make_initial_state(const ProblemInstance& problem, const ExperimentConfig& config);

// Stepper for the configured integrator (named tableau, custom tableau or rattle).
std::unique_ptr<Stepper> make_configured_stepper(const ProblemInstance& problem, const ExperimentConfig& config);

// One CSV row per recorded state, 17 significant digits.
std::string trajectory_csv(const ProblemInstance& problem, const Trajectory& traj);

struct ExperimentOutcome {
  std::string report_json;
  std::filesystem::path report_path;
  std::optional<std::filesystem::path> trajectory_path;
  bool passed = true;                // check: overall verdict
  std::optional<double> order;       // converge: fitted order
};

// run: trajectory CSV + diagnostics JSON.
ExperimentOutcome run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);
// converge: convergence.json with the fitted order.
ExperimentOutcome converge_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);
// check: tableau residual, flow-map defect and constraint audit with a
// pass/fail summary, written to check.json.
ExperimentOutcome check_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

// Machine-readable error record {"error": {"code", "message", "field"?, "line"?, "step"?}}.
std::string error_record_json(const std::exception& e);

}  // namespace indexone
