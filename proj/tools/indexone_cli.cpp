// indexone-cli: run, converge, check and list experiments.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "indexone/indexone.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config_path;
  std::string preset;
  std::string out_dir = "out";
  std::optional<double> dt;
  std::optional<double> t_end;
  std::string tableau;
  bool quiet = false;
};

// Errors raised before the library is called (unreadable file, bad flags).
int report_local_error(const Options& opt, const std::string& code, const std::string& message) {
  const json err{{"error", {{"code", code}, {"message", message}}}};
  std::cerr << err.dump() << "\n";
  std::error_code ec;
  fs::create_directories(opt.out_dir, ec);
  std::ofstream(fs::path(opt.out_dir) / "error.json") << err.dump(2) << "\n";
  return 2;
}

int report_library_error(const Options& opt, ix_status status) {
  std::string record = ix_last_error_json();
  if (record.empty()) {
    record = json{{"error", {{"code", ix_status_name(status)}, {"message", ix_last_error_message()}}}}.dump();
  }
  std::cerr << record << "\n";
  std::error_code ec;
  fs::create_directories(opt.out_dir, ec);
  std::ofstream(fs::path(opt.out_dir) / "error.json") << json::parse(record).dump(2) << "\n";
  return status == IX_CONFIG ? 2 : 1;
}

// Builds the config document handed to the library.  Flags override keys
// from the file or preset; an unparsable file is passed through untouched so
// that the library reports the syntax error with its line.
std::optional<std::string> build_config(const Options& opt, std::string& error) {
  std::string text = "{}";
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path, std::ios::binary);
    if (!in) {
      error = "cannot read config file '" + opt.config_path + "'";
      return std::nullopt;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  } else if (opt.preset.empty()) {
    error = "one of --config or --preset is required";
    return std::nullopt;
  }

  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return text;
  if (!opt.preset.empty()) doc["preset"] = opt.preset;
  if (opt.dt) doc["dt"] = *opt.dt;
  if (opt.t_end) doc["t_end"] = *opt.t_end;
  if (!opt.tableau.empty()) doc["tableau"] = opt.tableau;
  return doc.dump();
}

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("--config", opt.config_path, "Experiment config (flat JSON)");
  cmd->add_option("--preset", opt.preset, "Embedded preset name (see `list`)");
  cmd->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--dt", opt.dt, "Override the step size");
  cmd->add_option("--t-end", opt.t_end, "Override the final time");
  cmd->add_option("--tableau", opt.tableau, "Override the integrator (midpoint, gauss2, gauss3, rattle-midpoint)");
  cmd->add_flag("--quiet", opt.quiet, "Suppress progress output");
}

int run_command(const std::string& name, const Options& opt) {
  std::string error;
  const auto config = build_config(opt, error);
  if (!config) return report_local_error(opt, "config", error);

  char* report = nullptr;
  ix_status status = IX_OK;
  int exit_code = 0;
  if (name == "run") {
    status = ix_experiment_run(config->c_str(), opt.out_dir.c_str(), &report);
    if (status == IX_OK && !opt.quiet) std::cout << "wrote " << (fs::path(opt.out_dir) / "diagnostics.json").string() << "\n";
  } else if (name == "converge") {
    double order = NAN;
    status = ix_experiment_converge(config->c_str(), opt.out_dir.c_str(), &report, &order);
    if (status == IX_OK) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6f", order);
      std::cout << (opt.quiet ? "" : "order ") << buf << "\n";
    }
  } else {
    int passed = 0;
    status = ix_experiment_check(config->c_str(), opt.out_dir.c_str(), &report, &passed);
    if (status == IX_OK) {
      if (!opt.quiet) std::cout << (passed ? "pass" : "fail") << "\n";
      exit_code = passed ? 0 : 1;
    }
  }
  ix_free_string(report);
  if (status != IX_OK) return report_library_error(opt, status);
  return exit_code;
}

int list_command() {
  char* text = nullptr;
  if (ix_preset_list(&text) != IX_OK) {
    std::cerr << ix_last_error_json() << "\n";
    return 1;
  }
  const json list = json::parse(text);
  ix_free_string(text);
  for (const auto& p : list) {
    std::cout << p["name"].get<std::string>() << "\n    " << p["description"].get<std::string>() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symplectic Runge-Kutta integrators for index-1 constrained Hamiltonian systems"};
  app.require_subcommand(1);

  Options opt;
  auto* run = app.add_subcommand("run", "Integrate and write trajectory.csv and diagnostics.json");
  auto* converge = app.add_subcommand("converge", "Fit the convergence order over a list of step sizes");
  auto* check = app.add_subcommand("check", "Symplecticity and constraint checks with a pass/fail summary");
  app.add_subcommand("list", "List embedded presets");
  for (auto* cmd : {run, converge, check}) add_common(cmd, opt);

  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  if (name == "list") return list_command();
  return run_command(name, opt);
}
