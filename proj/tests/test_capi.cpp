#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "indexone/indexone.h"

namespace fs = std::filesystem;

namespace {

struct SystemHandle {
  ix_system* ptr = nullptr;
  ~SystemHandle() { ix_system_destroy(ptr); }
};

struct TrajectoryHandle {
  ix_trajectory* ptr = nullptr;
  ~TrajectoryHandle() { ix_trajectory_destroy(ptr); }
};

}  // namespace

TEST(CApi, SystemEvaluation) {
  SystemHandle sys;
  ASSERT_EQ(ix_system_create("heisenberg", nullptr, &sys.ptr), IX_OK);
  ix_dims d{};
  ASSERT_EQ(ix_system_dims(sys.ptr, &d), IX_OK);
  EXPECT_EQ(d.n, 3);
  EXPECT_EQ(d.k, 1);
  EXPECT_EQ(d.l, 0);

  std::vector<double> z(7);
  ASSERT_EQ(ix_system_named_state(sys.ptr, "geodesic", 1.0, z.data(), z.size()), IX_OK);
  EXPECT_EQ(z[5], -1.0);
  EXPECT_EQ(z[6], 1.0);
  double h = 0.0;
  ASSERT_EQ(ix_system_hamiltonian(sys.ptr, z.data(), z.size(), &h), IX_OK);
  EXPECT_NEAR(h, 0.05, 1e-16);
  std::vector<double> g(7);
  ASSERT_EQ(ix_system_gradient(sys.ptr, z.data(), z.size(), g.data()), IX_OK);
  EXPECT_EQ(g[6], 0.0);

  double lam = 0.0;
  ASSERT_EQ(ix_system_solve_multipliers(sys.ptr, z.data(), z.data() + 3, &lam), IX_OK);
  EXPECT_NEAR(lam, 1.0, 1e-15);
}

TEST(CApi, ErrorsAreReported) {
  SystemHandle sys;
  EXPECT_EQ(ix_system_create("torus", nullptr, &sys.ptr), IX_CONFIG);
  EXPECT_EQ(sys.ptr, nullptr);
  EXPECT_NE(std::string(ix_last_error_message()).find("torus"), std::string::npos);
  EXPECT_NE(std::string(ix_last_error_json()).find("\"field\":\"problem\""), std::string::npos);

  EXPECT_EQ(ix_system_create("vehicle", "{\"L\": -1}", &sys.ptr), IX_CONFIG);
  EXPECT_EQ(ix_system_create("vehicle", "{oops", &sys.ptr), IX_CONFIG);

  ASSERT_EQ(ix_system_create("vehicle", "{\"L\": 0.5}", &sys.ptr), IX_OK);
  double h = 0.0;
  std::vector<double> wrong(3);
  EXPECT_EQ(ix_system_hamiltonian(sys.ptr, wrong.data(), wrong.size(), &h), IX_DIMENSION_MISMATCH);
  EXPECT_EQ(ix_system_hamiltonian(nullptr, wrong.data(), wrong.size(), &h), IX_INVALID_ARGUMENT);
  EXPECT_STREQ(ix_status_name(IX_STEP_FAILURE), "step_failure");

  // success clears the previous error
  std::vector<double> z(10);
  EXPECT_EQ(ix_system_hamiltonian(sys.ptr, z.data(), z.size(), &h), IX_OK);
  EXPECT_STREQ(ix_last_error_message(), "");
}

TEST(CApi, IntegrateAndInspect) {
  SystemHandle sys;
  ASSERT_EQ(ix_system_create("vehicle", nullptr, &sys.ptr), IX_OK);
  std::vector<double> z0(10);
  ASSERT_EQ(ix_system_named_state(sys.ptr, "straight", 1.0, z0.data(), z0.size()), IX_OK);
  ix_solver_config cfg;
  ix_solver_config_default(&cfg);
  EXPECT_EQ(cfg.newton_tol, 1e-12);
  EXPECT_EQ(cfg.newton_max_iter, 50);
  cfg.dt = 0.1;

  TrajectoryHandle traj;
  ASSERT_EQ(ix_integrate(sys.ptr, z0.data(), z0.size(), 1.0, "midpoint", &cfg, &traj.ptr), IX_OK);
  ASSERT_EQ(ix_trajectory_length(traj.ptr), 11u);
  std::vector<double> z(10);
  double t = 0.0;
  ASSERT_EQ(ix_trajectory_state(traj.ptr, 10, &t, z.data(), z.size()), IX_OK);
  EXPECT_DOUBLE_EQ(t, 1.0);
  EXPECT_NEAR(z[0], 1.0, 1e-12);
  ix_step_record rec{};
  ASSERT_EQ(ix_trajectory_record(traj.ptr, 10, &rec), IX_OK);
  EXPECT_DOUBLE_EQ(rec.energy, 0.5);
  EXPECT_LE(rec.endpoint_residual, 1e-12);
  EXPECT_EQ(ix_trajectory_state(traj.ptr, 11, &t, z.data(), z.size()), IX_INVALID_ARGUMENT);

  TrajectoryHandle bad;
  EXPECT_EQ(ix_integrate(sys.ptr, z0.data(), z0.size(), 1.0, "rk4", &cfg, &bad.ptr), IX_INVALID_ARGUMENT);
  cfg.dt = -1.0;
  EXPECT_EQ(ix_integrate(sys.ptr, z0.data(), z0.size(), 1.0, "midpoint", &cfg, &bad.ptr), IX_CONFIG);
}

TEST(CApi, RattleThroughCApi) {
  SystemHandle sys;
  ASSERT_EQ(ix_system_create("circle", "{\"radius\": 2.0}", &sys.ptr), IX_OK);
  ix_dims d{};
  ix_system_dims(sys.ptr, &d);
  EXPECT_EQ(d.l, 1);
  std::vector<double> z0(5);
  ASSERT_EQ(ix_system_named_state(sys.ptr, nullptr, 0.5, z0.data(), z0.size()), IX_OK);
  ix_solver_config cfg;
  ix_solver_config_default(&cfg);
  cfg.dt = 0.05;
  TrajectoryHandle traj;
  ASSERT_EQ(ix_integrate(sys.ptr, z0.data(), z0.size(), 2.0, "rattle-midpoint", &cfg, &traj.ptr), IX_OK);
  for (std::size_t i = 0; i < ix_trajectory_length(traj.ptr); ++i) {
    ix_step_record rec{};
    ix_trajectory_record(traj.ptr, i, &rec);
    EXPECT_LE(rec.holonomic_residual, 1e-12);
  }
  TrajectoryHandle bad;
  EXPECT_EQ(ix_integrate(sys.ptr, z0.data(), z0.size(), 2.0, "midpoint", &cfg, &bad.ptr), IX_INVALID_ARGUMENT);
}

TEST(CApi, TableauResidual) {
  double r = -1.0;
  ASSERT_EQ(ix_tableau_symplecticity_residual("gauss2", &r), IX_OK);
  EXPECT_LE(r, 1e-16);
  ASSERT_EQ(ix_tableau_symplecticity_residual("explicit-euler", &r), IX_OK);
  EXPECT_EQ(r, 1.0);
}

TEST(CApi, PresetsAndExperiments) {
  char* list = nullptr;
  ASSERT_EQ(ix_preset_list(&list), IX_OK);
  EXPECT_NE(std::string(list).find("heisenberg-geodesic"), std::string::npos);
  ix_free_string(list);

  char* cfg = nullptr;
  ASSERT_EQ(ix_preset_get("vehicle-check", &cfg), IX_OK);
  const fs::path dir = fs::temp_directory_path() / "indexone_capi_check";
  fs::remove_all(dir);
  int passed = 0;
  char* report = nullptr;
  ASSERT_EQ(ix_experiment_check(cfg, dir.c_str(), &report, &passed), IX_OK);
  EXPECT_EQ(passed, 1);
  EXPECT_NE(std::string(report).find("\"summary\": \"pass\""), std::string::npos);
  ix_free_string(report);
  ix_free_string(cfg);

  EXPECT_EQ(ix_preset_get("missing", &cfg), IX_CONFIG);
  EXPECT_EQ(ix_experiment_run("{\"problem\": \"heisenberg\", \"t_end\": 1}", dir.c_str(), nullptr), IX_CONFIG);
  EXPECT_NE(std::string(ix_last_error_json()).find("\"field\":\"dt\""), std::string::npos);

  double order = 0.0;
  ASSERT_EQ(ix_experiment_converge("{\"preset\": \"heisenberg-converge-midpoint\"}", dir.c_str(), nullptr, &order),
            IX_OK);
  EXPECT_NEAR(order, 2.0, 0.2);
  EXPECT_TRUE(fs::exists(dir / "convergence.json"));
}
