/* C interface to the indexone integrators.
 *
 * Every function returning ix_status reports failures through the status code
 * and records a message retrievable with ix_last_error_message() (per thread).
 * Strings returned through char** are owned by the caller and released with
 * ix_free_string().
 *
 * State vectors use the packed layout z = (q, p, lambda, lambda_h) of length
 * m = 2n + k + l.
 */
#ifndef INDEXONE_H
#define INDEXONE_H

#include <stddef.h>

#if defined(INDEXONE_BUILDING_LIBRARY)
#define IX_API __attribute__((visibility("default")))
#else
#define IX_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ix_status {
  IX_OK = 0,
  IX_INVALID_ARGUMENT = 1,
  IX_DIMENSION_MISMATCH = 2,
  IX_EVALUATION = 3,
  IX_SINGULAR_MATRIX = 4,
  IX_RANK_DEFICIENCY = 5,
  IX_STEP_FAILURE = 6,
  IX_INDEX_VIOLATION = 7,
  IX_PROJECTION_FAILURE = 8,
  IX_CONFIG = 9,
  IX_IO = 10,
  IX_INTERNAL = 11
} ix_status;

typedef struct ix_system ix_system;
typedef struct ix_trajectory ix_trajectory;

typedef struct ix_dims {
  int n; /* configuration dimension */
  int k; /* velocity constraints */
  int l; /* holonomic constraints */
} ix_dims;

typedef struct ix_solver_config {
  double dt;
  double newton_tol;
  int newton_max_iter;
  int finite_difference_jacobian; /* nonzero: never use analytic Hessians */
  double fd_step;
} ix_solver_config;

typedef struct ix_step_record {
  double energy;
  double endpoint_residual;
  int newton_iterations;
  double stage_residual_max;
  double holonomic_residual;
  double hidden_residual;
} ix_step_record;

IX_API const char* ix_status_name(ix_status status);
IX_API const char* ix_last_error_message(void);
/* {"error": {"code", "message", "field"?, "line"?, "step"?}}; "" if none */
IX_API const char* ix_last_error_json(void);
IX_API void ix_free_string(char* s);

/* problem: "vehicle", "heisenberg" or "circle".  params_json may be NULL or a
 * JSON object with problem parameters (L, alpha, beta, potential,
 * lock_steering, radius, gravity). */
IX_API ix_status ix_system_create(const char* problem, const char* params_json, ix_system** out);
IX_API void ix_system_destroy(ix_system* system);
IX_API ix_status ix_system_dims(const ix_system* system, ix_dims* out);
IX_API ix_status ix_system_hamiltonian(const ix_system* system, const double* z, size_t len, double* out);
IX_API ix_status ix_system_gradient(const ix_system* system, const double* z, size_t len, double* out);
/* Writes the named initial state (label NULL or "" selects the default). */
IX_API ix_status ix_system_named_state(const ix_system* system, const char* label, double rate, double* z_out,
                                       size_t len);
/* lambda_out has k entries. */
IX_API ix_status ix_system_solve_multipliers(const ix_system* system, const double* q, const double* p,
                                             double* lambda_out);

IX_API void ix_solver_config_default(ix_solver_config* out);

/* method: a tableau name (midpoint, gauss2, gauss3, explicit-euler) or
 * "rattle-midpoint". */
IX_API ix_status ix_integrate(const ix_system* system, const double* z0, size_t len, double t_end,
                              const char* method, const ix_solver_config* config, ix_trajectory** out);
IX_API void ix_trajectory_destroy(ix_trajectory* traj);
IX_API size_t ix_trajectory_length(const ix_trajectory* traj);
IX_API ix_status ix_trajectory_state(const ix_trajectory* traj, size_t index, double* t, double* z_out, size_t len);
IX_API ix_status ix_trajectory_record(const ix_trajectory* traj, size_t index, ix_step_record* out);

IX_API ix_status ix_tableau_symplecticity_residual(const char* name, double* out);

/* Experiment runner.  config_json is a flat JSON document; reports are
 * written into out_dir and also returned through report_json (may be NULL). */
IX_API ix_status ix_experiment_run(const char* config_json, const char* out_dir, char** report_json);
IX_API ix_status ix_experiment_converge(const char* config_json, const char* out_dir, char** report_json,
                                        double* order);
IX_API ix_status ix_experiment_check(const char* config_json, const char* out_dir, char** report_json,
                                     int* passed);

/* JSON array of {"name", "description"}. */
IX_API ix_status ix_preset_list(char** names_json);
IX_API ix_status ix_preset_get(const char* name, char** config_json);

#ifdef __cplusplus
}
#endif

#endif /* INDEXONE_H */
