#ifndef O2LYAP_H
#define O2LYAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum O2BoundaryCondition {
  O2_BOUNDARY_CONDITION_PERIODIC = 0,
  O2_BOUNDARY_CONDITION_DIRICHLET = 1,
  O2_BOUNDARY_CONDITION_NEUMANN = 2,
} O2BoundaryCondition;

typedef enum O2LagrangianForm {
  O2_LAGRANGIAN_FORM_REDUCED = 0,
  O2_LAGRANGIAN_FORM_DOUBLE_INTEGRAL = 1,
} O2LagrangianForm;

// Built-in nonlinearities; see [`o2_nonlinearity_new`] for parameters.
typedef enum O2NonlinearityKind {
  // `λ u (1 - u²)`; `a = λ`.
  O2_NONLINEARITY_KIND_CHAFEE_INFANTE = 0,
  // `λ u (1 - u²) + c q u`; `a = λ`, `b = c`.
  O2_NONLINEARITY_KIND_CHAFEE_INFANTE_COUPLED = 1,
  // `a u + b q`.
  O2_NONLINEARITY_KIND_GRADIENT_QUADRATIC = 2,
  // `b q`.
  O2_NONLINEARITY_KIND_LINEAR_IN_Q = 3,
  // `-u + β tanh q`; `a = β`.
  O2_NONLINEARITY_KIND_SATURATING = 4,
  O2_NONLINEARITY_KIND_ZERO = 5,
} O2NonlinearityKind;

// Result codes; success is zero.
typedef enum O2Status {
  O2_STATUS_OK = 0,
  O2_STATUS_NULL_POINTER = 1,
  O2_STATUS_INVALID_ARGUMENT = 2,
  O2_STATUS_DOMAIN = 3,
  O2_STATUS_INTEGRATION_FAILED = 4,
  O2_STATUS_CHARACTERISTIC_ESCAPE = 5,
  O2_STATUS_NO_PERIODIC_ORBIT = 6,
  O2_STATUS_BLOW_UP = 7,
  O2_STATUS_IO = 8,
  O2_STATUS_PARSE = 9,
  O2_STATUS_PANIC = 10,
} O2Status;

// Opaque evaluator of `L(u, p)` for one nonlinearity.
typedef struct O2Lagrangian O2Lagrangian;

// Opaque reflection-symmetric nonlinearity `f̄(u, q)`.
typedef struct O2Nonlinearity O2Nonlinearity;

// User-supplied `f̄(u, q)` or `f̄_q(u, q)`.
typedef double (*O2ScalarCallback)(double u, double q, void *user_data);

// Tolerances for characteristic integration. Zero fields take defaults.
typedef struct O2CharflowConfig {
  double rel_tol;
  double abs_tol;
  double escape_bound;
  size_t max_steps;
} O2CharflowConfig;

// `Ψ^{u1,u0}(q0)` with its sensitivity.
typedef struct O2Evolution {
  double value;
  double sensitivity;
  // Nonzero if `|q|` passed the escape bound; `value` is then the last
  // state before the bound.
  int32_t escaped;
  double u_at_escape;
} O2Evolution;

// Headline numbers of a scenario run. Absent quantities are NaN.
typedef struct O2RunSummary {
  // 0 success, 2 blow-up, 3 construction failure, 1 other.
  int32_t exit_code;
  size_t saves;
  double final_time;
  double final_v;
  // 1 monotone, 0 not, -1 not monitored.
  int32_t v_monotone;
  double max_normalized_residual;
  double final_ut_inf;
} O2RunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread (empty before any
// failure). Successful calls leave it unchanged, except that a scenario run
// ending in blow-up or construction failure records its reason. Valid until
// the next call into the library from the same thread.
const char *o2_last_error_message(void);

// Library version, a static NUL-terminated string.
const char *o2_version(void);

// Create a built-in nonlinearity.
//
// # Safety
// `out` must be valid for a pointer write.
enum O2Status o2_nonlinearity_new(enum O2NonlinearityKind kind,
                                  double a,
                                  double b,
                                  struct O2Nonlinearity **out);

// Create a nonlinearity from callbacks for `f̄` and `f̄_q`. Both receive
// `user_data` and must stay valid until the handle and every evaluator
// built from it are freed.
//
// # Safety
// `out` must be valid for a pointer write; the callbacks must be safe to
// call with `user_data` for the lifetime of the handle.
enum O2Status o2_nonlinearity_from_callbacks(O2ScalarCallback f_bar,
                                             O2ScalarCallback f_bar_q,
                                             void *user_data,
                                             struct O2Nonlinearity **out);

// Evaluate `f̄(u, q)` through the handle.
//
// # Safety
// `nl` must be a live handle and `out` valid for a write.
enum O2Status o2_nonlinearity_eval(const struct O2Nonlinearity *nl,
                                   double u,
                                   double q,
                                   double *out);

// # Safety
// `nl` must be null or a handle not yet freed.
void o2_nonlinearity_free(struct O2Nonlinearity *nl);

// Evolve `q0` from `u0` to `u1` along `dq/du = -f̄(u, q)`. `cfg` may be null.
//
// # Safety
// `nl` must be a live handle, `cfg` null or readable, `out` writable.
enum O2Status o2_evolve(const struct O2Nonlinearity *nl,
                        double u0,
                        double u1,
                        double q0,
                        const struct O2CharflowConfig *cfg,
                        struct O2Evolution *out);

// Create an evaluator; the nonlinearity is copied, so `nl` may be freed
// afterwards. `cfg` may be null.
//
// # Safety
// `nl` must be a live handle, `cfg` null or readable, `out` writable.
enum O2Status o2_lagrangian_new(const struct O2Nonlinearity *nl,
                                enum O2LagrangianForm form,
                                const struct O2CharflowConfig *cfg,
                                struct O2Lagrangian **out);

// `L(u, p)`.
//
// # Safety
// `l` must be a live handle and `out` writable.
enum O2Status o2_lagrangian_value(const struct O2Lagrangian *l, double u, double p, double *out);

// `L_pp(u, p)`.
//
// # Safety
// `l` must be a live handle and `out` writable.
enum O2Status o2_lagrangian_convexity(const struct O2Lagrangian *l,
                                      double u,
                                      double p,
                                      double *out);

// # Safety
// `l` must be null or a handle not yet freed.
void o2_lagrangian_free(struct O2Lagrangian *l);

// `V(u) = ∫ L(u, u_x) dx` for grid values of `u` on `[0, length]`.
// `convexity_min` may be null.
//
// # Safety
// `values` must point to `n` readable doubles; `l` must be a live handle;
// `v` writable; `convexity_min` null or writable.
enum O2Status o2_evaluate_v(const struct O2Lagrangian *l,
                            const double *values,
                            size_t n,
                            double length,
                            enum O2BoundaryCondition bc,
                            double *v,
                            double *convexity_min);

// Run a scenario given as TOML text. When `output_dir` is non-null the
// CSV and manifest files are written there. A run that ends in blow-up or
// construction failure still returns `O2_OK` with the exit code set in
// `out`; the status reports only failures to run at all.
//
// # Safety
// `config_toml` must be a NUL-terminated string, `output_dir` null or
// NUL-terminated, `out` writable.
enum O2Status o2_run_scenario_toml(const char *config_toml,
                                   const char *output_dir,
                                   struct O2RunSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* O2LYAP_H */
