#ifndef STEFAN_LAB_H
#define STEFAN_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  STEFAN_STATUS_OK = 0,
  STEFAN_STATUS_NULL_POINTER = 1,
  STEFAN_STATUS_INVALID_ARGUMENT = 2,
  STEFAN_STATUS_RESOLUTION_TOO_COARSE = 3,
  STEFAN_STATUS_DISCONNECTED_DOMAIN = 4,
  STEFAN_STATUS_CONDITION_G_VIOLATED = 5,
  STEFAN_STATUS_NON_CONVERGENCE = 6,
  STEFAN_STATUS_FIT_REJECTED = 7,
  STEFAN_STATUS_NESTING_VIOLATION = 8,
  STEFAN_STATUS_CONFIG_INVALID = 9,
  STEFAN_STATUS_IO = 10,
  STEFAN_STATUS_ANALYSIS = 11,
  STEFAN_STATUS_PANIC = 12,
} StefanStatus;

typedef enum {
  STEFAN_KERNEL_BIWEIGHT = 0,
  STEFAN_KERNEL_TRIWEIGHT = 1,
} StefanKernel;

typedef enum {
  STEFAN_MODEL_TYPE_I = 0,
  STEFAN_MODEL_TYPE_II = 1,
  STEFAN_MODEL_HOELDER = 2,
} StefanModel;

typedef enum {
  STEFAN_COMMAND_SOLVE = 0,
  STEFAN_COMMAND_MEASURE = 1,
  STEFAN_COMMAND_ENERGY_CHECK = 2,
  STEFAN_COMMAND_RECUR = 3,
  STEFAN_COMMAND_SWEEP = 4,
  STEFAN_COMMAND_RUN = 5,
} StefanCommand;

/**
 * Opaque domain grid.
 */
typedef struct StefanDomain StefanDomain;

/**
 * Opaque regularized enthalpy.
 */
typedef struct StefanEnthalpy StefanEnthalpy;

typedef struct {
  double c;
  double exponent;
  double residual;
} StefanFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length plus one.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t stefan_last_error(char *buf, uintptr_t len);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
StefanStatus stefan_enthalpy_new(double nu, double eps, StefanKernel kernel, StefanEnthalpy **out);

/**
 * `β_ε(s)`.
 *
 * # Safety
 * `h` must come from [`stefan_enthalpy_new`]; `out` must be valid.
 */
StefanStatus stefan_enthalpy_beta(const StefanEnthalpy *h, double s, double *out);

/**
 * `β_ε'(s)`.
 *
 * # Safety
 * As [`stefan_enthalpy_beta`].
 */
StefanStatus stefan_enthalpy_beta_deriv(const StefanEnthalpy *h, double s, double *out);

/**
 * `β_ε^{-1}(w)` to absolute tolerance `tol`.
 *
 * # Safety
 * As [`stefan_enthalpy_beta`].
 */
StefanStatus stefan_enthalpy_invert(const StefanEnthalpy *h, double w, double tol, double *out);

/**
 * # Safety
 * `h` must be null or come from [`stefan_enthalpy_new`], and not be used afterwards.
 */
void stefan_enthalpy_free(StefanEnthalpy *h);

/**
 * Build a grid from a JSON shape descriptor such as
 * `{"shape": "l_shape", "size": 1.0}`.
 *
 * # Safety
 * `shape_json` must be a NUL-terminated string; `out` must be valid.
 */
StefanStatus stefan_domain_build(const char *shape_json, double h, StefanDomain **out);

/**
 * Number of cells.
 *
 * # Safety
 * `d` must come from [`stefan_domain_build`]; `out` must be valid.
 */
StefanStatus stefan_domain_len(const StefanDomain *d, uintptr_t *out);

/**
 * Certify condition (G) over `n` radii; stores `α_*` and `ρ̄` on the handle.
 *
 * # Safety
 * `radii` must point to `n` values; the out-pointers must be valid.
 */
StefanStatus stefan_domain_certify(StefanDomain *d,
                                   const double *radii,
                                   uintptr_t n,
                                   double *alpha_star,
                                   double *rho_bar);

/**
 * # Safety
 * `d` must be null or come from [`stefan_domain_build`], and not be used afterwards.
 */
void stefan_domain_free(StefanDomain *d);

/**
 * Root `λ` of the one-phase transcendental equation for Stefan number `st`.
 *
 * # Safety
 * `out` must be valid.
 */
StefanStatus stefan_stefan1d_lambda(double st, double tol, double *out);

/**
 * Iterate `Y_{n+1} = C bⁿ Y_n^{1+α}`; `converges` is set to 1 or 0.
 *
 * # Safety
 * `converges` must be valid.
 */
StefanStatus stefan_degiorgi_verdict(double c,
                                     double b,
                                     double alpha,
                                     double y0,
                                     uintptr_t n_max,
                                     int32_t *converges);

/**
 * Type II recurrence `ω_{n+1} = ω_n(1 − η ω_n^q)`; writes `ω_0..ω_{len−1}`.
 *
 * # Safety
 * `omega` must point to `len` writable values.
 */
StefanStatus stefan_type_ii_iterate(double eta,
                                    double q,
                                    double omega0,
                                    double *omega,
                                    uintptr_t len);

/**
 * Least-squares modulus fit on `n` pairs `(r, osc)`.
 *
 * # Safety
 * `r` and `osc` must point to `n` values; `out` must be valid.
 */
StefanStatus stefan_fit_modulus(StefanModel model,
                                const double *r,
                                const double *osc,
                                uintptr_t n,
                                double rho_bar,
                                StefanFit *out);

/**
 * Run a configured experiment, writing outputs to `out_dir` (or the
 * configured directory when null).
 *
 * # Safety
 * `config_path` must be a NUL-terminated path; `out_dir` must be null or one.
 */
StefanStatus stefan_run_experiment(const char *config_path,
                                   StefanCommand command,
                                   const char *out_dir,
                                   uint64_t seed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STEFAN_LAB_H */
