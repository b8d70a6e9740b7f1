#ifndef LVT_H
#define LVT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  LVT_STATUS_OK = 0,
  LVT_STATUS_NULL_POINTER = 1,
  LVT_STATUS_INVALID_PARAMETER = 2,
  LVT_STATUS_UNKNOWN_NAME = 3,
  LVT_STATUS_UNSTABLE_TIME_STEP = 4,
  LVT_STATUS_NON_FINITE = 5,
  LVT_STATUS_NO_INTERIOR_POINT = 6,
  LVT_STATUS_OUT_OF_RANGE = 7,
  LVT_STATUS_INTERNAL = 8,
  LVT_STATUS_PANIC = 9,
} LvtStatus;

typedef enum {
  LVT_CLASSIFICATION_SADDLE = 0,
  LVT_CLASSIFICATION_STABLE_NODE = 1,
  LVT_CLASSIFICATION_UNSTABLE_NODE = 2,
  LVT_CLASSIFICATION_STABLE_FOCUS = 3,
  LVT_CLASSIFICATION_UNSTABLE_FOCUS = 4,
  LVT_CLASSIFICATION_BOUNDARY_ONLY = 5,
  LVT_CLASSIFICATION_NON_HYPERBOLIC = 6,
} LvtClassification;

// Spatial geometry, each with its built-in shape constants.
typedef enum {
  LVT_PROFILE_EXPONENTIAL = 0,
  LVT_PROFILE_POLYCENTRIC = 1,
  LVT_PROFILE_SUBURBAN = 2,
} LvtProfile;

// Monte Carlo ensemble. Opaque.
typedef struct LvtBundle LvtBundle;

// Model constants. Opaque.
typedef struct LvtParams LvtParams;

// Result of a grid simulation. Opaque.
typedef struct LvtTrace LvtTrace;

typedef struct {
  double v_star;
  double k_star;
  // 1 when an interior point exists.
  int32_t exists;
  // NaN when there is no interior point.
  double trace_j;
  double det_j;
  LvtClassification classification;
} LvtEquilibrium;

typedef struct {
  double lx;
  double ly;
  size_t nx;
  size_t ny;
} LvtGrid;

typedef struct {
  double dt;
  double t_final;
  size_t record_every;
  LvtProfile profile;
  // Tax rises by `tax_eta` per unit distance from the center; 0 for a uniform tax.
  double tax_eta;
} LvtSimOptions;

typedef struct {
  double kappa_a;
  double kappa_mu;
  double sigma_a;
  double sigma_mu;
  double sigma_v;
  double sigma_k;
  double correlation;
  double floor;
  double dt;
  double horizon;
  size_t n_paths;
  uint64_t seed;
  size_t record_every;
  LvtProfile profile;
  double distance;
} LvtStochasticOptions;

// Ensemble statistics at one recorded time.
typedef struct {
  double t;
  double mean_v;
  double var_v;
  double q05_v;
  double q95_v;
  double mean_k;
  double var_k;
  double q05_k;
  double q95_k;
} LvtSummaryRow;

typedef struct {
  double d_prime;
  double s_prime;
  double p0;
  double tau_unit;
  double t_adval;
} LvtIncidenceInputs;

typedef struct {
  double tax;
  double buyer_burden;
  double seller_burden;
  double pass_through;
} LvtIncidence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failing call on this thread; empty after success.
// The pointer stays valid until the next `lvt_*` call on the same thread.
const char *lvt_last_error(void);

// Library version, static storage.
const char *lvt_version(void);

// Allocates the default parameter set.
//
// # Safety
// `out` must be a valid pointer.
LvtStatus lvt_params_new(LvtParams **out_params);

// # Safety
// `params` must come from [`lvt_params_new`] and not be used afterwards. Null is ignored.
void lvt_params_free(LvtParams *params);

// Sets a parameter by field name (`"r"`, `"tau"`, `"beta"`, ...). The full
// set is validated; on failure the old value is kept.
//
// # Safety
// `params` must be a live handle and `name` a NUL-terminated string.
LvtStatus lvt_params_set(LvtParams *params, const char *name, double value);

// # Safety
// `params` must be a live handle, `name` NUL-terminated, `value` writable.
LvtStatus lvt_params_get(const LvtParams *params, const char *name, double *value);

// Steady state for productivity `a` and effective decay `alpha`
// (`r + tau - mu`). A missing interior point is not an error: `exists` is 0.
//
// # Safety
// `params` must be a live handle and `result` writable.
LvtStatus lvt_fixed_point(const LvtParams *params, double a, double alpha, LvtEquilibrium *result);

// Tax rate at which the interior point disappears for centrality `mu`.
//
// # Safety
// `params` must be a live handle and `tau_c` writable.
LvtStatus lvt_tau_critical(const LvtParams *params, double mu, double *tau_c);

// Runs the grid model from the default initial condition. The tax at the
// center is `params.tau`.
//
// # Safety
// All pointers must be valid; `out_trace` receives a handle to free with [`lvt_trace_free`].
LvtStatus lvt_simulate(const LvtParams *params,
                       const LvtGrid *grid,
                       const LvtSimOptions *options,
                       LvtTrace **out_trace);

// # Safety
// `trace` must come from [`lvt_simulate`] and not be used afterwards. Null is ignored.
void lvt_trace_free(LvtTrace *trace);

// Number of recorded times.
//
// # Safety
// `trace` must be a live handle and `len` writable.
LvtStatus lvt_trace_len(const LvtTrace *trace, size_t *len);

// Time and spatial means at recorded index `index`.
//
// # Safety
// `trace` must be a live handle; the out-pointers writable.
LvtStatus lvt_trace_point(const LvtTrace *trace,
                          size_t index,
                          double *t,
                          double *mean_v,
                          double *mean_k);

// Spatial means of the final state.
//
// # Safety
// `trace` must be a live handle; the out-pointers writable.
LvtStatus lvt_trace_final_means(const LvtTrace *trace, double *mean_v, double *mean_k);

// Fills `options` with the library defaults.
//
// # Safety
// `options` must be writable.
LvtStatus lvt_stochastic_defaults(LvtStochasticOptions *options);

// Simulates an ensemble at `options.distance`. Deterministic in `options.seed`.
//
// # Safety
// All pointers must be valid; `out_bundle` receives a handle to free with [`lvt_bundle_free`].
LvtStatus lvt_stochastic_run(const LvtParams *params,
                             const LvtStochasticOptions *options,
                             LvtBundle **out_bundle);

// # Safety
// `bundle` must come from [`lvt_stochastic_run`] and not be used afterwards. Null is ignored.
void lvt_bundle_free(LvtBundle *bundle);

// Number of recorded times in the ensemble.
//
// # Safety
// `bundle` must be a live handle and `len` writable.
LvtStatus lvt_bundle_len(const LvtBundle *bundle, size_t *len);

// # Safety
// `bundle` must be a live handle and `row` writable.
LvtStatus lvt_bundle_summary(const LvtBundle *bundle, size_t index, LvtSummaryRow *row);

// Per-unit tax `inputs.tau_unit`.
//
// # Safety
// `inputs` readable, `result` writable.
LvtStatus lvt_unit_incidence(const LvtIncidenceInputs *inputs, LvtIncidence *result);

// Ad valorem rate `inputs.t_adval` on price `inputs.p0`.
//
// # Safety
// `inputs` readable, `result` writable.
LvtStatus lvt_advalorem_incidence(const LvtIncidenceInputs *inputs, LvtIncidence *result);

// Site value `rent / (r + tau_v)`.
//
// # Safety
// `value` must be writable.
LvtStatus lvt_capitalization(double rent, double r, double tau_v, double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LVT_H */
