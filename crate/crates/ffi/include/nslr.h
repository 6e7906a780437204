/* Generated by cbindgen from crates/ffi. Do not edit. */

#ifndef NSLR_H
#define NSLR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum NslrStatus {
  NSLR_STATUS_OK = 0,
  NSLR_STATUS_NULL_POINTER = 1,
  NSLR_STATUS_INVALID_ARGUMENT = 2,
  // A mathematical precondition failed (singular block, degenerate data).
  NSLR_STATUS_CONDITION = 3,
  // The solver aborted on a numeric failure.
  NSLR_STATUS_NUMERIC = 4,
  NSLR_STATUS_PARSE = 5,
  NSLR_STATUS_IO = 6,
  // The output buffer is too small.
  NSLR_STATUS_BUFFER_TOO_SMALL = 7,
  NSLR_STATUS_PANIC = 8,
} NslrStatus;

typedef enum NslrSolver {
  NSLR_SOLVER_NEWTON = 0,
  NSLR_SOLVER_IHT = 1,
} NslrSolver;

typedef enum NslrStationarity {
  NSLR_STATIONARITY_STRONG = 0,
  NSLR_STATIONARITY_PLAIN = 1,
  NSLR_STATIONARITY_NONE = 2,
} NslrStationarity;

typedef enum NslrOptimality {
  NSLR_OPTIMALITY_GLOBAL_MINIMIZER = 0,
  NSLR_OPTIMALITY_LOCAL_MINIMIZER = 1,
  NSLR_OPTIMALITY_UNKNOWN = 2,
} NslrOptimality;

// Opaque training set.
typedef struct NslrDataset NslrDataset;

// Opaque solver result.
typedef struct NslrReport NslrReport;

// Solver parameters. Start from `nslr_options_default`.
typedef struct NslrOptions {
  size_t s;
  double tau0;
  double tau_decay;
  double epsilon;
  size_t max_iter;
  double ridge_mu;
} NslrOptions;

// Scalar indicators of a report.
typedef struct NslrSummary {
  size_t p;
  bool converged;
  size_t iterations;
  size_t nnz;
  double loss;
  double grad_norm;
  double final_residual;
  double tau_final;
  double time_seconds;
  enum NslrStationarity stationarity;
  enum NslrOptimality optimality;
  bool tie_flag;
} NslrSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *nslr_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *nslr_version(void);

// Default parameters for sparsity level `s`.
struct NslrOptions nslr_options_default(size_t s);

// Builds a dataset from a row-major `n x p` matrix and `n` labels.
//
// # Safety
// `x` must point to `n * p` doubles, `y` to `n` doubles, and `out` must be
// writable. The inputs are copied.
enum NslrStatus nslr_dataset_from_dense(const double *x,
                                        size_t n,
                                        size_t p,
                                        const double *y,
                                        struct NslrDataset **out);

// Builds a sparse dataset from CSR buffers: `indptr` has `n + 1` entries,
// `indices` and `values` have `indptr[n]` entries with strictly increasing
// column indices within each row.
//
// # Safety
// All pointers must reference buffers of the stated lengths; `out` must be
// writable. The inputs are copied.
enum NslrStatus nslr_dataset_from_csr(const size_t *indptr,
                                      const size_t *indices,
                                      const double *values,
                                      size_t n,
                                      size_t p,
                                      const double *y,
                                      struct NslrDataset **out);

// Reads a LIBSVM file. `p` overrides the feature count when nonzero.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum NslrStatus nslr_dataset_from_libsvm(const char *path, size_t p, struct NslrDataset **out);

// # Safety
// `ds` must be NULL or a live handle.
size_t nslr_dataset_n(const struct NslrDataset *ds);

// # Safety
// `ds` must be NULL or a live handle.
size_t nslr_dataset_p(const struct NslrDataset *ds);

// Releases a dataset. NULL is ignored.
//
// # Safety
// `ds` must be NULL or a handle not yet freed.
void nslr_dataset_free(struct NslrDataset *ds);

// Fits `ds`. A report is written to `out` also when the solver aborted on a
// numeric failure; the status is then `Numeric`.
//
// # Safety
// `ds` must be a live handle, `options` readable and `out` writable.
enum NslrStatus nslr_solve(const struct NslrDataset *ds,
                           const struct NslrOptions *options,
                           enum NslrSolver solver,
                           struct NslrReport **out);

// Releases a report. NULL is ignored.
//
// # Safety
// `report` must be NULL or a handle not yet freed.
void nslr_report_free(struct NslrReport *report);

// Copies the solution into `out`, which must hold `len >= p` doubles.
//
// # Safety
// `report` must be a live handle and `out` writable for `len` doubles.
enum NslrStatus nslr_report_z(const struct NslrReport *report, double *out, size_t len);

// # Safety
// `report` must be a live handle and `out` writable.
enum NslrStatus nslr_report_summary(const struct NslrReport *report, struct NslrSummary *out);

// Loss at `z` (length `p`).
//
// # Safety
// `ds` must be a live handle, `z` readable for `len` doubles, `out` writable.
enum NslrStatus nslr_loss(const struct NslrDataset *ds, const double *z, size_t len, double *out);

// Gradient at `z`, written to `grad`; both have length `len = p`.
//
// # Safety
// `ds` must be a live handle, `z` readable and `grad` writable for `len` doubles.
enum NslrStatus nslr_gradient(const struct NslrDataset *ds,
                              const double *z,
                              size_t len,
                              double *grad);

// Sign error rate of `z` on `ds`.
//
// # Safety
// `ds` must be a live handle, `z` readable for `len` doubles, `out` writable.
enum NslrStatus nslr_ser(const struct NslrDataset *ds, const double *z, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NSLR_H */
