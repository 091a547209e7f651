#ifndef QUASISPEC_H
#define QUASISPEC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  QS_STATUS_OK = 0,
  QS_STATUS_NULL_POINTER = 1,
  QS_STATUS_INVALID_ARGUMENT = 2,
  QS_STATUS_NUMERIC = 3,
  QS_STATUS_CONFIG = 4,
  QS_STATUS_IO = 5,
  QS_STATUS_BUFFER_TOO_SMALL = 6,
  QS_STATUS_PANIC = 7,
} QsStatus;

/**
 * Band diagram of one periodic approximant.
 */
typedef struct QsBandDiagram QsBandDiagram;

/**
 * Interface modes with fitted and estimated decay rates.
 */
typedef struct QsInterfaceModes QsInterfaceModes;

/**
 * Quasiperiodic problem: kind plus coefficient field.
 */
typedef struct QsProblem QsProblem;

/**
 * Sorted list of eigenvalues.
 */
typedef struct QsSpectrum QsSpectrum;

/**
 * Library version, a static nul-terminated string.
 */
const char *qs_version(void);

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next call into the library on the same thread.
 */
const char *qs_last_error_message(void);

/**
 * Stable error name of the last failure on this thread (for example
 * `"InvalidWindow"`), or null.
 */
const char *qs_last_error_name(void);

/**
 * First `count` convergents of the golden mean into `p_out` and `q_out`.
 *
 * # Safety
 * `p_out` and `q_out` must each hold `count` elements.
 */
QsStatus qs_golden_convergents(size_t count, int64_t *p_out, int64_t *q_out);

/**
 * `-u'' + (sin 2 pi x + sin 2 pi theta x) u = lambda u`.
 *
 * # Safety
 * `out` must be a valid pointer to write the handle to.
 */
QsStatus qs_problem_sin2d_schrodinger(double theta, QsProblem **out);

/**
 * `-u'' = lambda (sin 2 pi x + sin 2 pi theta x + 3) u`.
 *
 * # Safety
 * `out` must be a valid pointer to write the handle to.
 */
QsStatus qs_problem_sin2d_generalized(double theta, QsProblem **out);

/**
 * # Safety
 * `problem` must be null or a handle not yet freed.
 */
void qs_problem_free(QsProblem *problem);

/**
 * Band diagram of the period-`q` approximant with slope `p/q`.
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
QsStatus qs_band_diagram_new(const QsProblem *problem,
                             int64_t p,
                             int64_t q,
                             size_t alpha_count,
                             size_t points_per_unit,
                             double lo,
                             double hi,
                             QsBandDiagram **out);

/**
 * Number of quasimomentum samples and of bands.
 *
 * # Safety
 * `bd` must be a live handle; the output pointers must be valid.
 */
QsStatus qs_band_diagram_shape(const QsBandDiagram *bd, size_t *n_alphas, size_t *n_bands);

/**
 * Eigenvalue of band `band` at quasimomentum sample `alpha_index`.
 *
 * # Safety
 * `bd` must be a live handle and `out` a valid pointer.
 */
QsStatus qs_band_diagram_value(const QsBandDiagram *bd,
                               size_t alpha_index,
                               size_t band,
                               double *out);

/**
 * Band ranges `[lo_out[i], hi_out[i]]`. `len` receives the number of
 * bands even when `cap` is too small.
 *
 * # Safety
 * `lo_out` and `hi_out` must each hold `cap` elements; `len` may be null.
 */
QsStatus qs_band_diagram_ranges(const QsBandDiagram *bd,
                                double *lo_out,
                                double *hi_out,
                                size_t cap,
                                size_t *len);

/**
 * # Safety
 * `bd` must be null or a handle not yet freed.
 */
void qs_band_diagram_free(QsBandDiagram *bd);

/**
 * Eigenvalues in `[lo, hi]` of the lifted two-dimensional finite-difference
 * operator with mesh spacing `h` and phases `(alpha, beta)`.
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
QsStatus qs_superspace_spectrum(const QsProblem *problem,
                                double h,
                                double alpha,
                                double beta,
                                double lo,
                                double hi,
                                QsSpectrum **out);

/**
 * # Safety
 * `s` must be a live handle.
 */
size_t qs_spectrum_len(const QsSpectrum *s);

/**
 * Copies the eigenvalues into `buf`.
 *
 * # Safety
 * `buf` must hold `cap` elements; `len` may be null.
 */
QsStatus qs_spectrum_copy(const QsSpectrum *s, double *buf, size_t cap, size_t *len);

/**
 * # Safety
 * `s` must be null or a handle not yet freed.
 */
void qs_spectrum_free(QsSpectrum *s);

/**
 * Traces `x_1..x_{n_max}` of the default Fibonacci laminate at frequency
 * `omega`.
 *
 * # Safety
 * `buf` must hold `n_max` elements.
 */
QsStatus qs_fibonacci_traces(double omega, size_t n_max, double *buf);

/**
 * Localised modes of the reflected interface problem with eigenvalues in
 * `[lo, hi]`, using default discretisation settings.
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
QsStatus qs_interface_modes(const QsProblem *problem, double lo, double hi, QsInterfaceModes **out);

/**
 * # Safety
 * `m` must be a live handle.
 */
size_t qs_interface_modes_len(const QsInterfaceModes *m);

/**
 * Eigenvalue, fitted decay rate and approximant-estimated rate (NaN when
 * unavailable) of mode `index`.
 *
 * # Safety
 * `m` must be a live handle; the output pointers must be valid.
 */
QsStatus qs_interface_mode(const QsInterfaceModes *m,
                           size_t index,
                           double *eigenvalue,
                           double *rate,
                           double *estimated_rate);

/**
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void qs_interface_modes_free(QsInterfaceModes *m);

/**
 * Runs a JSON configuration file as the command-line tool would, writing
 * into `out_dir` (null: the directory named in the config).
 *
 * # Safety
 * `config_path` must be a nul-terminated string; `out_dir` null or one.
 */
QsStatus qs_run_config(const char *config_path, const char *out_dir);

#endif  /* QUASISPEC_H */
