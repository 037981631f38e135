#ifndef KEPLERWAVE_H
#define KEPLERWAVE_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum KwStatus {
  KW_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  KW_STATUS_NULL_POINTER = 1,
  /**
   * Argument outside the domain of the operation.
   */
  KW_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A nonlinear solve did not converge or has no solution.
   */
  KW_STATUS_SOLVER = 3,
  /**
   * The expansion window hit its largest principal quantum number.
   */
  KW_STATUS_TRUNCATION = 4,
  /**
   * An error estimate exceeded its tolerance.
   */
  KW_STATUS_ACCURACY = 5,
  /**
   * Internal numerical failure.
   */
  KW_STATUS_NUMERICAL = 6,
  /**
   * A string argument was not valid UTF-8.
   */
  KW_STATUS_INVALID_UTF8 = 7,
  /**
   * A caller-provided buffer is too small.
   */
  KW_STATUS_BUFFER_TOO_SMALL = 8,
  /**
   * Rust panicked; the handle arguments should be considered unusable.
   */
  KW_STATUS_PANIC = 9,
} KwStatus;

/**
 * Quantum-defect table (opaque).
 */
typedef struct KwDefectTable KwDefectTable;

/**
 * Packet parameters (opaque).
 */
typedef struct KwEss KwEss;

/**
 * Windowed eigenstate expansion (opaque).
 */
typedef struct KwSpectral KwSpectral;

/**
 * Plain copy of a packet's five parameters.
 */
typedef struct KwEssParams {
  double alpha;
  int64_t beta;
  double gamma0;
  double gamma1;
  double delta;
} KwEssParams;

/**
 * Runge–Lenz uncertainties at `t = 0`.
 */
typedef struct KwRungeLenz {
  double mean_ax;
  double mean_ay;
  double d_ax;
  double d_ay;
  double product;
  double hl;
  double z;
} KwRungeLenz;

/**
 * One expansion coefficient.
 */
typedef struct KwCoefficient {
  int64_t n;
  int64_t l;
  double re;
  double im;
  double energy;
} KwCoefficient;

/**
 * Message of the last failed call on this thread, or an empty string.
 * The pointer stays valid until the next `kw_*` call on the same thread.
 */
const char *kw_last_error_message(void);

/**
 * Classical period `2π(n̄ − ½)³` in atomic units.
 */
double kw_classical_period(double n_bar);

/**
 * Builds the packet for `(n̄, l̄, ΔL)` and stores a new handle in `*out`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum KwStatus kw_ess_build(double n_bar, int64_t l_bar, double dl, struct KwEss **out);

/**
 * Creates a packet from explicit parameters.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum KwStatus kw_ess_new(struct KwEssParams params, struct KwEss **out);

/**
 * Copies the parameters of `ess` into `*out`.
 *
 * # Safety
 * `ess` must be a live handle; `out` must be valid for writes.
 */
enum KwStatus kw_ess_params(const struct KwEss *ess, struct KwEssParams *out);

/**
 * Amplitude `Ψ(r, φ)` at `t = 0`.
 *
 * # Safety
 * `ess` must be a live handle; `re` and `im` must be valid for writes.
 */
enum KwStatus kw_ess_eval(const struct KwEss *ess, double r, double phi, double *re, double *im);

/**
 * Runge–Lenz uncertainties of the packet at `t = 0` (closed form).
 *
 * # Safety
 * `ess` must be a live handle; `out` must be valid for writes.
 */
enum KwStatus kw_ess_runge_lenz(const struct KwEss *ess, struct KwRungeLenz *out);

/**
 * Releases a packet handle; null is ignored.
 *
 * # Safety
 * `ess` must be null or a handle not yet freed.
 */
void kw_ess_free(struct KwEss *ess);

/**
 * Table with every defect zero.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum KwStatus kw_defect_table_zero(struct KwDefectTable **out);

/**
 * Parses a table such as `{"defects": {"0": 0.40, "1": 0.05}}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum KwStatus kw_defect_table_from_json(const char *json, struct KwDefectTable **out);

/**
 * Releases a defect table; null is ignored.
 *
 * # Safety
 * `table` must be null or a handle not yet freed.
 */
void kw_defect_table_free(struct KwDefectTable *table);

/**
 * Builds the defect packet for `(n̄, l̄, ΔL)` against the expansion-weighted energy target.
 *
 * # Safety
 * `table` must be a live handle; `out` must be valid for writes.
 */
enum KwStatus kw_sqdt_build(double n_bar,
                            int64_t l_bar,
                            double dl,
                            const struct KwDefectTable *table,
                            struct KwEss **out);

/**
 * Hydrogenic expansion of `ess` with tail mass at most `tol`.
 *
 * # Safety
 * `ess` must be a live handle; `out` must be valid for writes.
 */
enum KwStatus kw_spectral_expand(const struct KwEss *ess, double tol, struct KwSpectral **out);

/**
 * Expansion of `ess` in the defect eigenbasis of `table`.
 *
 * # Safety
 * `ess` and `table` must be live handles; `out` must be valid for writes.
 */
enum KwStatus kw_sqdt_expand(const struct KwEss *ess,
                             const struct KwDefectTable *table,
                             double tol,
                             struct KwSpectral **out);

/**
 * Number of retained coefficients.
 *
 * # Safety
 * `s` must be a live handle; `out` must be valid for writes.
 */
enum KwStatus kw_spectral_len(const struct KwSpectral *s, size_t *out);

/**
 * Coefficient `index` in `(n, l)` order.
 *
 * # Safety
 * `s` must be a live handle; `out` must be valid for writes.
 */
enum KwStatus kw_spectral_coefficient(const struct KwSpectral *s,
                                      size_t index,
                                      struct KwCoefficient *out);

/**
 * Time of the state and `Σ|c|²`.
 *
 * # Safety
 * `s` must be a live handle; `t` and `norm` must be valid for writes.
 */
enum KwStatus kw_spectral_info(const struct KwSpectral *s, double *t, double *norm);

/**
 * New state advanced by `dt` atomic units; `s` is unchanged.
 *
 * # Safety
 * `s` must be a live handle; `out` must be valid for writes.
 */
enum KwStatus kw_spectral_evolve(const struct KwSpectral *s, double dt, struct KwSpectral **out);

/**
 * `|⟨Ψ(t)|Ψ(t+τ)⟩|²`.
 *
 * # Safety
 * `s` must be a live handle; `out` must be valid for writes.
 */
enum KwStatus kw_spectral_autocorrelation(const struct KwSpectral *s, double tau, double *out);

/**
 * Writes `r|Ψ|²` on the polar grid into `values` (row-major, `n_r * n_phi` entries).
 *
 * # Safety
 * `s` must be a live handle; `r` and `phi` must point to `n_r` and `n_phi`
 * readable values; `values` must hold `capacity` writable values.
 */
enum KwStatus kw_spectral_reconstruct(const struct KwSpectral *s,
                                      const double *r,
                                      size_t n_r,
                                      const double *phi,
                                      size_t n_phi,
                                      double *values,
                                      size_t capacity);

/**
 * Releases an expansion; null is ignored.
 *
 * # Safety
 * `s` must be null or a handle not yet freed.
 */
void kw_spectral_free(struct KwSpectral *s);

#endif  /* KEPLERWAVE_H */
