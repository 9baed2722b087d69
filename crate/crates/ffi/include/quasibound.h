#ifndef QUASIBOUND_H
#define QUASIBOUND_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QbFitMethod {
  QB_FIT_METHOD_ZERO_CROSSING = 0,
  QB_FIT_METHOD_PEAK_FWHM = 1,
} QbFitMethod;

/**
 * Result of every fallible call.
 */
typedef enum QbStatus {
  QB_STATUS_OK = 0,
  QB_STATUS_NULL_POINTER = 1,
  QB_STATUS_INVALID_ARGUMENT = 2,
  QB_STATUS_CONFIG = 3,
  QB_STATUS_POTENTIAL = 4,
  QB_STATUS_TRANSFER = 5,
  QB_STATUS_RESONANCE = 6,
  QB_STATUS_INTERFEROMETER = 7,
  /**
   * Output buffer too small; the required count was still written.
   */
  QB_STATUS_BUFFER_TOO_SMALL = 8,
  QB_STATUS_PANIC = 9,
} QbStatus;

/**
 * An adaptively sampled reflection-phase curve.
 */
typedef struct QbPhaseCurve QbPhaseCurve;

/**
 * A validated potential together with its default discretization.
 */
typedef struct QbPotential QbPotential;

/**
 * Reflection at one energy. `ln_abs_t11` stays finite where |t11| itself
 * would overflow.
 */
typedef struct QbReflection {
  double energy;
  double r_re;
  double r_im;
  double phi;
  double dphi_de;
  double ln_abs_t11;
} QbReflection;

/**
 * One phase-curve sample; `a`, `b` and `inv_t11_sq` share the curve's
 * normalization.
 */
typedef struct QbPhaseSample {
  double energy;
  double phi;
  double dphi_de;
  double a;
  double b;
  double inv_t11_sq;
} QbPhaseSample;

typedef struct QbResonance {
  double e0;
  double halfwidth;
  double peak_height;
  enum QbFitMethod method;
} QbResonance;

/**
 * Two-arm interferometer settings; the bias grid is passed separately.
 */
typedef struct QbInterferometer {
  double a1;
  double a2;
  double alpha1;
  double alpha2;
  double delta_v;
  double e_incident;
  /**
   * 0 selects the default slab count.
   */
  size_t n_slices;
} QbInterferometer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *qb_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qb_version(void);

/**
 * Builds a potential from a JSON configuration document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum QbStatus qb_potential_from_json(const char *json, struct QbPotential **out);

/**
 * The reference washboard potential.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum QbStatus qb_potential_washboard(struct QbPotential **out);

/**
 * Releases a potential. Null is ignored.
 *
 * # Safety
 * `pot` must come from this library and not be used afterwards.
 */
void qb_potential_free(struct QbPotential *pot);

/**
 * V(x) in eV.
 *
 * # Safety
 * `pot` must be a live handle and `out` writable.
 */
enum QbStatus qb_potential_evaluate(const struct QbPotential *pot, double x, double *out);

/**
 * Left and right asymptotes in eV.
 *
 * # Safety
 * `pot` must be a live handle; both outputs writable.
 */
enum QbStatus qb_potential_asymptotes(const struct QbPotential *pot,
                                      double *v_left,
                                      double *v_right);

/**
 * Reflection at `energy` with `n_slices` slabs (0 for the default).
 *
 * # Safety
 * `pot` must be a live handle and `out` writable.
 */
enum QbStatus qb_reflection(const struct QbPotential *pot,
                            double energy,
                            size_t n_slices,
                            struct QbReflection *out);

/**
 * Adaptive phase scan over `(e_lo, e_hi)`. `max_phase_step <= 0` and
 * `n_slices == 0` select the defaults.
 *
 * # Safety
 * `pot` must be a live handle and `out` writable.
 */
enum QbStatus qb_scan_phase(const struct QbPotential *pot,
                            double e_lo,
                            double e_hi,
                            double max_phase_step,
                            size_t n_slices,
                            struct QbPhaseCurve **out);

/**
 * Releases a phase curve. Null is ignored.
 *
 * # Safety
 * `curve` must come from this library and not be used afterwards.
 */
void qb_phase_curve_free(struct QbPhaseCurve *curve);

/**
 * Number of samples, 0 for a null handle.
 *
 * # Safety
 * `curve` must be null or a live handle.
 */
size_t qb_phase_curve_len(const struct QbPhaseCurve *curve);

/**
 * Sample `index` of the curve, in increasing energy.
 *
 * # Safety
 * `curve` must be a live handle and `out` writable.
 */
enum QbStatus qb_phase_curve_sample(const struct QbPhaseCurve *curve,
                                    size_t index,
                                    struct QbPhaseSample *out);

/**
 * Fits the resonances of `curve` into `out[0..capacity]`. `count` receives
 * the number found; if it exceeds `capacity` nothing is written and
 * `QB_STATUS_BUFFER_TOO_SMALL` is returned. `out` may be null when
 * `capacity` is 0.
 *
 * # Safety
 * `curve` must be a live handle, `out` valid for `capacity` elements and
 * `count` writable.
 */
enum QbStatus qb_find_resonances(const struct QbPhaseCurve *curve,
                                 struct QbResonance *out,
                                 size_t capacity,
                                 size_t *count);

/**
 * Noise-free interferometer intensity at the `n` biases of `v_grid`
 * (strictly increasing), written to `out[0..n]`.
 *
 * # Safety
 * `pot` must be a live handle, `settings` readable, and `v_grid` and `out`
 * valid for `n` elements.
 */
enum QbStatus qb_simulate_intensity(const struct QbPotential *pot,
                                    const struct QbInterferometer *settings,
                                    const double *v_grid,
                                    size_t n,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUASIBOUND_H */
