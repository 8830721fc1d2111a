#ifndef GPSWF_H
#define GPSWF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a call across the C boundary.
 */
typedef enum GpswfStatus {
  GPSWF_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  GPSWF_STATUS_NULL = 1,
  /**
   * An argument lies outside the domain of the operation.
   */
  GPSWF_STATUS_DOMAIN = 2,
  /**
   * The sampling constraint `c <= pi L` is violated.
   */
  GPSWF_STATUS_CONSTRAINT = 3,
  /**
   * The radial quadrature could not resolve the bandlimit.
   */
  GPSWF_STATUS_RESOLUTION = 4,
  /**
   * The computed spectrum does not cover the requested threshold.
   */
  GPSWF_STATUS_COVERAGE = 5,
  GPSWF_STATUS_IO = 6,
  /**
   * Input data is inconsistent or malformed.
   */
  GPSWF_STATUS_FORMAT = 7,
  /**
   * An internal panic was caught.
   */
  GPSWF_STATUS_PANIC = 8,
} GpswfStatus;

/**
 * Wavefunctions admitted by a concentration threshold, with their radial
 * eigensystems. Opaque to C.
 */
typedef struct GpswfBasis GpswfBasis;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *gpswf_last_error(void);

/**
 * Solves the radial problems for bandlimit `c` and keeps every index whose
 * concentration ratio exceeds `t`. Free the result with [`gpswf_basis_free`].
 *
 * # Safety
 * `out` must be null or point to writable storage for one pointer.
 */
enum GpswfStatus gpswf_basis_new(double c, double t, struct GpswfBasis **out);

/**
 * Releases a basis. Null is ignored.
 *
 * # Safety
 * `basis` must be null or a pointer returned by [`gpswf_basis_new`] that has
 * not been freed.
 */
void gpswf_basis_free(struct GpswfBasis *basis);

/**
 * Number of wavefunctions in the basis.
 *
 * # Safety
 * `basis` must be a live handle; `out_len` must be writable.
 */
enum GpswfStatus gpswf_basis_len(const struct GpswfBasis *basis, size_t *out_len);

/**
 * Index `(N, m, n)` and concentration `alpha~` of entry `i`.
 *
 * # Safety
 * `basis` must be a live handle; every output pointer must be writable.
 */
enum GpswfStatus gpswf_basis_index(const struct GpswfBasis *basis,
                                   size_t i,
                                   uint32_t *out_degree,
                                   int32_t *out_order,
                                   uint32_t *out_radial,
                                   double *out_alpha_tilde);

/**
 * `psi(x)` for entry `i` at a point `x[3]` of the closed unit ball.
 *
 * # Safety
 * `basis` must be a live handle, `x` must point to 3 doubles and the outputs
 * must be writable.
 */
enum GpswfStatus gpswf_basis_eval(const struct GpswfBasis *basis,
                                  size_t i,
                                  const double *x,
                                  double *out_re,
                                  double *out_im);

/**
 * Expansion coefficients `a^` of real samples on the `(2L+1)^3` grid with
 * spacing `1/L`, laid out with the last coordinate fastest. Writes one
 * coefficient per basis entry into `out_re` and `out_im`.
 *
 * # Safety
 * `basis` must be a live handle, `values` must hold `values_len` doubles and
 * each output must hold `out_len` doubles.
 */
enum GpswfStatus gpswf_expand_real(const struct GpswfBasis *basis,
                                   uint32_t l,
                                   const double *values,
                                   size_t values_len,
                                   double *out_re,
                                   double *out_im,
                                   size_t out_len);

/**
 * Evaluates `sum a^ psi` at `n_points` points (`points[3 * j .. 3 * j + 3]`)
 * of the closed unit ball, given one coefficient per basis entry.
 *
 * # Safety
 * `basis` must be a live handle; `coeff_re` and `coeff_im` must hold
 * `n_coeffs` doubles, `points` `3 * n_points` doubles, and each output
 * `n_points` doubles.
 */
enum GpswfStatus gpswf_reconstruct(const struct GpswfBasis *basis,
                                   const double *coeff_re,
                                   const double *coeff_im,
                                   size_t n_coeffs,
                                   const double *points,
                                   size_t n_points,
                                   double *out_re,
                                   double *out_im);

/**
 * The besinc kernel `h_c(x)` at `x[3]`.
 *
 * # Safety
 * `x` must point to 3 doubles and `out` must be writable.
 */
enum GpswfStatus gpswf_besinc(double c, const double *x, double *out);

/**
 * The spherical Bessel function `j_n(z)` for `z >= 0`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GpswfStatus gpswf_spherical_bessel(uint32_t n, double z, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GPSWF_H */
