#ifndef LNAPPROX_H
#define LNAPPROX_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum LnaStatus {
  LNA_STATUS_OK = 0,
  LNA_STATUS_INVALID_ARGUMENT = 1,
  LNA_STATUS_DIMENSION = 2,
  LNA_STATUS_HYPOTHESIS = 3,
  LNA_STATUS_UNBOUNDED = 4,
  LNA_STATUS_INTERNAL = 5,
  LNA_STATUS_SERDE = 6,
  LNA_STATUS_NULL_POINTER = 7,
  LNA_STATUS_INVALID_UTF8 = 8,
  LNA_STATUS_BUFFER_TOO_SMALL = 9,
  LNA_STATUS_PANIC = 10,
} LnaStatus;

/**
 * Opaque network handle.
 */
typedef struct LnaNet LnaNet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *lna_version(void);

/**
 * Length in bytes (without the terminating NUL) of the last error message
 * on this thread, or 0 if there is none.
 */
size_t lna_last_error_length(void);

/**
 * Copies the last error message, NUL-terminated, into `buf` of size `len`.
 *
 * # Safety
 * `buf` must be valid for `len` writes.
 */
enum LnaStatus lna_last_error_message(char *buf, size_t len);

/**
 * Parses a NetIR JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid handle slot.
 */
enum LnaStatus lna_net_from_json(const char *json, struct LnaNet **out);

/**
 * Serializes a net to a newly allocated JSON string; release it with
 * [`lna_string_free`].
 *
 * # Safety
 * `net` must be a live handle and `out` a valid pointer.
 */
enum LnaStatus lna_net_to_json(const struct LnaNet *net, char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string obtained from this library, not yet freed.
 */
void lna_string_free(char *s);

/**
 * Releases a net handle. Null is ignored.
 *
 * # Safety
 * `net` must be null or a handle from this library, not yet freed.
 */
void lna_net_free(struct LnaNet *net);

/**
 * Input and output dimensions, number of hidden layers and maximal hidden
 * width. Any output pointer may be null.
 *
 * # Safety
 * `net` must be a live handle; non-null outputs must be valid for writes.
 */
enum LnaStatus lna_net_shape(const struct LnaNet *net,
                             size_t *input_dim,
                             size_t *output_dim,
                             size_t *depth,
                             size_t *width);

/**
 * Evaluates the net at `x` (length `n_in`) into `y` (length `n_out`).
 *
 * # Safety
 * `x` and `y` must be valid for `n_in` reads and `n_out` writes.
 */
enum LnaStatus lna_net_eval(const struct LnaNet *net,
                            const double *x,
                            size_t n_in,
                            double *y,
                            size_t n_out);

/**
 * As [`lna_net_eval`], carrying double-double precision through all layers.
 *
 * # Safety
 * `x` and `y` must be valid for `n_in` reads and `n_out` writes.
 */
enum LnaStatus lna_net_eval_extended(const struct LnaNet *net,
                                     const double *x,
                                     size_t n_in,
                                     double *y,
                                     size_t n_out);

/**
 * Layer normalization of `h` (length `n`) into `out` (length `n`).
 *
 * # Safety
 * `h` and `out` must be valid for `n` elements.
 */
enum LnaStatus lna_apply_ln(const double *h, size_t n, double *out);

/**
 * RMS normalization of `h` into `out`.
 *
 * # Safety
 * `h` and `out` must be valid for `n` elements.
 */
enum LnaStatus lna_apply_ls(const double *h, size_t n, double *out);

/**
 * Stabilized layer normalization (h − μ)/(σ + δ).
 *
 * # Safety
 * `h` and `out` must be valid for `n` elements.
 */
enum LnaStatus lna_apply_ln_delta(const double *h, size_t n, double delta, double *out);

/**
 * (p,q)-normalization of `h` into `out`.
 *
 * # Safety
 * `h` and `out` must be valid for `n` elements.
 */
enum LnaStatus lna_apply_pq_norm(const double *h, size_t n, uint32_t p, uint32_t q, double *out);

/**
 * φ_{p,q}(x).
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum LnaStatus lna_phi_pq(uint32_t p, uint32_t q, double x, double *out);

/**
 * LN-net with one group of size `ns` equal to x ↦ w2·sign(w1ᵀx + b1) + b2,
 * with `w1` of length `d` and `w2`, `b2` of length `m`.
 *
 * # Safety
 * Arrays must be valid for the given lengths; `out` a valid handle slot.
 */
enum LnaStatus lna_compile_sign_to_ln(const double *w1,
                                      size_t d,
                                      double b1,
                                      const double *w2,
                                      const double *b2,
                                      size_t m,
                                      size_t ns,
                                      struct LnaNet **out);

/**
 * LN-net with one group of size `ns` equal to x ↦ w2·Sat(w1ᵀx + b1) + b2.
 *
 * # Safety
 * Arrays must be valid for the given lengths; `out` a valid handle slot.
 */
enum LnaStatus lna_compile_phi_to_ln(const double *w1,
                                     size_t d,
                                     double b1,
                                     const double *w2,
                                     const double *b2,
                                     size_t m,
                                     size_t ns,
                                     struct LnaNet **out);

/**
 * Compiles a Sat-net of any depth into a PLN-net with group size `ns`.
 *
 * # Safety
 * `src` must be a live handle and `out` a valid handle slot.
 */
enum LnaStatus lna_compile_phi_net_to_pln(const struct LnaNet *src, size_t ns, struct LnaNet **out);

/**
 * Builds the two-hidden-layer φ_{p,q} approximator of a named target
 * (`sin2pi`, `const` or `gauss`) on [0, 1]^d.
 *
 * # Safety
 * `target` must be a NUL-terminated string and `out` a valid handle slot.
 */
enum LnaStatus lna_sobolev_build(const char *target,
                                 size_t d,
                                 size_t s,
                                 size_t k,
                                 size_t n,
                                 double delta,
                                 uint32_t p,
                                 uint32_t q,
                                 struct LnaNet **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LNAPPROX_H */
