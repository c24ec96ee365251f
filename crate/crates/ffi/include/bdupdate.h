#ifndef BDUPDATE_H
#define BDUPDATE_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define BD_OK 0

#define BD_ERR_NULL 1

#define BD_ERR_DIMENSION 2

#define BD_ERR_INVALID 3

#define BD_ERR_NUMERICAL 4

#define BD_ERR_PANIC 5

/**
 * Reorthogonalization policies for `bd_tracker_set_policy`.
 */
#define BD_REORTH_NEVER 0

#define BD_REORTH_EVERY 1

#define BD_REORTH_ADAPTIVE 2

/**
 * Upper bidiagonal matrix.
 */
typedef struct BdBand BdBand;

/**
 * Rank-r streaming tracker.
 */
typedef struct BdTracker BdTracker;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or an empty string.
 * The pointer stays valid until the next call on the same thread.
 */
const char *bd_last_error(void);

/**
 * Creates an m×n band from `min(m, n)` diagonal and `min(m, n) − 1`
 * superdiagonal values.
 *
 * # Safety
 * `alphas` and `betas` must point to that many readable values; `out`
 * must be writable.
 */
int bd_band_new(size_t m, size_t n, const double *alphas, const double *betas, struct BdBand **out);

/**
 * # Safety
 * `h` must be null or a handle not yet freed.
 */
void bd_band_free(struct BdBand *h);

/**
 * # Safety
 * `h` must be a live handle; `m` and `n` must be writable.
 */
int bd_band_shape(const struct BdBand *h, size_t *m, size_t *n);

/**
 * Copies the band into `alphas` (`min(m, n)` values) and `betas`
 * (`min(m, n) − 1` values).
 *
 * # Safety
 * `h` must be a live handle and the buffers large enough.
 */
int bd_band_values(const struct BdBand *h, double *alphas, double *betas);

/**
 * Reduces the row-major m×n matrix `a` to `Qᵀ A P = B`. `q` (m×m) and
 * `p` (n×n), row-major, may be null when not wanted.
 *
 * # Safety
 * `a` must hold `m·n` values, `q` and `p` (when non-null) `m·m` and `n·n`.
 */
int bd_bidiagonalize(size_t m,
                     size_t n,
                     const double *a,
                     struct BdBand **out,
                     double *q,
                     double *p);

/**
 * Givens update of `B + bhat chatᵀ`. `rotations` (may be null) receives
 * the number of plane rotations used.
 *
 * # Safety
 * `band` must be a live handle, `bhat` and `chat` must hold `m` and `n`
 * values, and `out` must be writable.
 */
int bd_bgu_update(const struct BdBand *band,
                  const double *bhat,
                  const double *chat,
                  struct BdBand **out,
                  size_t *rotations);

/**
 * Compact-Householder update of `B + bhat chatᵀ`. `mults` (may be null)
 * receives the multiplication count.
 *
 * # Safety
 * As for [`bd_bgu_update`].
 */
int bd_bhu_update(const struct BdBand *band,
                  const double *bhat,
                  const double *chat,
                  struct BdBand **out,
                  uint64_t *mults);

/**
 * # Safety
 * `out` must be writable.
 */
int bd_tracker_new(size_t m, size_t n, size_t r, struct BdTracker **out);

/**
 * # Safety
 * `h` must be null or a handle not yet freed.
 */
void bd_tracker_free(struct BdTracker *h);

/**
 * `kind` is one of the `BD_REORTH_*` constants; `param` is the interval
 * for `BD_REORTH_EVERY` and the threshold for `BD_REORTH_ADAPTIVE`.
 *
 * # Safety
 * `h` must be a live handle.
 */
int bd_tracker_set_policy(struct BdTracker *h, int kind, double param);

/**
 * Adds `theta` at the 0-based position `(i, j)`.
 *
 * # Safety
 * `h` must be a live handle.
 */
int bd_tracker_update_sparse(struct BdTracker *h, size_t i, size_t j, double theta);

/**
 * Adds `b cᵀ`.
 *
 * # Safety
 * `h` must be a live handle; `b` and `c` must hold `m` and `n` values.
 */
int bd_tracker_update(struct BdTracker *h, const double *b, const double *c);

/**
 * Copy of the tracker's current r×r band.
 *
 * # Safety
 * `h` must be a live handle and `out` writable.
 */
int bd_tracker_band(const struct BdTracker *h, struct BdBand **out);

/**
 * `|frob_a − ‖B‖_F|`.
 *
 * # Safety
 * `h` must be a live handle and `out` writable.
 */
int bd_tracker_residual(const struct BdTracker *h, double frob_a, double *out);

/**
 * Estimates `‖QᵀQ − I‖_F` and `‖PᵀP − I‖_F`.
 *
 * # Safety
 * `h` must be a live handle; `drift_q` and `drift_p` writable.
 */
int bd_tracker_drift(struct BdTracker *h, double *drift_q, double *drift_p);

/**
 * # Safety
 * `h` must be a live handle.
 */
int bd_tracker_reorthogonalize(struct BdTracker *h);

/**
 * Writes the represented m×n matrix `Q B Pᵀ`, row-major, into `out`.
 *
 * # Safety
 * `h` must be a live handle and `out` must hold `m·n` values.
 */
int bd_tracker_represented(const struct BdTracker *h, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BDUPDATE_H */
