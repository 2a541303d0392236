#ifndef KACZMARZ_H
#define KACZMARZ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KzStatus {
  KZ_STATUS_OK = 0,
  KZ_STATUS_NULL_POINTER = 1,
  KZ_STATUS_INVALID_ARGUMENT = 2,
  KZ_STATUS_DIMENSION = 3,
  /**
   * A mathematical precondition of a bound or construction failed.
   */
  KZ_STATUS_HYPOTHESIS = 4,
  KZ_STATUS_UNREACHABLE = 5,
  KZ_STATUS_BUFFER_TOO_SMALL = 6,
  KZ_STATUS_IO = 7,
  KZ_STATUS_PANIC = 8,
} KzStatus;

typedef enum KzSpacing {
  KZ_SPACING_EVEN = 0,
  KZ_SPACING_RANDOM_DISTINCT = 1,
  KZ_SPACING_TWO_LEVEL = 2,
} KzSpacing;

typedef enum KzBoundKind {
  KZ_BOUND_KIND_STROHMER = 0,
  KZ_BOUND_KIND_ZOUZIAS_RHS_NOISE = 1,
  KZ_BOUND_KIND_PERTURB_DOUBLY = 2,
  KZ_BOUND_KIND_PERTURB_PARTIAL = 3,
  KZ_BOUND_KIND_MAIN_ADDITIVE = 4,
  KZ_BOUND_KIND_MAIN_MULTIPLICATIVE = 5,
  KZ_BOUND_KIND_MULTIPLICATIVE_PERTURB = 6,
} KzBoundKind;

/**
 * A noisy counterpart `Ã x ≈ b̃` together with its base system.
 */
typedef struct KzNoisySystem KzNoisySystem;

/**
 * A consistent noiseless system `A x = b`.
 */
typedef struct KzSystem KzSystem;

/**
 * Squared-error records of a multi-trial RK run.
 */
typedef struct KzTrajectory KzTrajectory;

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next failing call on the same thread.
 */
const char *kz_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *kz_version(void);

/**
 * Generates `A = U Σ Vᵀ` with the requested spectrum and `b = A z`.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum KzStatus kz_system_generate(size_t m,
                                 size_t n,
                                 size_t r,
                                 double sigma_min,
                                 double sigma_max,
                                 enum KzSpacing spacing,
                                 uint64_t seed,
                                 struct KzSystem **out);

/**
 * Wraps a caller-supplied consistent system; `a` is row-major `rows × cols`.
 *
 * # Safety
 * `a` must hold `rows * cols` values, `b` must hold `rows`, `out` must be
 * valid for a pointer write.
 */
enum KzStatus kz_system_from_dense(size_t rows,
                                   size_t cols,
                                   const double *a,
                                   const double *b,
                                   struct KzSystem **out);

/**
 * # Safety
 * `sys` must be null or a handle from a `kz_system_*` constructor, freed once.
 */
void kz_system_free(struct KzSystem *sys);

/**
 * # Safety
 * `sys` must be a live handle; `rows` and `cols` valid for writes.
 */
enum KzStatus kz_system_dims(const struct KzSystem *sys, size_t *rows, size_t *cols);

/**
 * `R = ‖A‖_F² / σ_min²(A)`.
 *
 * # Safety
 * `sys` must be a live handle; `out` valid for a write.
 */
enum KzStatus kz_system_scaled_condition(const struct KzSystem *sys, double *out);

/**
 * Copies `x_LS` into `out`, which must hold at least `cols` values.
 *
 * # Safety
 * `sys` must be a live handle; `out` valid for `len` writes.
 */
enum KzStatus kz_system_x_ls(const struct KzSystem *sys, double *out, size_t len);

/**
 * `Ã = A + σ_A E`, `b̃ = b + σ_B ε`.
 *
 * # Safety
 * `sys` must be a live handle; `out` valid for a pointer write.
 */
enum KzStatus kz_noise_additive(const struct KzSystem *sys,
                                double sigma_a,
                                double sigma_b,
                                uint64_t seed,
                                struct KzNoisySystem **out);

/**
 * `Ã = (I + σ_A E) A (I + σ_A F)`; either factor can be switched off.
 *
 * # Safety
 * `sys` must be a live handle; `out` valid for a pointer write.
 */
enum KzStatus kz_noise_multiplicative(const struct KzSystem *sys,
                                      double sigma_a,
                                      double sigma_b,
                                      bool use_e,
                                      bool use_f,
                                      uint64_t seed,
                                      struct KzNoisySystem **out);

/**
 * `Ã = A (I + M)` with `‖A†‖‖AM‖ = strength`, keeping `Ã x = b` consistent.
 *
 * # Safety
 * `sys` must be a live handle; `out` valid for a pointer write.
 */
enum KzStatus kz_noise_partial(const struct KzSystem *sys,
                               double strength,
                               double sigma_b,
                               uint64_t seed,
                               struct KzNoisySystem **out);

/**
 * Lifts the smallest singular value of `A` to the next one.
 *
 * # Safety
 * `sys` must be a live handle; `out` valid for a pointer write.
 */
enum KzStatus kz_noise_preconditioner(const struct KzSystem *sys, struct KzNoisySystem **out);

/**
 * # Safety
 * `noisy` must be null or a handle from a `kz_noise_*` constructor, freed once.
 */
void kz_noisy_free(struct KzNoisySystem *noisy);

/**
 * Copies `Ã` row-major into `out` (at least `rows * cols` values).
 *
 * # Safety
 * `noisy` must be a live handle; `out` valid for `len` writes.
 */
enum KzStatus kz_noisy_a_tilde(const struct KzNoisySystem *noisy, double *out, size_t len);

/**
 * Runs `trials` RK trials of `max_iterations` steps. A `record_stride` of 0
 * picks one automatically.
 *
 * # Safety
 * `noisy` must be a live handle; `out` valid for a pointer write.
 */
enum KzStatus kz_solve(const struct KzNoisySystem *noisy,
                       size_t max_iterations,
                       size_t trials,
                       size_t record_stride,
                       uint64_t seed,
                       struct KzTrajectory **out);

/**
 * # Safety
 * `traj` must be null or a handle from [`kz_solve`], freed once.
 */
void kz_trajectory_free(struct KzTrajectory *traj);

/**
 * Number of records; 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t kz_trajectory_len(const struct KzTrajectory *traj);

/**
 * # Safety
 * `traj` must be a live handle; `out` valid for `len` writes.
 */
enum KzStatus kz_trajectory_iterations(const struct KzTrajectory *traj, size_t *out, size_t len);

/**
 * Mean over trials of `‖x_k − x_LS‖²` at each record.
 *
 * # Safety
 * `traj` must be a live handle; `out` valid for `len` writes.
 */
enum KzStatus kz_trajectory_mean(const struct KzTrajectory *traj, double *out, size_t len);

/**
 * Evaluates a bound at the trajectory's records, averaged over its start
 * points. `out_horizon` may be null.
 *
 * # Safety
 * Handles must be live; `out` valid for `len` writes; `out_horizon` null or
 * valid for a write.
 */
enum KzStatus kz_bound_curve(const struct KzNoisySystem *noisy,
                             const struct KzTrajectory *traj,
                             enum KzBoundKind kind,
                             double *out,
                             size_t len,
                             double *out_horizon);

/**
 * Horizon of a bound for the noisy system, independent of any start point.
 *
 * # Safety
 * `noisy` must be a live handle; `out` valid for a write.
 */
enum KzStatus kz_bound_horizon(const struct KzNoisySystem *noisy,
                               enum KzBoundKind kind,
                               double *out);

/**
 * Smallest `K` with `(1 − 1/r)^K · init ≤ tau − tau0`; [`KzStatus::Unreachable`]
 * when `tau ≤ tau0`.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum KzStatus kz_iterations_to_tolerance(double r,
                                         double init,
                                         double tau,
                                         double tau0,
                                         uint64_t *out);

#endif  /* KACZMARZ_H */
