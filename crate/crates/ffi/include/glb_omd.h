#ifndef GLB_OMD_H
#define GLB_OMD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible function.
 */
typedef enum GlbStatus {
  GLB_STATUS_OK = 0,
  GLB_STATUS_NULL_POINTER = 1,
  GLB_STATUS_INVALID_ARGUMENT = 2,
  GLB_STATUS_DOMAIN = 3,
  GLB_STATUS_CONFIG = 4,
  GLB_STATUS_CONTRACT = 5,
  GLB_STATUS_NUMERIC = 6,
  GLB_STATUS_IO = 7,
  GLB_STATUS_PANIC = 8,
} GlbStatus;

/**
 * Reward family codes.
 */
typedef enum GlbFamily {
  GLB_FAMILY_LOGISTIC = 0,
  GLB_FAMILY_POISSON = 1,
  GLB_FAMILY_GAUSSIAN = 2,
} GlbFamily;

/**
 * Policy codes.
 */
typedef enum GlbPolicyKind {
  GLB_POLICY_KIND_GLB_OMD = 0,
  GLB_POLICY_KIND_GLM_UCB = 1,
  GLB_POLICY_KIND_GREEDY = 2,
} GlbPolicyKind;

/**
 * Regularizer modes.
 */
typedef enum GlbLambdaMode {
  GLB_LAMBDA_MODE_THEORY = 0,
  GLB_LAMBDA_MODE_PRACTICAL = 1,
} GlbLambdaMode;

/**
 * Opaque policy handle.
 */
typedef struct GlbPolicy GlbPolicy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or an empty string.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *glb_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *glb_version(void);

/**
 * Creates a policy. `dispersion <= 0` selects the family default.
 * `radius_scale` only affects GLM-UCB.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum GlbStatus glb_policy_new(uint32_t policy,
                              uint32_t family,
                              double dispersion,
                              size_t d,
                              double s,
                              double delta,
                              uint32_t mode,
                              double radius_scale,
                              struct GlbPolicy **out);

/**
 * Releases a policy. Null is ignored.
 *
 * # Safety
 * `policy` must be null or a handle from [`glb_policy_new`] not yet freed.
 */
void glb_policy_free(struct GlbPolicy *policy);

/**
 * Parameter dimension of a policy.
 *
 * # Safety
 * `policy` must be a live handle and `out` writable.
 */
enum GlbStatus glb_policy_dim(const struct GlbPolicy *policy, size_t *out);

/**
 * Chooses among `k` arms stored row-major in `actions` (`k * d` values).
 *
 * # Safety
 * `actions` must point to `k * d` readable doubles and `out_index` be
 * writable.
 */
enum GlbStatus glb_policy_select(const struct GlbPolicy *policy,
                                 const double *actions,
                                 size_t k,
                                 size_t *out_index);

/**
 * Feeds back the reward `r` for action `x` of length `d`.
 *
 * # Safety
 * `policy` must be a live handle not used concurrently; `x` must point to
 * `d` readable doubles.
 */
enum GlbStatus glb_policy_observe(struct GlbPolicy *policy, const double *x, size_t d, double r);

/**
 * Exploration radius for the next selection.
 *
 * # Safety
 * `policy` must be a live handle and `out` writable.
 */
enum GlbStatus glb_policy_beta(const struct GlbPolicy *policy, double *out);

/**
 * Copies the current estimate into `out`, which holds `len` doubles.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum GlbStatus glb_policy_estimate(const struct GlbPolicy *policy, double *out, size_t len);

/**
 * Link function `mu(z)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GlbStatus glb_link_mu(uint32_t family, double dispersion, double z, double *out);

/**
 * Link slope `mu'(z)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GlbStatus glb_link_mu_prime(uint32_t family, double dispersion, double z, double *out);

/**
 * `1 / inf mu'` over `[-S, S]`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GlbStatus glb_kappa(uint32_t family, double dispersion, double s, double *out);

/**
 * Confidence radius after `t` rounds for the given configuration.
 *
 * # Safety
 * `out` must be writable.
 */
enum GlbStatus glb_beta_radius(uint32_t family,
                               double dispersion,
                               size_t d,
                               double s,
                               double delta,
                               uint32_t mode,
                               size_t t,
                               double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GLB_OMD_H */
