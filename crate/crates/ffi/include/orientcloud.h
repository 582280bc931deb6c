/* C interface for the orientcloud yaw-estimation library. */

#ifndef ORIENTCLOUD_H
#define ORIENTCLOUD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code returned by every API call.
 */
typedef enum OcStatus {
  /**
   * Success.
   */
  OcStatus_Ok = 0,
  /**
   * Invalid request: bad configuration key or value.
   */
  OcStatus_Usage = 1,
  /**
   * The input data could not be used (missing file, bad format,
   * rejected frame, schema mismatch).
   */
  OcStatus_Data = 2,
  /**
   * A numerical procedure failed (degenerate fit, diverged training).
   */
  OcStatus_Numeric = 3,
  /**
   * A required pointer argument was null.
   */
  OcStatus_NullArgument = 4,
  /**
   * A string argument was not valid UTF-8.
   */
  OcStatus_InvalidUtf8 = 5,
  /**
   * An internal panic was caught at the boundary.
   */
  OcStatus_Panicked = 6,
} OcStatus;

/**
 * Run configuration handle.
 */
typedef struct OcConfig OcConfig;

/**
 * Trained yaw model handle.
 */
typedef struct OcModel OcModel;

/**
 * Loaded point-cloud session handle.
 */
typedef struct OcSession OcSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string. Never null; do not
 * free.
 */
const char *oc_version(void);

/**
 * Message describing the most recent failure on the calling thread, or
 * an empty string if none. The pointer stays valid until the next
 * failing call on the same thread. Do not free.
 */
const char *oc_last_error(void);

/**
 * Create a configuration with default values.
 *
 * # Safety
 * `out` must be a valid pointer. On `Ok` it receives a handle that must
 * be released with [`oc_config_free`].
 */
enum OcStatus oc_config_default(struct OcConfig **out);

/**
 * Load a configuration file (JSON or `section.key=value` lines).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` as in
 * [`oc_config_default`].
 */
enum OcStatus oc_config_load(const char *path, struct OcConfig **out);

/**
 * Set one configuration value by dotted key, e.g.
 * `preprocess.crop_radius_mm = "450"`.
 *
 * # Safety
 * `cfg` must be a live handle from a constructor; `key` and `value`
 * must be NUL-terminated strings.
 */
enum OcStatus oc_config_set(struct OcConfig *cfg, const char *key, const char *value);

/**
 * Release a configuration handle. Passing null is a no-op.
 *
 * # Safety
 * `cfg` must be null or a handle not yet freed.
 */
void oc_config_free(struct OcConfig *cfg);

/**
 * Load a session recording from a JSONL file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` receives a handle to
 * release with [`oc_session_free`].
 */
enum OcStatus oc_session_load(const char *path, struct OcSession **out);

/**
 * Number of frames in a loaded session.
 *
 * # Safety
 * `session` must be a live handle; `out` must be valid.
 */
enum OcStatus oc_session_frame_count(const struct OcSession *session, uintptr_t *out);

/**
 * Release a session handle. Passing null is a no-op.
 *
 * # Safety
 * `session` must be null or a handle not yet freed.
 */
void oc_session_free(struct OcSession *session);

/**
 * Load a trained model bundle from JSON.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` receives a handle to
 * release with [`oc_model_free`].
 */
enum OcStatus oc_model_load(const char *path, struct OcModel **out);

/**
 * Width of the feature vector [`oc_model_predict`] expects (the full
 * schema width, before the model's internal column selection).
 *
 * # Safety
 * `model` must be a live handle; `out` must be valid.
 */
enum OcStatus oc_model_feature_count(const struct OcModel *model, uintptr_t *out);

/**
 * Predict head yaw in degrees from one feature row of
 * [`oc_model_feature_count`] values.
 *
 * # Safety
 * `model` must be a live handle; `features` must point to `len`
 * readable doubles; `out_deg` must be valid.
 */
enum OcStatus oc_model_predict(const struct OcModel *model,
                               const double *features,
                               uintptr_t len,
                               double *out_deg);

/**
 * Release a model handle. Passing null is a no-op.
 *
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void oc_model_free(struct OcModel *model);

/**
 * Run the full chain (clean, split, fit, featurize, predict) on one
 * frame of a session and return body and head yaw in degrees.
 *
 * Frames the validation stage rejects report [`OcStatus::Data`] with a
 * message naming the reason.
 *
 * # Safety
 * `cfg`, `model` and `session` must be live handles; `subject_id` must
 * be a NUL-terminated string; `out_body_deg` and `out_head_deg` must be
 * valid pointers.
 */
enum OcStatus oc_estimate_yaw(const struct OcConfig *cfg,
                              const struct OcModel *model,
                              const struct OcSession *session,
                              const char *subject_id,
                              uintptr_t frame_index,
                              double *out_body_deg,
                              double *out_head_deg);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORIENTCLOUD_H */
