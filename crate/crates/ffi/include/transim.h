#ifndef TRANSIM_H
#define TRANSIM_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TransimClassification {
  TRANSIM_CLASSIFICATION_PARAMETER_SERVER = 0,
  TRANSIM_CLASSIFICATION_STRAGGLER_WORKER = 1,
  TRANSIM_CLASSIFICATION_UNCLASSIFIED = 2,
} TransimClassification;

typedef enum TransimStatus {
  TRANSIM_STATUS_OK = 0,
  TRANSIM_STATUS_NULL_POINTER = 1,
  TRANSIM_STATUS_INVALID_UTF8 = 2,
  TRANSIM_STATUS_IO = 3,
  TRANSIM_STATUS_SCHEMA = 4,
  TRANSIM_STATUS_BUNDLE = 5,
  TRANSIM_STATUS_SCENARIO = 6,
  TRANSIM_STATUS_COVERAGE = 7,
  TRANSIM_STATUS_INVALID_INPUT = 8,
  TRANSIM_STATUS_STALL = 9,
  TRANSIM_STATUS_PANIC = 10,
} TransimStatus;

/**
 * A loaded model bundle.
 */
typedef struct TransimBundle TransimBundle;

/**
 * An incremental bottleneck detector.
 */
typedef struct TransimDetector TransimDetector;

typedef struct TransimPrediction {
  double total_time_sec;
  double speed_steps_per_sec;
  double expected_revocations;
  uint64_t checkpoint_count;
  double compute_sec;
  double checkpoint_sec;
  double revocation_sec;
} TransimPrediction;

typedef struct TransimSimSummary {
  double total_time_sec;
  uint64_t completed_steps;
  uint32_t revocation_count;
  uint32_t replacement_count;
  uint32_t checkpoint_count;
  double compute_sec;
  double checkpoint_sec;
  double waiting_sec;
  double recomputed_steps;
} TransimSimSummary;

typedef struct TransimAlert {
  double detected_at_sec;
  double predicted_speed;
  double measured_speed;
  double deficit_fraction;
  enum TransimClassification classification;
  /**
   * -1 unless the alert names a straggler.
   */
  int64_t straggler_slot;
} TransimAlert;

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *transim_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *transim_version(void);

/**
 * Loads and verifies a bundle file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TransimStatus transim_bundle_load(const char *path, struct TransimBundle **out);

/**
 * Parses and verifies a bundle from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TransimStatus transim_bundle_from_json(const char *json, struct TransimBundle **out);

/**
 * # Safety
 * `bundle` must come from a bundle constructor and not be freed twice.
 */
void transim_bundle_free(struct TransimBundle *bundle);

/**
 * Closed-form training-time prediction for a TOML scenario.
 *
 * # Safety
 * Pointers must be valid; `scenario_toml` NUL-terminated.
 */
enum TransimStatus transim_predict(const struct TransimBundle *bundle,
                                   const char *scenario_toml,
                                   struct TransimPrediction *out);

/**
 * One simulation run of a TOML scenario with `seed` in place of the
 * scenario seed.
 *
 * # Safety
 * Pointers must be valid; `scenario_toml` NUL-terminated.
 */
enum TransimStatus transim_simulate(const struct TransimBundle *bundle,
                                    const char *scenario_toml,
                                    uint64_t seed,
                                    struct TransimSimSummary *out);

/**
 * Probability that a server of (`gpu`, `region`) is revoked within
 * `duration_sec`.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum TransimStatus transim_prob_revoked_within(const struct TransimBundle *bundle,
                                               const char *gpu,
                                               const char *region,
                                               double duration_sec,
                                               double *out);

/**
 * min(Σ speeds, ps_count × cap); pass an infinite `cap_per_ps` for no cap.
 *
 * # Safety
 * `speeds` must point to `n` doubles and `out` be valid.
 */
enum TransimStatus transim_predict_cluster_speed(const double *speeds,
                                                 size_t n,
                                                 uint32_t ps_count,
                                                 double cap_per_ps,
                                                 double *out);

/**
 * Creates a detector. `worker_predicted` may be null when `n_workers` is 0,
 * which disables classification.
 *
 * # Safety
 * `worker_predicted` must point to `n_workers` doubles and `out` be valid.
 */
enum TransimStatus transim_detector_new(double predicted_speed,
                                        const double *worker_predicted,
                                        size_t n_workers,
                                        double threshold,
                                        double warmup_sec,
                                        bool running_mean,
                                        struct TransimDetector **out);

/**
 * Feeds one speed window. `worker_speeds` holds one entry per worker slot
 * (NaN for an unmeasured slot) or is null with `n` 0. `*alerted` tells
 * whether `*alert` was written.
 *
 * # Safety
 * `detector` must be live; other pointers valid for their lengths.
 */
enum TransimStatus transim_detector_observe(struct TransimDetector *detector,
                                            double end_time_sec,
                                            double steps_per_sec,
                                            const double *worker_speeds,
                                            size_t n,
                                            struct TransimAlert *alert,
                                            bool *alerted);

/**
 * # Safety
 * `detector` must come from [`transim_detector_new`] and not be freed twice.
 */
void transim_detector_free(struct TransimDetector *detector);

#endif  /* TRANSIM_H */
