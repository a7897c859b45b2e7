#ifndef TWR_H
#define TWR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TwrStatus {
  TWR_STATUS_OK = 0,
  TWR_STATUS_NULL_POINTER = 1,
  TWR_STATUS_INVALID_ARGUMENT = 2,
  TWR_STATUS_PARSE_ERROR = 3,
  TWR_STATUS_IO_ERROR = 4,
  TWR_STATUS_INTEGRITY_ERROR = 5,
  TWR_STATUS_NOT_FOUND = 6,
  TWR_STATUS_TEMPLATE_ERROR = 7,
  TWR_STATUS_PANIC = 8,
} TwrStatus;

typedef enum TwrAxisRule {
  TWR_AXIS_RULE_MEAN = 0,
  TWR_AXIS_RULE_MIN = 1,
  TWR_AXIS_RULE_ALL_AXES = 2,
} TwrAxisRule;

typedef enum TwrGestureKind {
  TWR_GESTURE_KIND_USER_DEPENDENT_TAP = 0,
  TWR_GESTURE_KIND_USER_INDEPENDENT_PROX = 1,
  TWR_GESTURE_KIND_UNPROTECTED = 2,
} TwrGestureKind;

typedef enum TwrOutcome {
  TWR_OUTCOME_FORWARD = 0,
  TWR_OUTCOME_REJECT = 1,
} TwrOutcome;

typedef enum TwrReason {
  TWR_REASON_GESTURE_MATCHED = 0,
  TWR_REASON_WITHIN_UNLOCK_WINDOW = 1,
  TWR_REASON_NO_GESTURE = 2,
  TWR_REASON_TEMPLATE_MISSING = 3,
  TWR_REASON_UNPROTECTED = 4,
} TwrReason;

// Policies and templates.
typedef struct TwrDatabase TwrDatabase;

// One proximity gesture detector with its configuration.
typedef struct TwrProxDetector TwrProxDetector;

typedef struct TwrMatch {
  double score;
  bool matched;
} TwrMatch;

// Half-open unlock window `[start_ms, end_ms)`.
typedef struct TwrUnlockWindow {
  uint64_t start_ms;
  uint64_t end_ms;
} TwrUnlockWindow;

typedef struct TwrDecision {
  enum TwrOutcome outcome;
  enum TwrReason reason;
  // False when no template score applies; `score` is then 0.
  bool has_score;
  double score;
} TwrDecision;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or NULL if none.
// The pointer stays valid until the next failing call on this thread.
const char *twr_last_error(void);

// Pearson correlation of two series of `len` values.
//
// # Safety
// `a` and `b` must point to `len` readable doubles; `out` must be writable.
enum TwrStatus twr_pearson(const double *a, const double *b, size_t len, double *out);

// New empty database. Never returns NULL.
struct TwrDatabase *twr_database_new(void);

// # Safety
// `path` must be a valid string; `out` must be writable. On success `*out`
// receives a handle to release with [`twr_database_free`].
enum TwrStatus twr_database_load(const char *path, struct TwrDatabase **out);

// # Safety
// `db` must be a live handle and `path` a valid string.
enum TwrStatus twr_database_save(const struct TwrDatabase *db, const char *path);

// # Safety
// `db` must be NULL or a handle not yet freed.
void twr_database_free(struct TwrDatabase *db);

// Trains a template from `count` accelerometer trace texts and stores it
// under `id`, replacing any previous template with that id.
//
// # Safety
// `traces` must point to `count` valid strings; `threshold_out` may be NULL.
enum TwrStatus twr_database_create_template(struct TwrDatabase *db,
                                            const char *id,
                                            const char *const *traces,
                                            size_t count,
                                            size_t n,
                                            enum TwrAxisRule rule,
                                            double *threshold_out);

// Adds or replaces the policy for `service`. `template_id` may be NULL for
// non-tap kinds.
//
// # Safety
// Pointers must be valid as documented.
enum TwrStatus twr_database_add_policy(struct TwrDatabase *db,
                                       const char *service,
                                       enum TwrGestureKind kind,
                                       const char *template_id,
                                       uint64_t capture_window_ms);

// # Safety
// Pointers must be valid; `removed` may be NULL.
enum TwrStatus twr_database_remove_policy(struct TwrDatabase *db,
                                          const char *service,
                                          bool *removed);

// Fails with `INTEGRITY_ERROR` while a policy still refers to the template.
//
// # Safety
// Pointers must be valid; `removed` may be NULL.
enum TwrStatus twr_database_remove_template(struct TwrDatabase *db, const char *id, bool *removed);

// Number of registered policies.
//
// # Safety
// `db` must be a live handle or NULL (which yields 0).
size_t twr_database_policy_count(const struct TwrDatabase *db);

// Matches a whole accelerometer trace against template `id`.
//
// # Safety
// Pointers must be valid.
enum TwrStatus twr_match(const struct TwrDatabase *db,
                         const char *id,
                         const char *trace,
                         struct TwrMatch *out);

// New detector. Pass zeros to use the defaults (6 changes, 1500 ms, 1000 ms).
//
// # Safety
// `out` must be writable; on success it receives a handle to release with
// [`twr_prox_detector_free`].
enum TwrStatus twr_prox_detector_new(size_t wind_sz,
                                     uint64_t wave_time_limit_ms,
                                     uint64_t unlock_time_frame_ms,
                                     struct TwrProxDetector **out);

// # Safety
// `det` must be NULL or a handle not yet freed.
void twr_prox_detector_free(struct TwrProxDetector *det);

// Feeds one proximity change at `t_ms`. When it opens or extends an unlock
// window, `*unlocked` is set and `*window` (may be NULL) receives it.
//
// # Safety
// `det` must be a live handle; `unlocked` must be writable.
enum TwrStatus twr_prox_detector_on_change(struct TwrProxDetector *det,
                                           uint64_t t_ms,
                                           bool *unlocked,
                                           struct TwrUnlockWindow *window);

// # Safety
// `det` must be a live handle or NULL (which yields false).
bool twr_prox_detector_is_unlocked(const struct TwrProxDetector *det, uint64_t t_ms);

// Decides one access request.
//
// `det` may be NULL (no proximity gestures seen). `accel` is the recent
// accelerometer stream as text and may be NULL. `wait_forward_ms` extends
// the tap capture past the request time; 0 disables it.
//
// # Safety
// Pointers must be valid as documented.
enum TwrStatus twr_check_permission(const struct TwrDatabase *db,
                                    const struct TwrProxDetector *det,
                                    const char *app_id,
                                    const char *service,
                                    uint64_t t_ms,
                                    const char *accel,
                                    uint64_t wait_forward_ms,
                                    struct TwrDecision *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TWR_H */
