#ifndef THUMBTRAK_H
#define THUMBTRAK_H

/* C interface to the thumbtrak library.
 *
 * Every fallible call returns a tt_status. On failure, tt_last_error()
 * describes the problem until the next call on the same thread. Handles are
 * opaque and released with their *_free function; passing NULL to a free
 * function is a no-op. Strings returned by the library stay valid until the
 * owning handle is freed (or, for tt_last_error, until the next call).
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TT_API __declspec(dllexport)
#else
#define TT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tt_status {
  TT_OK = 0,
  TT_ERR_INPUT = 1,     /* argument outside an operation's domain */
  TT_ERR_CONFIG = 2,    /* invalid hand or rig configuration */
  TT_ERR_TRAINING = 3,  /* a classifier could not be fitted */
  TT_ERR_DIMENSION = 4, /* model and features disagree on dimension */
  TT_ERR_PARSE = 5,     /* malformed dataset, model or message */
  TT_ERR_VERSION = 6,   /* unknown file format version */
  TT_ERR_IO = 7,        /* file or socket failure */
  TT_ERR_INTERNAL = 8
} tt_status;

#define TT_SENSOR_COUNT 9
#define TT_POSE_COUNT 12
#define TT_NO_POSE 12      /* label id of the resting state */
#define TT_NO_TARGET (-1.0) /* raw reading with nothing in the beam */

TT_API const char *tt_version(void);
TT_API const char *tt_last_error(void);
TT_API const char *tt_status_name(tt_status status);

/* Process exit code for a status: 0 success, 2 I/O failure, 1 otherwise. */
TT_API int tt_exit_code(tt_status status);

/* Pose ids 0..11 in grid order (index-distal .. little-proximal), 12 for no-pose. */
TT_API const char *tt_pose_name(int pose);
TT_API int tt_pose_from_name(const char *name); /* -1 when unknown */

/* ---- simulation ------------------------------------------------------- */

typedef struct tt_simulate_options {
  int users;
  int train_sessions;
  int test_sessions;  /* per condition */
  int cross_session;  /* nonzero: remount, uncalibrated and calibrated tests */
  uint64_t seed;
  double noise_mm;    /* reading noise sigma */
  double dropout;     /* probability a reading is lost */
  const char *config; /* hand config JSON path, NULL for the built-in one */
} tt_simulate_options;

TT_API void tt_simulate_options_init(tt_simulate_options *options);

/* Writes <out_dir>/<user>/<session>.jsonl for every simulated session. */
TT_API tt_status tt_simulate(const tt_simulate_options *options, const char *out_dir);

/* ---- training --------------------------------------------------------- */

typedef struct tt_train_options {
  const char *channels;  /* sensors like "1-9" or "1,2,4-6"; NULL for all */
  const char *classes;   /* "all", "dpad" or "corners"; NULL for all */
  int train_sessions;    /* use the first n; 0 for all */
  double c;              /* SVM cost */
  uint64_t seed;         /* coordinate order */
  int shuffle_labels;    /* nonzero: permute pose labels (chance control) */
} tt_train_options;

TT_API void tt_train_options_init(tt_train_options *options);

typedef struct tt_model tt_model;

/* Trains one model per user and writes <models_dir>/<user>.json. */
TT_API tt_status tt_train(const char *dataset_dir, const tt_train_options *options, const char *models_dir);

TT_API tt_status tt_model_load(const char *path, tt_model **out);
TT_API tt_status tt_model_save(const tt_model *model, const char *path);
TT_API void tt_model_free(tt_model *model);
TT_API size_t tt_model_feature_dim(const tt_model *model);

/* Per-frame decision on raw readings: *pose is a pose id, or -1 when the
 * segmenter sees no pose. */
TT_API tt_status tt_model_decide(const tt_model *model, const double raw[TT_SENSOR_COUNT], int *pose);

/* ---- streaming recognition -------------------------------------------- */

typedef struct tt_recognizer tt_recognizer;

typedef struct tt_event {
  int pose;
  int64_t t_ms;
  int tally[TT_POSE_COUNT]; /* votes behind the decision */
} tt_event;

TT_API tt_status tt_recognizer_new(const tt_model *model, tt_recognizer **out);
TT_API void tt_recognizer_free(tt_recognizer *recognizer);
TT_API void tt_recognizer_reset(tt_recognizer *recognizer);

/* Feeds one frame. *emitted is set to 1 and *event filled when a gesture
 * event fires on this frame, otherwise *emitted is 0. */
TT_API tt_status tt_recognizer_push(tt_recognizer *recognizer, const double raw[TT_SENSOR_COUNT], int64_t t_ms,
                                    tt_event *event, int *emitted);

/* ---- analyses --------------------------------------------------------- */

typedef struct tt_report tt_report;

/* Condition is "in-session", "uncalibrated" or "calibrated". models is a
 * directory of per-user models or a single model file used for every user. */
TT_API tt_status tt_evaluate(const char *dataset_dir, const char *models, const char *condition, tt_report **out);

/* mode "exclude": drop each sensor in turn; "groups": S5, S4-6 .. S1-9. */
TT_API tt_status tt_ablate(const char *dataset_dir, const char *mode, const tt_train_options *options,
                           tt_report **out);

/* Trains on the first 1, 2, .. n training sessions. */
TT_API tt_status tt_reduce_train(const char *dataset_dir, int max_sessions, const tt_train_options *options,
                                 tt_report **out);

/* Pose subset "dpad", "corners" or "all"; cross_session uses the calibrated tests. */
TT_API tt_status tt_subsets(const char *dataset_dir, const char *name, int cross_session,
                            const tt_train_options *options, tt_report **out);

/* Compares two calibration captures (dataset session files). */
TT_API tt_status tt_calibrate(const char *reference_capture, const char *current_capture, tt_report **out);

TT_API void tt_report_free(tt_report *report);

/* Human-readable summary. */
TT_API const char *tt_report_text(const tt_report *report);

/* CSV table by name ("confusion", "outcomes", "ablation", "reduction",
 * "offsets"); NULL when the report has no such table. */
TT_API const char *tt_report_csv(const tt_report *report, const char *table);

/* Named number such as "accuracy", "baseline", "average_offset_mm", "pass".
 * TT_ERR_INPUT when the report has no such metric. */
TT_API tt_status tt_report_metric(const tt_report *report, const char *name, double *value);

TT_API size_t tt_report_entry_count(const tt_report *report);
TT_API tt_status tt_report_entry(const tt_report *report, size_t index, const char **name, double *accuracy);

/* ---- interactive service ---------------------------------------------- */

typedef struct tt_serve_options {
  const char *host;
  int port;          /* 0 picks a free port */
  double speed;      /* frame clock multiplier */
  int max_clients;   /* 0: serve until interrupted */
  const char *model; /* NULL: train on the simulated user's own sessions */
  const char *replay; /* session file to replay instead of live frames */
  int user;          /* simulated participant index */
  uint64_t seed;
  const char *config; /* hand config JSON path, NULL for the built-in one */
  void (*on_listen)(int port, void *context);
  void *context;
} tt_serve_options;

TT_API void tt_serve_options_init(tt_serve_options *options);

/* Blocks until max_clients sessions ended or tt_serve_stop() is called. */
TT_API tt_status tt_serve(const tt_serve_options *options);
TT_API void tt_serve_stop(void);

#ifdef __cplusplus
}
#endif

#endif
