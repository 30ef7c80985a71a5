/* qwatch: quantized-transition anomaly detection for multivariate series.
 *
 * Every function returns a qw_status. On failure the message is available
 * from qw_last_error() on the same thread until the next call. Strings
 * returned through char** are owned by the caller and released with
 * qw_string_free(). Handles are released with their *_free function; passing
 * NULL to a free function is a no-op.
 */
#ifndef QWATCH_H
#define QWATCH_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define QW_API __declspec(dllexport)
#else
#define QW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qw_status {
  QW_OK = 0,
  QW_ERR_INVALID_ARGUMENT = 1,
  QW_ERR_IO = 2,
  QW_ERR_FORMAT = 3,
  QW_ERR_VERSION_MISMATCH = 4,
  QW_ERR_RUNTIME = 5,
  QW_ERR_CONFLICT = 6,
  QW_ERR_NOT_FOUND = 7,
  QW_ERR_INTERNAL = 8
} qw_status;

typedef struct qw_frame qw_frame;
typedef struct qw_model qw_model;
typedef struct qw_scores qw_scores;
typedef struct qw_service qw_service;

QW_API const char* qw_last_error(void);
QW_API const char* qw_status_name(qw_status status);
QW_API const char* qw_version_string(void);
QW_API void qw_string_free(char* s);

/* ---- frames ---- */

/* values is sensor-major: values[s * length + t]. labels may be NULL. */
QW_API qw_status qw_frame_create(size_t sensor_count, const char* const* names, size_t length,
                                 const double* timestamps, const double* values, const int* labels,
                                 qw_frame** out);
/* sensors may be NULL to take every column except timestamp/label. */
QW_API qw_status qw_frame_load_csv(const char* path, const char* const* sensors, size_t sensor_count,
                                   qw_frame** out);
QW_API qw_status qw_frame_save_csv(const qw_frame* frame, const char* path);
QW_API size_t qw_frame_length(const qw_frame* frame);
QW_API size_t qw_frame_sensor_count(const qw_frame* frame);
/* Borrowed pointer, valid while the frame lives. */
QW_API qw_status qw_frame_column(const qw_frame* frame, size_t sensor, const double** data);
/* QW_ERR_NOT_FOUND when the frame carries no labels. */
QW_API qw_status qw_frame_labels(const qw_frame* frame, const int** data);
/* {"length", "sensors", "labeled", "intervals"} */
QW_API qw_status qw_frame_describe(const qw_frame* frame, char** json);
QW_API void qw_frame_free(qw_frame* frame);

/* ---- simulators ---- */

typedef struct qw_lorentz_options {
  uint64_t seed;
  size_t steps_per_interval; /* default 60000 */
  size_t burn_in;            /* default 1000 */
  double dt;                 /* default 0.01 */
} qw_lorentz_options;

typedef struct qw_etc_options {
  uint64_t seed;
  double run_seconds; /* default 3600 */
  double tau;         /* default 0.02 */
  size_t substeps;    /* default 20 */
} qw_etc_options;

QW_API void qw_lorentz_options_init(qw_lorentz_options* options);
QW_API void qw_etc_options_init(qw_etc_options* options);

/* metadata (JSON) and trace (per-sample parameter ratios) are optional. */
QW_API qw_status qw_generate_lorentz(const qw_lorentz_options* options, qw_frame** frame, char** metadata,
                                     qw_frame** trace);
QW_API qw_status qw_generate_etc(const qw_etc_options* options, qw_frame** frame, char** metadata,
                                 qw_frame** trace);

/* ---- model ---- */

typedef struct qw_fit_options {
  int n_q;                  /* default 8 */
  int delta;                /* default 20 */
  double eta;               /* default 0.95 */
  int n_w;                  /* K-Means cap per transition, 0 = off */
  const char* bounds;       /* "minmax" (default) or "percentile" */
  double bounds_percentile; /* default 0.1 (percent) */
  const char* scaler;       /* "standard" (default) or "minmax" */
  /* Training rows [train_begin, train_end). train_end == 0 selects the
     leading run of label-0 rows of a labeled frame, else the whole frame. */
  size_t train_begin;
  size_t train_end;
  /* training normalizers stored with the model */
  size_t n_pred;  /* default 100 */
  double epsilon; /* default 1 */
  size_t jobs;    /* 0 = all cores */
} qw_fit_options;

QW_API void qw_fit_options_init(qw_fit_options* options);
QW_API qw_status qw_model_fit(const qw_frame* frame, const qw_fit_options* options, qw_model** out);
QW_API qw_status qw_model_load(const char* path, qw_model** out);
QW_API qw_status qw_model_save(const qw_model* model, const char* path);
QW_API qw_status qw_model_version(const qw_model* model, uint64_t* version);
/* Hyper-parameters, per-sensor NP cardinalities, normalizers. */
QW_API qw_status qw_model_describe(const qw_model* model, char** json);
QW_API void qw_model_free(qw_model* model);

/* ---- scoring ---- */

typedef struct qw_score_options {
  size_t n_pred;           /* default 100 */
  size_t stride;           /* default 1 */
  double epsilon;          /* default 1 */
  const char* rtrans_norm; /* "per_window" (default) or "raw_count" */
  size_t jobs;             /* 0 = all cores */
} qw_score_options;

QW_API void qw_score_options_init(qw_score_options* options);
/* Uses the model's normalizers when they match n_pred/epsilon, otherwise
   calibrates on the model's training rows of `frame`. */
QW_API qw_status qw_score(const qw_model* model, const qw_frame* frame, const qw_score_options* options,
                          qw_scores** out);
QW_API size_t qw_scores_window_count(const qw_scores* scores);
QW_API qw_status qw_scores_window(const qw_scores* scores, size_t k, size_t* start, double* aggregated);
QW_API qw_status qw_scores_residuals(const qw_scores* scores, size_t k, size_t sensor, double* r_trans,
                                     double* r_bound, double* r_conf);
/* out must hold `length` doubles. */
QW_API qw_status qw_scores_per_timestamp(const qw_scores* scores, size_t length, double* out);
QW_API qw_status qw_scores_save_csv(const qw_scores* scores, const char* path);
QW_API void qw_scores_free(qw_scores* scores);

/* ---- feedback ---- */

/* One event as JSON: {"window": [begin, end], "verdict": "normal"|"anomalous",
   "zeta": 0.99, "note": ""}. */
QW_API qw_status qw_feedback_apply(const qw_model* model, const qw_frame* frame, const char* event_json,
                                   qw_model** out);
/* The file holds one event, a JSON array of events, or a journal (one JSON
   record per line) to replay. journal_path/snapshot_dir may be NULL. */
QW_API qw_status qw_feedback_apply_file(const qw_model* model, const qw_frame* frame, const char* path,
                                        const char* journal_path, const char* snapshot_dir, qw_model** out);

/* ---- evaluation ---- */

typedef struct qw_eval_options {
  const size_t* smoothing; /* NULL = {1, 500, 1000, 5000} */
  size_t smoothing_count;
  double max_fpr;  /* default 0.1 */
  int pauc_raw;    /* 0 = McClish-standardized pAUC */
} qw_eval_options;

QW_API void qw_eval_options_init(qw_eval_options* options);
QW_API qw_status qw_metrics(const double* scores, const int* labels, size_t n, double max_fpr, double* roc_auc,
                            double* pauc, double* f1, double* f1_threshold);
/* CSV: source,smoothing,roc_auc,pauc,f1_best,f1_threshold */
QW_API qw_status qw_evaluate(const qw_scores* scores, const qw_frame* frame, const qw_eval_options* options,
                             char** metrics_csv);
/* External per-timestamp scores (see README for the accepted layouts). */
QW_API qw_status qw_evaluate_file(const char* scores_path, const char* source, size_t n_pred, const qw_frame* frame,
                                  const qw_eval_options* options, char** metrics_csv);

typedef struct qw_sweep_options {
  const int* n_q;
  size_t n_q_count;
  const int* delta;
  size_t delta_count;
  const double* eta;
  size_t eta_count;
  const double* epsilon;
  size_t epsilon_count;
  const int* n_w; /* 0 entries mean K-Means off */
  size_t n_w_count;
  const size_t* n_pred;
  size_t n_pred_count;
  size_t train_begin;
  size_t train_end; /* 0: as in qw_fit_options */
  double max_fpr;
  size_t jobs;
} qw_sweep_options;

QW_API void qw_sweep_options_init(qw_sweep_options* options);
QW_API qw_status qw_sweep(const qw_frame* frame, const qw_sweep_options* options, char** results_csv,
                          char** summary);

/* ---- service ---- */

typedef struct qw_serve_options {
  const char* host; /* default 127.0.0.1 */
  int port;         /* default 8080, 0 = any free port */
  const char* static_dir;
  const char* journal_path;
  const char* snapshot_dir;
  size_t n_pred; /* default 100 */
  size_t stride; /* default 1 */
  double epsilon;
  size_t cache_entries; /* default 16 */
} qw_serve_options;

QW_API void qw_serve_options_init(qw_serve_options* options);
QW_API qw_status qw_service_create(const qw_model* model, const qw_frame* frame, const qw_serve_options* options,
                                   qw_service** out);
/* Binds the socket and reports the port. */
QW_API qw_status qw_service_bind(qw_service* service, int* port);
/* Blocks until qw_service_stop() from another thread. */
QW_API qw_status qw_service_run(qw_service* service);
/* bind + run on a background thread. */
QW_API qw_status qw_service_start(qw_service* service, int* port);
QW_API void qw_service_stop(qw_service* service);
QW_API void qw_service_free(qw_service* service);

#ifdef __cplusplus
}
#endif

#endif /* QWATCH_H */
