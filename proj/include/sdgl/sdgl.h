#ifndef SDGL_SDGL_H
#define SDGL_SDGL_H

/* C interface to the forecaster. Every function returns an sdgl_status; on
 * failure sdgl_last_error() describes the problem for the calling thread.
 * Handles are opaque and must be released with the matching *_free call.
 * Matrices are dense row-major doubles. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SDGL_BUILDING)
#    define SDGL_API __declspec(dllexport)
#  else
#    define SDGL_API __declspec(dllimport)
#  endif
#else
#  define SDGL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sdgl_status {
  SDGL_OK = 0,
  SDGL_ERR_ARGUMENT = 1,   /* null handle, bad index, buffer too small */
  SDGL_ERR_CONFIG = 2,     /* invalid configuration or spec */
  SDGL_ERR_DIMENSION = 3,  /* shape mismatch */
  SDGL_ERR_PARSE = 4,      /* malformed CSV, config text or checkpoint */
  SDGL_ERR_IO = 5,         /* missing or unwritable file */
  SDGL_ERR_NUMERIC = 6,    /* non-finite values, unstable generator */
  SDGL_ERR_TRAINING = 7,   /* divergence during training */
  SDGL_ERR_STATE = 8,      /* operation not valid for this object */
  SDGL_ERR_INTERNAL = 9
} sdgl_status;

typedef struct sdgl_dataset sdgl_dataset;
typedef struct sdgl_config sdgl_config;
typedef struct sdgl_model sdgl_model;
typedef struct sdgl_synth sdgl_synth;

SDGL_API const char* sdgl_last_error(void);
SDGL_API const char* sdgl_status_name(sdgl_status status);
SDGL_API const char* sdgl_version(void);

/* Datasets */
SDGL_API sdgl_status sdgl_dataset_load_csv(const char* path, sdgl_dataset** out);
SDGL_API sdgl_status sdgl_dataset_from_values(const double* values, size_t steps, size_t nodes,
                                              sdgl_dataset** out);
SDGL_API sdgl_status sdgl_dataset_save_csv(const sdgl_dataset* ds, const char* path);
SDGL_API sdgl_status sdgl_dataset_shape(const sdgl_dataset* ds, size_t* steps, size_t* nodes);
/* Copies steps*nodes values, row-major [steps, nodes]. */
SDGL_API sdgl_status sdgl_dataset_values(const sdgl_dataset* ds, double* out, size_t capacity);
SDGL_API void sdgl_dataset_free(sdgl_dataset* ds);

/* Stride-1 window count for a series of `steps` rows. */
SDGL_API size_t sdgl_window_count(size_t steps, size_t window, size_t horizon);

/* Lowercase hex SHA-256 of a file's bytes (65 bytes including NUL). */
SDGL_API sdgl_status sdgl_file_sha256(const char* path, char* out_hex, size_t capacity);

/* Configuration. Keys match the "key = value" text form. */
SDGL_API sdgl_status sdgl_config_new(sdgl_config** out);
SDGL_API sdgl_status sdgl_config_clone(const sdgl_config* cfg, sdgl_config** out);
SDGL_API sdgl_status sdgl_config_set(sdgl_config* cfg, const char* key, const char* value);
SDGL_API sdgl_status sdgl_config_apply_text(sdgl_config* cfg, const char* text);
SDGL_API sdgl_status sdgl_config_validate(const sdgl_config* cfg);
/* Writes the NUL-terminated text form; *needed receives the required size. */
SDGL_API sdgl_status sdgl_config_to_text(const sdgl_config* cfg, char* out, size_t capacity,
                                         size_t* needed);
SDGL_API void sdgl_config_free(sdgl_config* cfg);

/* Synthetic data with a planted graph. */
typedef struct sdgl_synth_spec {
  size_t nodes;
  double edge_prob;
  double alpha;
  double period;
  double amplitude;
  double noise_std;
  size_t switch_every;   /* 0 disables switching */
  size_t switch_length;
  double rewire_fraction;
  int self_loops;
  int random_phase;
} sdgl_synth_spec;

SDGL_API void sdgl_synth_spec_default(sdgl_synth_spec* spec);
SDGL_API sdgl_status sdgl_synth_generate(const sdgl_synth_spec* spec, size_t steps, uint64_t seed,
                                         sdgl_synth** out);
/* Borrowed view, valid until the synth handle is freed. */
SDGL_API const sdgl_dataset* sdgl_synth_dataset(const sdgl_synth* s);
/* which = 0 primary, 1 secondary; copies nodes*nodes binary entries. */
SDGL_API sdgl_status sdgl_synth_truth(const sdgl_synth* s, int which, double* out,
                                      size_t capacity);
SDGL_API size_t sdgl_synth_interval_count(const sdgl_synth* s);
SDGL_API sdgl_status sdgl_synth_interval(const sdgl_synth* s, size_t index, size_t* begin,
                                         size_t* end);
SDGL_API void sdgl_synth_free(sdgl_synth* s);

/* Training */
typedef struct sdgl_epoch_info {
  size_t epoch;
  double train_loss;
  double train_mae;
  double graph_loss;
  int has_validation;
  double val_mae;
  double val_rmse;
  double val_mape; /* NaN when undefined */
} sdgl_epoch_info;

typedef void (*sdgl_epoch_callback)(const sdgl_epoch_info* info, void* user);

SDGL_API sdgl_status sdgl_train(const sdgl_dataset* ds, const sdgl_config* cfg,
                                sdgl_epoch_callback callback, void* user, sdgl_model** out);
SDGL_API sdgl_status sdgl_model_save(const sdgl_model* m, const char* path);
SDGL_API sdgl_status sdgl_model_load(const char* path, sdgl_model** out);
/* Copy of the model's effective configuration. */
SDGL_API sdgl_status sdgl_model_config(const sdgl_model* m, sdgl_config** out);
SDGL_API sdgl_status sdgl_model_dims(const sdgl_model* m, size_t* nodes, size_t* window,
                                     size_t* horizon);
SDGL_API void sdgl_model_free(sdgl_model* m);

/* Forecast [nodes, horizon] from one window [nodes, window], original units. */
SDGL_API sdgl_status sdgl_predict(const sdgl_model* m, const double* window, size_t window_len,
                                  double* out, size_t capacity);

/* Evaluation */
typedef struct sdgl_metrics {
  double mae;
  double rmse;
  double mape;  /* NaN when undefined */
  double rse;   /* NaN when undefined */
  double corr;  /* NaN when undefined */
} sdgl_metrics;

typedef enum sdgl_split {
  SDGL_SPLIT_TRAIN = 0,
  SDGL_SPLIT_VALIDATION = 1,
  SDGL_SPLIT_TEST = 2,
  SDGL_SPLIT_ALL = 3
} sdgl_split;

/* per_horizon receives `horizon` entries; averaged may be NULL. */
SDGL_API sdgl_status sdgl_evaluate(const sdgl_model* m, const sdgl_dataset* ds, sdgl_split split,
                                   sdgl_metrics* per_horizon, size_t capacity,
                                   sdgl_metrics* averaged, size_t* windows);

/* Learned graphs */
SDGL_API sdgl_status sdgl_static_graph(const sdgl_model* m, double* out, size_t capacity);
SDGL_API sdgl_status sdgl_dynamic_graph(const sdgl_model* m, const sdgl_dataset* ds,
                                        size_t window_start, double* out, size_t capacity);

/* AUC of off-diagonal scores against a binary truth; *defined is 0 when the
 * truth has no edges or no non-edges. */
SDGL_API sdgl_status sdgl_recovery_auc(const double* learned, const double* truth, size_t nodes,
                                       double* auc, int* defined);

#ifdef __cplusplus
}
#endif

#endif
