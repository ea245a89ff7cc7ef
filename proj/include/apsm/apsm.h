/*
 * C interface to the APSM MIMO detection library.
 *
 * All objects are opaque handles created by a *_create / *_generate / *_load
 * function and released with the matching *_free function. Every fallible
 * call returns an apsm_status; on failure a one-line description is available
 * from apsm_last_error() on the calling thread until the next failing call.
 * Strings returned through char** out-parameters are owned by the caller and
 * must be released with apsm_string_free().
 */
#ifndef APSM_APSM_H
#define APSM_APSM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(APSM_BUILDING_LIBRARY)
#    define APSM_API __declspec(dllexport)
#  else
#    define APSM_API __declspec(dllimport)
#  endif
#else
#  define APSM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum apsm_status {
  APSM_OK = 0,
  APSM_ERR_INVALID_ARGUMENT = 1, /* rejected configuration or argument */
  APSM_ERR_DIMENSION = 2,        /* inconsistent vector/matrix sizes */
  APSM_ERR_NON_FINITE = 3,       /* NaN or Inf produced during iteration */
  APSM_ERR_BUDGET = 4,           /* brute-force search over its candidate budget */
  APSM_ERR_SOLVER = 5,           /* linear solve failed */
  APSM_ERR_IO = 6,
  APSM_ERR_PARSE = 7,            /* malformed JSON */
  APSM_ERR_INTERNAL = 8
} apsm_status;

typedef enum apsm_format { APSM_FORMAT_CSV = 0, APSM_FORMAT_JSON = 1 } apsm_format;

typedef struct apsm_experiment apsm_experiment;
typedef struct apsm_table apsm_table;
typedef struct apsm_instance apsm_instance;
typedef struct apsm_detection apsm_detection;

/* One SER table row. String members stay valid while the table lives. */
typedef struct apsm_table_row {
  const char* detector;
  const char* x_kind; /* "iter" or "snr_db" */
  double x_value;
  int64_t errors;
  int64_t symbols;
  double ser;
} apsm_table_row;

typedef struct apsm_suite_result {
  const char* name; /* static storage */
  int64_t checks;
  int64_t failures;
  double max_excess;
} apsm_suite_result;

APSM_API const char* apsm_version(void);
APSM_API const char* apsm_status_string(apsm_status status);
APSM_API const char* apsm_last_error(void);
APSM_API void apsm_string_free(char* str);

/* Experiment configuration, parsed from a JSON object. Missing keys take
 * their defaults (K=16, N=64, 16-QAM, i.i.d. channel, 9 dB, 300 iterations);
 * unknown keys are rejected. */
APSM_API apsm_status apsm_experiment_create(const char* config_json, apsm_experiment** out);
APSM_API void apsm_experiment_free(apsm_experiment* exp);
/* Fully resolved configuration as JSON. */
APSM_API apsm_status apsm_experiment_to_json(const apsm_experiment* exp, char** out);
/* 0 selects the hardware concurrency. Results do not depend on this value. */
APSM_API apsm_status apsm_experiment_set_workers(apsm_experiment* exp, unsigned workers);

APSM_API apsm_status apsm_run_ser_vs_iter(const apsm_experiment* exp, apsm_table** out);
APSM_API apsm_status apsm_run_ser_vs_snr(const apsm_experiment* exp, apsm_table** out);

APSM_API size_t apsm_table_size(const apsm_table* table);
APSM_API apsm_status apsm_table_get_row(const apsm_table* table, size_t index, apsm_table_row* out);
APSM_API apsm_status apsm_table_to_string(const apsm_table* table, apsm_format format, int include_stderr,
                                          char** out);
APSM_API apsm_status apsm_table_write(const apsm_table* table, const char* path, apsm_format format,
                                      int include_stderr);
APSM_API apsm_status apsm_table_read_json(const char* path, apsm_table** out);
APSM_API void apsm_table_free(apsm_table* table);

/* Channel instance for one trial of an experiment at the given SNR; the
 * draw is identical to the one the experiment runners use for that trial. */
APSM_API apsm_status apsm_instance_generate(const apsm_experiment* exp, uint64_t trial, double snr_db,
                                            apsm_instance** out);
APSM_API apsm_status apsm_instance_load_json(const char* path, apsm_instance** out);
APSM_API apsm_status apsm_instance_save_json(const apsm_instance* inst, const char* path);
APSM_API apsm_status apsm_instance_dims(const apsm_instance* inst, size_t* n_rx, size_t* k_tx);
APSM_API apsm_status apsm_instance_transmit(const apsm_instance* inst, const double** data, size_t* len);
APSM_API void apsm_instance_free(apsm_instance* inst);

/* Runs one detector ("apsm_plain", "apsm_l2", "apsm_l1", "lmmse",
 * "constrained_lmmse", "box_oracle", "ml_bruteforce") on an instance using
 * the experiment's modulation and APSM parameters. With record_iterates set,
 * APSM detections keep every iterate so a diagnostic report can be built. */
APSM_API apsm_status apsm_detect(const apsm_experiment* exp, const apsm_instance* inst, const char* detector,
                                 int record_iterates, apsm_detection** out);
APSM_API apsm_status apsm_detection_estimate(const apsm_detection* det, const double** data, size_t* len);
APSM_API apsm_status apsm_detection_symbol_errors(const apsm_detection* det, int64_t* out);
APSM_API apsm_status apsm_detection_objective(const apsm_detection* det, double* out);
APSM_API int apsm_detection_has_trace(const apsm_detection* det);
/* Columns: n,theta,objective,rho,step_norm,pert_norm. */
APSM_API apsm_status apsm_detection_write_trace_csv(const apsm_detection* det, const char* path);
/* Diagnostic report against the transmitted vector; needs record_iterates. */
APSM_API apsm_status apsm_detection_report_json(const apsm_detection* det, char** out);
APSM_API void apsm_detection_free(apsm_detection* det);

/* Runs the randomized invariant suites. `results` receives up to `capacity`
 * entries; `count` receives the number of suites. */
APSM_API apsm_status apsm_validate(uint64_t seed, long scale, apsm_suite_result* results, size_t capacity,
                                   size_t* count);

#ifdef __cplusplus
}
#endif

#endif /* APSM_APSM_H */
