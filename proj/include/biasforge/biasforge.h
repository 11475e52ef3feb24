/* C interface to the biasforge library. All functions return a bf_status;
 * on failure bf_last_error() describes the problem for the calling thread. */
#ifndef BIASFORGE_H
#define BIASFORGE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define BF_API __declspec(dllexport)
#else
#  define BF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as process exit codes. */
typedef enum bf_status {
  BF_OK = 0,
  BF_ERR_INTERNAL = 1,
  BF_ERR_CONFIG = 2, /* config or data error */
  BF_ERR_IO = 3,
  BF_NOT_CONVERGED = 4,
  BF_ERR_DEGENERATE = 5
} bf_status;

typedef struct bf_params bf_params;
typedef struct bf_dataset bf_dataset;

BF_API const char* bf_version(void);
BF_API const char* bf_last_error(void);

/* 0 restores the default (BIASFORGE_THREADS or hardware concurrency). */
BF_API void bf_set_threads(size_t n);

/* Strings returned through char** are owned by the caller. */
BF_API void bf_string_free(char* s);

/* Evaluator parameters. */
BF_API bf_status bf_params_preset(const char* name, bf_params** out);
BF_API bf_status bf_params_load(const char* path, bf_params** out);
BF_API bf_status bf_params_from_json(const char* json, bf_params** out);
BF_API bf_status bf_params_to_json(const bf_params* p, char** json_out);
BF_API bf_status bf_params_get(const bf_params* p, const char* name, double* value);
BF_API bf_status bf_params_set(bf_params* p, const char* name, double value);
BF_API void bf_params_free(bf_params* p);

/* Full-sample datasets. */
BF_API bf_status bf_dataset_generate(const char* world_config_json, bf_dataset** out);
BF_API bf_status bf_dataset_load(const char* dir, bf_dataset** out);
BF_API bf_status bf_dataset_save(const bf_dataset* d, const char* dir);
BF_API size_t bf_dataset_applicant_count(const bf_dataset* d);
BF_API size_t bf_dataset_application_count(const bf_dataset* d);
BF_API void bf_dataset_free(bf_dataset* d);

/* scenario: baseline | pref0 | belief0 | both0 | grid. Report JSON as
 * written by the counterfact command. */
BF_API bf_status bf_scenario_report(const bf_dataset* d, const bf_params* p, const char* scenario,
                                    char** json_out);

/* Weighted-sum belief mean after one revision; for quick checks. */
BF_API bf_status bf_update_belief(const bf_params* p, double prior_mean, const double signals[4],
                                  double* posterior_mean);

/* Commands. seed is applied only when has_seed is nonzero. */
BF_API bf_status bf_run_generate(const char* config_path, const char* out_dir, int has_seed,
                                 uint64_t seed);
BF_API bf_status bf_run_estimate(const char* data_dir, const char* config_path,
                                 const char* out_path, int has_seed, uint64_t seed);
BF_API bf_status bf_run_counterfact(const char* data_dir, const char* params_path,
                                    const char* out_dir, const char* scenario,
                                    const char* convention, int has_seed, uint64_t seed);
BF_API bf_status bf_run_ml_audit(const char* data_dir, const char* params_path,
                                 const char* audit_config_path, const char* out_dir, int has_seed,
                                 uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif /* BIASFORGE_H */
