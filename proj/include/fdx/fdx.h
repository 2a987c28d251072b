#ifndef FDX_H
#define FDX_H

/* C interface to the fault-diagnosis pipeline.
 *
 * All pipeline state lives behind an opaque context. Every function that
 * takes a context sets its error message (fdx_last_error) on failure and
 * returns a status code; string arguments may be NULL where a value is
 * optional, and NULL is treated as "not given".
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fdx_status {
  FDX_OK = 0,
  FDX_ERR_RUNTIME = 1,    /* unexpected failure while running a stage */
  FDX_ERR_VALIDATION = 2, /* bad arguments, config, or input semantics */
  FDX_ERR_IO = 3          /* unreadable, unwritable, or corrupt files */
} fdx_status;

typedef struct fdx_context fdx_context;

/* Library version as "major.minor.patch". */
const char* fdx_version(void);

/* Context lifecycle. A fresh context carries the stock configuration. */
fdx_context* fdx_context_new(void);
void fdx_context_free(fdx_context* ctx);

/* Message for the most recent failure on this context; empty after
 * a success. The pointer stays valid until the next call on ctx. */
const char* fdx_last_error(const fdx_context* ctx);

/* Configuration. */
fdx_status fdx_load_config(fdx_context* ctx, const char* path);
fdx_status fdx_set_seed(fdx_context* ctx, uint64_t seed);
/* Applies the FDX_SEED environment variable when it is set. On return
 * *applied is 1 when a seed was installed (written to *value), else 0. */
fdx_status fdx_seed_from_env(fdx_context* ctx, int* applied, uint64_t* value);
fdx_status fdx_set_threads(fdx_context* ctx, int threads);
/* Serializes the active configuration as JSON. Writes up to cap bytes
 * (NUL-terminated) into buf and stores the required size in *needed. */
fdx_status fdx_config_json(fdx_context* ctx, char* buf, size_t cap, size_t* needed);

/* Pipeline stages. Paths are UTF-8; output directories are created. */
fdx_status fdx_simulate(fdx_context* ctx, const char* scenario_path,
                        int has_seed_override, uint64_t seed_override,
                        const char* out_dir);
fdx_status fdx_detect(fdx_context* ctx, const char* raw_dir, const char* scores_out,
                      const char* calibration_out);
fdx_status fdx_preprocess(fdx_context* ctx, const char* scores_path,
                          const char* frames_path, const char* split_path,
                          const char* base_out);
fdx_status fdx_featurize(fdx_context* ctx, const char* base_path,
                         const char* features_out);
fdx_status fdx_train(fdx_context* ctx, const char* features_path,
                     const char* model_name, const char* model_out);
fdx_status fdx_cross_validate(fdx_context* ctx, const char* features_path,
                              const char* scores_path, const char* frames_path,
                              const char* report_json_out, const char* report_md_out);
fdx_status fdx_evaluate(fdx_context* ctx, const char* train_path, const char* test_path,
                        const char* scores_path, const char* frames_path,
                        const char* split_path, const char* model_name,
                        const char* report_json_out, const char* report_md_out);
fdx_status fdx_report(fdx_context* ctx, const char* report_json_path,
                      const char* markdown_out);
fdx_status fdx_run(fdx_context* ctx, const char* scenario_path, int has_seed_override,
                   uint64_t seed_override, const char* out_dir);

/* Standalone helpers (no context, no error message). Output pointers may
 * be NULL to skip that value. */
fdx_status fdx_mann_kendall(const double* values, size_t n, double* s, double* var_s,
                            double* z, double* p_pos);
fdx_status fdx_f_beta(double precision, double recall, double beta, double* out);

#ifdef __cplusplus
}
#endif

#endif /* FDX_H */
