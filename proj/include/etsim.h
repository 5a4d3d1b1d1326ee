#ifndef ETSIM_H
#define ETSIM_H

/*
 * C interface to the eye-tracking measure simulation engine: generative
 * data model, crossed random-intercept mixed-model fits with likelihood-
 * ratio tests, and the Monte Carlo machinery that turns them into
 * false-positive and power estimates under several decision criteria.
 *
 * All functions return etsim_status unless documented otherwise. On a
 * failure, etsim_last_error() carries a description for the calling
 * thread. Handles are released with their matching _free function;
 * passing NULL to a _free function is a no-op.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum etsim_status {
    ETSIM_OK = 0,
    ETSIM_ERR_ARGUMENT = 1, /* invalid argument or precondition violation */
    ETSIM_ERR_PARSE = 2,    /* malformed file content */
    ETSIM_ERR_IO = 3,       /* file system failure */
    ETSIM_ERR_FIT = 4,      /* model fitting failed */
} etsim_status;

const char* etsim_version_string(void);
const char* etsim_last_error(void);

/* ---- parameter ranges ------------------------------------------------ */

typedef struct etsim_range etsim_range;

/* The built-in bounds of the generative-parameter hyperbox. */
etsim_range* etsim_range_default(void);
etsim_status etsim_range_load(const char* path, etsim_range** out);
etsim_status etsim_range_save(const etsim_range* range, const char* path);
/* Parameter names use the dotted form: n.subjects, n.items, sd.subjects,
 * sd.items, p.refix, p.regr, p.reread, mean.ffd, mean.gazediff,
 * mean.gopastdiff, mean.tvtdiff, sd.ffd, sd.gazediff, sd.gopastdiff,
 * sd.tvtdiff. */
etsim_status etsim_range_get(const etsim_range* range, const char* name, double* lower,
                             double* upper);
etsim_status etsim_range_set(etsim_range* range, const char* name, double lower, double upper);
void etsim_range_free(etsim_range* range);

/* ---- parameter sets --------------------------------------------------- */

typedef struct etsim_params etsim_params;

/* which: "angele" (lower corner) or "metzner" (upper corner). */
etsim_status etsim_params_endpoint(const char* which, etsim_params** out);
etsim_status etsim_params_sample(const etsim_range* range, uint64_t seed, uint64_t stream,
                                 etsim_params** out);
etsim_status etsim_params_get(const etsim_params* params, const char* name, double* value);
void etsim_params_free(etsim_params* params);

/* ---- data sets -------------------------------------------------------- */

typedef struct etsim_dataset etsim_dataset;

/* Complete subjects x items data with an optional true effect (ms). */
etsim_status etsim_dataset_generate(const etsim_params* params, double effect_ms, uint64_t seed,
                                    uint64_t stream, etsim_dataset** out);
etsim_status etsim_dataset_load_csv(const char* path, etsim_dataset** out);
etsim_status etsim_dataset_save_csv(const etsim_dataset* data, const char* path);
int64_t etsim_dataset_n_trials(const etsim_dataset* data);
void etsim_dataset_free(etsim_dataset* data);

/* ---- mixed-model likelihood-ratio test -------------------------------- */

typedef struct etsim_test etsim_test;

/* measure: "ffd", "gzd", "gpd" or "tvt". Fits the full and null models
 * on the log measure and compares them with a chi-square(1) LRT. */
etsim_status etsim_lrt(const etsim_dataset* data, const char* measure, etsim_test** out);
/* fields: beta0, beta1, sigma2, var_subj, var_item, loglik_full,
 * loglik_null, lrt_stat, p_value, effect_ms, sign (-1/0/1),
 * converged (0/1), n_evals. */
etsim_status etsim_test_get(const etsim_test* test, const char* field, double* value);
void etsim_test_free(etsim_test* test);

/* ---- Monte Carlo run --------------------------------------------------- */

typedef struct etsim_config etsim_config;

etsim_config* etsim_config_default(void);
etsim_status etsim_config_load(const char* path, etsim_config** out);
/* keys: iterations, seed, workers, coupled_noise, alpha, k, effects
 * (comma list of ms), criteria (comma list of one,two,bonferroni,holm,
 * all,all-bonferroni), out_dir, progress. */
etsim_status etsim_config_set(etsim_config* config, const char* key, const char* value);
etsim_status etsim_config_set_range(etsim_config* config, const etsim_range* range);
void etsim_config_free(etsim_config* config);

typedef struct etsim_results etsim_results;

/* Runs the full simulation; blocking. Results are independent of the
 * worker count for a fixed seed. */
etsim_status etsim_run(const etsim_config* config, etsim_results** out);
etsim_status etsim_results_write(const etsim_results* results, const char* dir,
                                 int gnuplot_stubs);
/* criterion: a configured token; direction_required selects power vs
 * false-positive semantics. */
etsim_status etsim_results_rate(const etsim_results* results, const char* criterion,
                                double delta_ms, int direction_required, double* rate,
                                double* ci_low, double* ci_high);
void etsim_results_free(etsim_results* results);

/* ---- validation and re-rendering --------------------------------------- */

/* Mean Pearson correlations of generated endpoint data over n_datasets
 * replicates (row-major FFD,GZD,GPD,TVT) and the reference values they
 * are expected to reproduce. */
etsim_status etsim_validate(const char* endpoint, int n_datasets, uint64_t seed, double corr[16],
                            double reference[16]);

/* Re-renders every output file from dir/aggregate.json. */
etsim_status etsim_report_render(const char* results_dir, int gnuplot_stubs);

#ifdef __cplusplus
}
#endif

#endif /* ETSIM_H */
