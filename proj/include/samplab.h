/* Copyright 2026 The samplab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to the samplab shared library.
 *
 * All objects are opaque handles created and destroyed through these
 * functions; every fallible call returns a samplab_status and leaves a
 * human-readable message behind samplab_last_error().  The header is plain
 * C so that any language with a C FFI can drive the library.
 *
 * Error and message strings are thread-local: each thread sees the message
 * from its own most recent failing call, and the pointer stays valid until
 * that thread's next call into the library.
 */

#ifndef SAMPLAB_H_
#define SAMPLAB_H_

#include <stdint.h>

#if defined(_WIN32)
#if defined(SAMPLAB_BUILD)
#define SAMPLAB_API __declspec(dllexport)
#else
#define SAMPLAB_API __declspec(dllimport)
#endif
#else
#define SAMPLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* ------------------------------------------------------------------ */
/* status codes (aligned with the CLI exit codes)                     */

typedef enum samplab_status {
    SAMPLAB_OK = 0,
    SAMPLAB_ERROR_INTERNAL = 1,     /* unexpected failure             */
    SAMPLAB_ERROR_CHECK_FAILED = 2, /* an invariant or bound violated */
    SAMPLAB_ERROR_CONFIG = 3,       /* bad input or unwritable output */
    SAMPLAB_ERROR_NUMERICAL = 4     /* computation left its domain    */
} samplab_status;

/* Library version string, e.g. "0.1.0".  Static storage. */
SAMPLAB_API const char* samplab_version(void);

/* Message from this thread's most recent failing call ("" if none). */
SAMPLAB_API const char* samplab_last_error(void);

/* Multi-line text report from this thread's most recent
 * samplab_run_experiment call ("" before the first run). */
SAMPLAB_API const char* samplab_last_summary(void);

/* ------------------------------------------------------------------ */
/* target models                                                      */

typedef struct samplab_model samplab_model;

/* Create a model from its JSON description, e.g.
 *   {"kind": "isotropic_gaussian", "dim": 1, "mean": 0, "variance": 1}
 *   {"kind": "gaussian_mixture", "dim": 1, "weights": [...],
 *    "means": [...], "variances": [...]}
 *   {"kind": "atom_mixture", "dim": 2, "weights": [...], "atoms": [...]}
 * Returns NULL on error (consult samplab_last_error). */
SAMPLAB_API samplab_model* samplab_model_create(const char* json_text);

SAMPLAB_API void samplab_model_destroy(samplab_model* model);

/* Dimension of the model's state space, or -1 if model is NULL. */
SAMPLAB_API int32_t samplab_model_dim(const samplab_model* model);

/* Minimum mean-square error M(s) of estimating X from the observation
 * path at time s >= 0, with a standard error when quadrature had to fall
 * back to Monte Carlo (0 when the value is closed-form or determinate). */
SAMPLAB_API samplab_status samplab_model_mmse(const samplab_model* model,
                                              double s, double* out_value,
                                              double* out_std_error);

/* Mutual information I(s) between X and the observation path up to s. */
SAMPLAB_API samplab_status samplab_model_mutual_information(
    const samplab_model* model, double s, double* out_value);

/* Posterior mean E[X | Y(t) = y] written to out (length = dim). */
SAMPLAB_API samplab_status samplab_model_posterior_mean(
    const samplab_model* model, const double* y, double t, double* out);

/* ------------------------------------------------------------------ */
/* time schedules                                                     */

typedef struct samplab_schedule samplab_schedule;

/* n equal steps on [0, T].  NULL on error. */
SAMPLAB_API samplab_schedule* samplab_schedule_uniform(double T, int32_t n);

/* n steps on [0, T] with consecutive step ratio alpha.  NULL on error. */
SAMPLAB_API samplab_schedule* samplab_schedule_geometric(double T, int32_t n,
                                                         double alpha);

SAMPLAB_API void samplab_schedule_destroy(samplab_schedule* schedule);

/* Number of steps n, or -1 if schedule is NULL. */
SAMPLAB_API int32_t samplab_schedule_steps(const samplab_schedule* schedule);

/* Final time T, or NaN if schedule is NULL. */
SAMPLAB_API double samplab_schedule_horizon(
    const samplab_schedule* schedule);

/* Copy the n + 1 grid times t_0..t_n into out_times. */
SAMPLAB_API samplab_status samplab_schedule_times(
    const samplab_schedule* schedule, double* out_times);

/* Step ratio (T ln T)^(1/n) that balances the geometric-schedule bound;
 * requires T ln T > 1. */
SAMPLAB_API samplab_status samplab_corollary_alpha(double T, int32_t n,
                                                   double* out_alpha);

/* ------------------------------------------------------------------ */
/* divergence analysis                                                */

/* Exact decomposition of the sampler-vs-comparison KL divergence.
 * ratio_bound is NaN when the schedule family carries no ratio bound
 * (explicit schedules, or a non-exact drift estimator). */
typedef struct samplab_divergence_report {
    double mmse_riemann_term;     /* (1/2) sum_k delta_k M(t_{k-1})   */
    double mutual_info_term;      /* I(T)                             */
    double estimator_error_term;  /* accumulated drift estimator error */
    double delta_exact;           /* KL divergence after n steps      */
    double step_size_bound;       /* max-step bound on delta_exact    */
    double ratio_bound;           /* geometric-schedule bound or NaN  */
    double tv_bound;              /* total-variation bound from delta */
} samplab_divergence_report;

/* Evaluate the exact divergence report.  estimator_json selects the drift
 * estimator (e.g. {"variant": "scaled", "factor": 0.5}); NULL means the
 * exact posterior mean. */
SAMPLAB_API samplab_status samplab_divergence_exact(
    const samplab_model* model, const samplab_schedule* schedule,
    const char* estimator_json, samplab_divergence_report* out);

/* Monte Carlo pathwise estimate of the same divergence using a drift
 * estimator for the sampler.  Runs `paths` simulated paths seeded by
 * `seed` across `workers` threads (the result is independent of the
 * worker count).  out_paths_used reports paths surviving the numerical
 * failure budget. */
SAMPLAB_API samplab_status samplab_pathwise_kl_drift(
    const samplab_model* model, const samplab_schedule* schedule,
    const char* estimator_json, int64_t paths, uint64_t seed,
    int32_t workers, double* out_estimate, double* out_std_error,
    int64_t* out_paths_used);

/* Same estimate for a sampler driven by a transition kernel, e.g.
 * {"variant": "gaussian_matched"} or {"variant": "mean_only"}. */
SAMPLAB_API samplab_status samplab_pathwise_kl_kernel(
    const samplab_model* model, const samplab_schedule* schedule,
    const char* kernel_json, int64_t paths, uint64_t seed, int32_t workers,
    double* out_estimate, double* out_std_error, int64_t* out_paths_used);

/* ------------------------------------------------------------------ */
/* experiment runner                                                  */

/* Optional overrides applied on top of the config document; NULL fields
 * keep the config's values. */
typedef struct samplab_run_overrides {
    const char* experiment; /* subcommand name, e.g. "rate-study" */
    const char* out_dir;
    const uint64_t* seed;
    const int64_t* paths;
    const int32_t* workers;
} samplab_run_overrides;

/* Parse a JSON experiment config, run it, and write results.csv plus
 * manifest.json (and any extra outputs) under its output directory.
 * overrides may be NULL.  Returns the process exit code contract:
 * 0 all checks pass, 2 a check failed, 3 config error, 4 numerical
 * failure, 1 unexpected failure.  The text report is available from
 * samplab_last_summary(), the failure message from samplab_last_error().
 */
SAMPLAB_API int32_t samplab_run_experiment(
    const char* config_json, const samplab_run_overrides* overrides);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SAMPLAB_H_ */
