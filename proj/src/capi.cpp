// Copyright 2026 The samplab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "samplab.h"

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <json.hpp>

#include "samplab/divergence.hpp"
#include "samplab/errors.hpp"
#include "samplab/estimators.hpp"
#include "samplab/experiments.hpp"
#include "samplab/processes.hpp"
#include "samplab/schedules.hpp"
#include "samplab/targets.hpp"

// Opaque handle bodies: thin wrappers over the C++ value types.
struct samplab_model {
    samplab::TargetModel impl;
};

struct samplab_schedule {
    samplab::Schedule impl;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_summary;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Run `fn`, translating exceptions into status codes and capturing the
/// message for samplab_last_error.
template <typename Fn>
samplab_status guarded(Fn&& fn) {
    try {
        g_error.clear();
        fn();
        return SAMPLAB_OK;
    } catch (const samplab::ConfigError& e) {
        g_error = e.what();
        return SAMPLAB_ERROR_CONFIG;
    } catch (const samplab::NumericalError& e) {
        g_error = e.what();
        return SAMPLAB_ERROR_NUMERICAL;
    } catch (const nlohmann::json::exception& e) {
        g_error = e.what();
        return SAMPLAB_ERROR_CONFIG;
    } catch (const std::exception& e) {
        g_error = e.what();
        return SAMPLAB_ERROR_INTERNAL;
    }
}

samplab_status null_argument(const char* what) {
    g_error = std::string(what) + " must not be NULL";
    return SAMPLAB_ERROR_CONFIG;
}

samplab::EstimatorSpec parse_estimator(const char* json_text, int dim) {
    if (json_text == nullptr) {
        return samplab::EstimatorSpec::exact();
    }
    return samplab::EstimatorSpec::from_json(nlohmann::json::parse(json_text),
                                             dim);
}

/// Shared null/range validation for the two pathwise entry points.
samplab_status pathwise_common(const samplab_model* model,
                               const samplab_schedule* schedule,
                               int32_t workers, double* out_estimate,
                               double* out_std_error,
                               int64_t* out_paths_used) {
    if (model == nullptr) {
        return null_argument("model");
    }
    if (schedule == nullptr) {
        return null_argument("schedule");
    }
    if (out_estimate == nullptr) {
        return null_argument("out_estimate");
    }
    if (out_std_error == nullptr) {
        return null_argument("out_std_error");
    }
    if (out_paths_used == nullptr) {
        return null_argument("out_paths_used");
    }
    if (workers < 1) {
        g_error = "workers must be >= 1";
        return SAMPLAB_ERROR_CONFIG;
    }
    return SAMPLAB_OK;
}

} // namespace

extern "C" {

const char* samplab_version(void) { return samplab::tool_version(); }

const char* samplab_last_error(void) { return g_error.c_str(); }

const char* samplab_last_summary(void) { return g_summary.c_str(); }

// ---------------------------------------------------------------------------
// models

samplab_model* samplab_model_create(const char* json_text) {
    if (json_text == nullptr) {
        null_argument("json_text");
        return nullptr;
    }
    samplab_model* model = nullptr;
    guarded([&] {
        model = new samplab_model{
            samplab::TargetModel::from_json(nlohmann::json::parse(json_text))};
    });
    return model;
}

void samplab_model_destroy(samplab_model* model) { delete model; }

int32_t samplab_model_dim(const samplab_model* model) {
    return model == nullptr ? -1 : model->impl.dim();
}

samplab_status samplab_model_mmse(const samplab_model* model, double s,
                                  double* out_value, double* out_std_error) {
    if (model == nullptr) {
        return null_argument("model");
    }
    if (out_value == nullptr) {
        return null_argument("out_value");
    }
    return guarded([&] {
        const samplab::MmseValue v = samplab::mmse(model->impl, s);
        *out_value = v.value;
        if (out_std_error != nullptr) {
            *out_std_error = v.std_error;
        }
    });
}

samplab_status samplab_model_mutual_information(const samplab_model* model,
                                                double s, double* out_value) {
    if (model == nullptr) {
        return null_argument("model");
    }
    if (out_value == nullptr) {
        return null_argument("out_value");
    }
    return guarded([&] {
        *out_value = samplab::mutual_information(model->impl, s);
    });
}

samplab_status samplab_model_posterior_mean(const samplab_model* model,
                                            const double* y, double t,
                                            double* out) {
    if (model == nullptr) {
        return null_argument("model");
    }
    if (y == nullptr) {
        return null_argument("y");
    }
    if (out == nullptr) {
        return null_argument("out");
    }
    return guarded([&] {
        const int dim = model->impl.dim();
        samplab::Vec point(dim);
        for (int i = 0; i < dim; ++i) {
            point[i] = y[i];
        }
        const samplab::Vec mean =
            samplab::posterior_stats(model->impl, point, t).mean;
        for (int i = 0; i < dim; ++i) {
            out[i] = mean[i];
        }
    });
}

// ---------------------------------------------------------------------------
// schedules

samplab_schedule* samplab_schedule_uniform(double T, int32_t n) {
    samplab_schedule* schedule = nullptr;
    guarded([&] {
        schedule = new samplab_schedule{samplab::uniform_schedule(T, n)};
    });
    return schedule;
}

samplab_schedule* samplab_schedule_geometric(double T, int32_t n,
                                             double alpha) {
    samplab_schedule* schedule = nullptr;
    guarded([&] {
        schedule =
            new samplab_schedule{samplab::geometric_schedule(T, n, alpha)};
    });
    return schedule;
}

void samplab_schedule_destroy(samplab_schedule* schedule) { delete schedule; }

int32_t samplab_schedule_steps(const samplab_schedule* schedule) {
    return schedule == nullptr ? -1 : schedule->impl.n;
}

double samplab_schedule_horizon(const samplab_schedule* schedule) {
    return schedule == nullptr ? kNaN : schedule->impl.horizon;
}

samplab_status samplab_schedule_times(const samplab_schedule* schedule,
                                      double* out_times) {
    if (schedule == nullptr) {
        return null_argument("schedule");
    }
    if (out_times == nullptr) {
        return null_argument("out_times");
    }
    return guarded([&] {
        for (std::size_t i = 0; i < schedule->impl.times.size(); ++i) {
            out_times[i] = schedule->impl.times[i];
        }
    });
}

samplab_status samplab_corollary_alpha(double T, int32_t n,
                                       double* out_alpha) {
    if (out_alpha == nullptr) {
        return null_argument("out_alpha");
    }
    return guarded([&] { *out_alpha = samplab::corollary_alpha(T, n); });
}

// ---------------------------------------------------------------------------
// divergence analysis

samplab_status samplab_divergence_exact(const samplab_model* model,
                                        const samplab_schedule* schedule,
                                        const char* estimator_json,
                                        samplab_divergence_report* out) {
    if (model == nullptr) {
        return null_argument("model");
    }
    if (schedule == nullptr) {
        return null_argument("schedule");
    }
    if (out == nullptr) {
        return null_argument("out");
    }
    return guarded([&] {
        const samplab::EstimatorSpec spec =
            parse_estimator(estimator_json, model->impl.dim());
        const samplab::DivergenceReport report =
            samplab::exact_divergence(model->impl, schedule->impl, spec);
        out->mmse_riemann_term = report.mmse_riemann_term;
        out->mutual_info_term = report.mutual_info_term;
        out->estimator_error_term = report.estimator_error_term;
        out->delta_exact = report.delta_exact;
        out->step_size_bound = report.step_size_bound;
        out->ratio_bound =
            report.geometric_bound ? *report.geometric_bound : kNaN;
        out->tv_bound = report.tv_bound;
    });
}

samplab_status samplab_pathwise_kl_drift(
    const samplab_model* model, const samplab_schedule* schedule,
    const char* estimator_json, int64_t paths, uint64_t seed, int32_t workers,
    double* out_estimate, double* out_std_error, int64_t* out_paths_used) {
    const samplab_status status = pathwise_common(
        model, schedule, workers, out_estimate, out_std_error,
        out_paths_used);
    if (status != SAMPLAB_OK) {
        return status;
    }
    return guarded([&] {
        const samplab::EstimatorSpec spec =
            parse_estimator(estimator_json, model->impl.dim());
        samplab::SimulateOptions options;
        options.workers = workers;
        const samplab::PathwiseKl kl = samplab::pathwise_kl_estimate(
            model->impl, schedule->impl, spec, paths, seed, options);
        *out_estimate = kl.estimate;
        *out_std_error = kl.std_error;
        *out_paths_used = kl.paths_used;
    });
}

samplab_status samplab_pathwise_kl_kernel(
    const samplab_model* model, const samplab_schedule* schedule,
    const char* kernel_json, int64_t paths, uint64_t seed, int32_t workers,
    double* out_estimate, double* out_std_error, int64_t* out_paths_used) {
    const samplab_status status = pathwise_common(
        model, schedule, workers, out_estimate, out_std_error,
        out_paths_used);
    if (status != SAMPLAB_OK) {
        return status;
    }
    if (kernel_json == nullptr) {
        return null_argument("kernel_json");
    }
    return guarded([&] {
        const samplab::KernelSpec spec =
            samplab::KernelSpec::from_json(nlohmann::json::parse(kernel_json));
        samplab::SimulateOptions options;
        options.workers = workers;
        const samplab::PathwiseKl kl = samplab::pathwise_kl_estimate(
            model->impl, schedule->impl, spec, paths, seed, options);
        *out_estimate = kl.estimate;
        *out_std_error = kl.std_error;
        *out_paths_used = kl.paths_used;
    });
}

// ---------------------------------------------------------------------------
// experiment runner

int32_t samplab_run_experiment(const char* config_json,
                               const samplab_run_overrides* overrides) {
    g_error.clear();
    g_summary.clear();
    if (config_json == nullptr) {
        null_argument("config_json");
        return SAMPLAB_ERROR_CONFIG;
    }
    samplab::RunOverrides cpp_overrides;
    if (overrides != nullptr) {
        if (overrides->experiment != nullptr) {
            cpp_overrides.experiment = overrides->experiment;
        }
        if (overrides->out_dir != nullptr) {
            cpp_overrides.out_dir = overrides->out_dir;
        }
        if (overrides->seed != nullptr) {
            cpp_overrides.seed = *overrides->seed;
        }
        if (overrides->paths != nullptr) {
            cpp_overrides.paths = *overrides->paths;
        }
        if (overrides->workers != nullptr) {
            cpp_overrides.workers = *overrides->workers;
        }
    }
    const samplab::RunResult result =
        samplab::run_experiment_text(config_json, cpp_overrides);
    g_summary = result.summary;
    g_error = result.error;
    return result.exit_code;
}

} // extern "C"
