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

#include "samplab/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Cholesky>

#include "parallel.hpp"
#include "samplab/errors.hpp"

namespace samplab {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

double log_normal_iso(const Vec& resid, double var, int d) {
    return -0.5 * (d * (kLogTwoPi + std::log(var)) +
                   resid.squaredNorm() / var);
}

/// E||X||^2 = tr(cov X) + ||E X||^2, the constant behind the scaled-drift
/// error term.
double second_moment(const TargetModel& model) {
    return model.prior_cov().trace() + model.prior_mean().squaredNorm();
}

/// M(t_{k-1}) for k = 1..n.
std::vector<double> mmse_at_left_endpoints(const TargetModel& model,
                                           const Schedule& schedule,
                                           const QuadratureConfig& quad) {
    std::vector<double> m(static_cast<std::size_t>(schedule.n));
    for (int k = 1; k <= schedule.n; ++k) {
        m[static_cast<std::size_t>(k - 1)] =
            mmse(model, schedule.times[static_cast<std::size_t>(k - 1)], quad)
                .value;
    }
    return m;
}

/// sum_k delta_k/2 * E||f_k - E[X|Y_{k-1}]||^2 in closed form, given the
/// left-endpoint MMSE values.  The zero drift is the scaled drift with
/// factor 0; E||(c-1) E[X|Y_t]||^2 = (c-1)^2 (E||X||^2 - M(t)) by the law
/// of total variance.
double drift_error_term(const TargetModel& model, const Schedule& schedule,
                        const EstimatorSpec& estimator,
                        const std::vector<double>& m_left) {
    switch (estimator.variant) {
    case EstimatorVariant::kExactPosteriorMean:
        return 0.0;
    case EstimatorVariant::kBiased: {
        if (estimator.bias.size() != model.dim()) {
            throw ConfigError(
                "divergence: bias dimension does not match model");
        }
        return 0.5 * schedule.horizon * estimator.bias.squaredNorm();
    }
    case EstimatorVariant::kScaled:
    case EstimatorVariant::kZero: {
        const double c =
            estimator.variant == EstimatorVariant::kZero ? 0.0
                                                         : estimator.scale;
        const double ex2 = second_moment(model);
        long double acc = 0.0L;
        for (int k = 1; k <= schedule.n; ++k) {
            const double delta =
                schedule.increments[static_cast<std::size_t>(k - 1)];
            acc += 0.5L * delta *
                   (ex2 - m_left[static_cast<std::size_t>(k - 1)]);
        }
        return (c - 1.0) * (c - 1.0) * static_cast<double>(acc);
    }
    }
    throw ConfigError("divergence: unknown estimator variant");
}

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Shared Monte Carlo core: `log_q(y_prev, y_next, t_prev, delta)` is the
/// sampler transition log-density.  Comparison paths are simulated in
/// chunks small enough to keep full trajectories in memory, with each
/// chunk's paths on disjoint streams of the master seed.
template <typename LogQ>
PathwiseKl pathwise_core(const TargetModel& model, const Schedule& schedule,
                         std::int64_t paths, std::uint64_t master_seed,
                         const SimulateOptions& options, LogQ&& log_q) {
    if (paths < 2) {
        throw ConfigError("pathwise_kl_estimate requires paths >= 2");
    }
    const int d = model.dim();
    const int n = schedule.n;
    const std::int64_t per_path = static_cast<std::int64_t>(n + 1) * d;
    const std::int64_t chunk_cap = std::max<std::int64_t>(
        std::int64_t{1},
        static_cast<std::int64_t>(options.memory_budget_doubles) / per_path);

    long double sum = 0.0L, sum2 = 0.0L;
    std::int64_t used = 0, dropped = 0;
    std::vector<double> g;

    for (std::int64_t start = 0; start < paths;) {
        const std::int64_t chunk = std::min(chunk_cap, paths - start);
        SimulateOptions copts = options;
        copts.first_stream_id =
            options.first_stream_id + static_cast<std::uint64_t>(start);
        const TrajectorySet set =
            simulate_comparison(model, schedule, chunk, master_seed, copts);

        g.assign(static_cast<std::size_t>(chunk),
                 std::numeric_limits<double>::quiet_NaN());
        detail::run_paths(chunk, options.workers, [&](std::int64_t p) {
            if (set.path_failed(p)) {
                return true; // stays NaN, counted as dropped below
            }
            long double r = 0.0L;
            for (int k = 1; k <= n; ++k) {
                const double t_prev =
                    schedule.times[static_cast<std::size_t>(k - 1)];
                const double delta =
                    schedule.increments[static_cast<std::size_t>(k - 1)];
                const Vec y_prev = set.state(p, k - 1);
                const Vec y_next = set.state(p, k);
                const double lp = log_transition_density(model, y_prev,
                                                         y_next, t_prev,
                                                         delta);
                const double lq = log_q(y_prev, y_next, t_prev, delta);
                r += static_cast<long double>(lp) - lq;
            }
            const double rd = static_cast<double>(r);
            const double gp = std::expm1(-rd) + rd;
            if (std::isfinite(gp)) {
                g[static_cast<std::size_t>(p)] = gp;
            }
            return true;
        });

        // deterministic reduction in path order
        for (std::int64_t p = 0; p < chunk; ++p) {
            const double gp = g[static_cast<std::size_t>(p)];
            if (std::isnan(gp)) {
                ++dropped;
            } else {
                sum += gp;
                sum2 += static_cast<long double>(gp) * gp;
                ++used;
            }
        }
        start += chunk;
    }

    if (static_cast<double>(dropped) > 1e-3 * static_cast<double>(paths)) {
        char msg[128];
        std::snprintf(msg, sizeof(msg),
                      "pathwise_kl_estimate aborted: %lld of %lld paths "
                      "produced a non-finite log-ratio",
                      static_cast<long long>(dropped),
                      static_cast<long long>(paths));
        throw NumericalError(msg);
    }

    PathwiseKl out;
    out.paths_used = used;
    const long double mean = sum / used;
    out.estimate = static_cast<double>(mean);
    const long double var =
        used > 1 ? (sum2 - static_cast<long double>(used) * mean * mean) /
                       (used - 1)
                 : 0.0L;
    out.std_error = std::sqrt(
        std::max(0.0, static_cast<double>(var / used)));
    return out;
}

} // namespace

DivergenceReport exact_divergence(const TargetModel& model,
                                  const Schedule& schedule,
                                  const EstimatorSpec& estimator,
                                  const QuadratureConfig& quad) {
    // surface structural problems (e.g. bias dimension) before quadrature
    (void)evaluate_estimator(model, estimator, Vec::Zero(model.dim()), 0.0);

    const auto m_left = mmse_at_left_endpoints(model, schedule, quad);
    long double riemann = 0.0L;
    for (int k = 1; k <= schedule.n; ++k) {
        riemann += 0.5L *
                   schedule.increments[static_cast<std::size_t>(k - 1)] *
                   m_left[static_cast<std::size_t>(k - 1)];
    }

    DivergenceReport r;
    r.mmse_riemann_term = static_cast<double>(riemann);
    r.mutual_info_term =
        mutual_information(model, schedule.horizon, quad);
    r.estimator_error_term =
        drift_error_term(model, schedule, estimator, m_left);
    r.delta_exact = r.mmse_riemann_term - r.mutual_info_term +
                    r.estimator_error_term;
    r.step_size_bound = 0.5 * schedule.delta_max() *
                            model.prior_cov().trace() +
                        r.estimator_error_term;
    if (schedule.family != ScheduleFamily::kExplicit &&
        estimator.variant == EstimatorVariant::kExactPosteriorMean) {
        r.geometric_bound = geometric_schedule_bound(model, schedule, quad);
    }
    r.tv_bound = std::sqrt(std::max(0.0, r.delta_exact) / 2.0);
    return r;
}

double step_size_bound(const TargetModel& model, const Schedule& schedule,
                       const EstimatorSpec& estimator,
                       const QuadratureConfig& quad) {
    double error = 0.0;
    if (estimator.variant == EstimatorVariant::kBiased) {
        error = drift_error_term(model, schedule, estimator, {});
    } else if (estimator.variant != EstimatorVariant::kExactPosteriorMean) {
        error = drift_error_term(model, schedule, estimator,
                                 mmse_at_left_endpoints(model, schedule,
                                                        quad));
    }
    return 0.5 * schedule.delta_max() * model.prior_cov().trace() + error;
}

double geometric_schedule_bound(const TargetModel& model,
                                const Schedule& schedule,
                                const QuadratureConfig& quad) {
    if (schedule.family == ScheduleFamily::kExplicit) {
        throw ConfigError("geometric_schedule_bound needs a uniform or "
                          "geometric schedule");
    }
    const double T = schedule.horizon;
    const double m0 = model.prior_cov().trace(); // M(0) = tr(cov X)
    const double mt = mmse(model, T, quad).value;
    if (schedule.family == ScheduleFamily::kUniform) {
        return T * (m0 - mt) / (2.0 * schedule.n);
    }
    const double alpha = schedule.alpha;
    const double it = mutual_information(model, T, quad);
    // alpha^n - 1 via expm1 for stability near 1 and graceful overflow
    const double denom = std::expm1(schedule.n * std::log(alpha));
    return (alpha - 1.0) *
           (T * (m0 - mt) / (2.0 * denom) + it - T * mt / 2.0);
}

PathwiseKl pathwise_kl_estimate(const TargetModel& model,
                                const Schedule& schedule,
                                const EstimatorSpec& estimator,
                                std::int64_t paths,
                                std::uint64_t master_seed,
                                const SimulateOptions& options) {
    const int d = model.dim();
    (void)evaluate_estimator(model, estimator, Vec::Zero(d), 0.0);
    return pathwise_core(
        model, schedule, paths, master_seed, options,
        [&](const Vec& y_prev, const Vec& y_next, double t_prev,
            double delta) {
            const Vec drift =
                evaluate_estimator(model, estimator, y_prev, t_prev);
            const Vec resid = y_next - y_prev - delta * drift;
            return log_normal_iso(resid, delta, d);
        });
}

PathwiseKl pathwise_kl_estimate(const TargetModel& model,
                                const Schedule& schedule,
                                const KernelSpec& kernel, std::int64_t paths,
                                std::uint64_t master_seed,
                                const SimulateOptions& options) {
    const int d = model.dim();
    switch (kernel.variant) {
    case KernelVariant::kMeanOnly:
        // same transition law as the exact-drift sampler
        return pathwise_kl_estimate(model, schedule, EstimatorSpec::exact(),
                                    paths, master_seed, options);
    case KernelVariant::kPosteriorExact:
        // q = p: evaluate both sides through the same density so the
        // log-ratio cancels exactly
        return pathwise_core(
            model, schedule, paths, master_seed, options,
            [&](const Vec& y_prev, const Vec& y_next, double t_prev,
                double delta) {
                return log_transition_density(model, y_prev, y_next, t_prev,
                                              delta);
            });
    case KernelVariant::kGaussianMatched:
        return pathwise_core(
            model, schedule, paths, master_seed, options,
            [&](const Vec& y_prev, const Vec& y_next, double t_prev,
                double delta) {
                const PosteriorStats post =
                    posterior_stats(model, y_prev, t_prev);
                Mat cov = (delta * delta) * post.covariance;
                cov.diagonal().array() += delta;
                const Eigen::LLT<Mat> llt(cov);
                if (llt.info() != Eigen::Success) {
                    throw NumericalError(
                        "matched-noise covariance not positive definite");
                }
                const Vec resid = y_next - y_prev - delta * post.mean;
                const double quad_form =
                    resid.dot(llt.solve(resid));
                const double log_det =
                    2.0 * llt.matrixL().toDenseMatrix().diagonal().array()
                              .log()
                              .sum();
                return -0.5 * (d * kLogTwoPi + log_det + quad_form);
            });
    }
    throw ConfigError("pathwise_kl_estimate: unknown kernel variant");
}

std::vector<SandwichRow> sandwich_check(const TargetModel& model,
                                        const Schedule& schedule,
                                        const QuadratureConfig& quad,
                                        double tolerance) {
    std::vector<SandwichRow> rows;
    rows.reserve(static_cast<std::size_t>(schedule.n));
    for (int k = 1; k <= schedule.n; ++k) {
        const double t_prev =
            schedule.times[static_cast<std::size_t>(k - 1)];
        const double t_k = schedule.times[static_cast<std::size_t>(k)];
        const double delta =
            schedule.increments[static_cast<std::size_t>(k - 1)];
        SandwichRow row;
        row.k = k;
        row.lower = 0.5 * delta * mmse(model, t_k, quad).value;
        row.upper = 0.5 * delta * mmse(model, t_prev, quad).value;
        row.mid = mutual_information_increment(model, t_prev, t_k, quad);
        row.violation = row.lower > row.mid + tolerance ||
                        row.mid > row.upper + tolerance;
        rows.push_back(row);
    }
    return rows;
}

double pinsker_tv(double delta) {
    if (!(delta >= 0.0)) {
        throw ConfigError("pinsker_tv requires a nonnegative divergence");
    }
    return std::sqrt(delta / 2.0);
}

AreaDecomposition area_decomposition(const TargetModel& model,
                                     const Schedule& schedule,
                                     const QuadratureConfig& quad,
                                     int curve_points) {
    if (curve_points < 2) {
        throw ConfigError("area_decomposition requires curve_points >= 2");
    }
    AreaDecomposition out;
    long double riemann = 0.0L;
    for (int k = 1; k <= schedule.n; ++k) {
        const double t_prev =
            schedule.times[static_cast<std::size_t>(k - 1)];
        const double t_k = schedule.times[static_cast<std::size_t>(k)];
        const double delta =
            schedule.increments[static_cast<std::size_t>(k - 1)];
        const double m = mmse(model, t_prev, quad).value;
        riemann += static_cast<long double>(delta) * m;
        out.staircase.emplace_back(t_prev, m);
        out.staircase.emplace_back(t_k, m);
    }
    out.riemann_area = static_cast<double>(riemann);
    out.info_area =
        2.0 * mutual_information(model, schedule.horizon, quad);
    out.gap_area = out.riemann_area - out.info_area;
    out.curve.reserve(static_cast<std::size_t>(curve_points));
    for (int i = 0; i < curve_points; ++i) {
        const double s = schedule.horizon * i / (curve_points - 1);
        out.curve.emplace_back(s, mmse(model, s, quad).value);
    }
    return out;
}

std::string report_csv_header() {
    return "model,schedule,alpha,T,n,estimator,delta_exact,thm1,thm2,mc,"
           "mc_se,tv";
}

std::string report_csv_row(const std::string& model_label,
                           const Schedule& schedule,
                           const std::string& estimator_label,
                           const DivergenceReport& report) {
    std::string row;
    row += model_label;
    row += ',';
    row += schedule_family_name(schedule.family);
    row += ',';
    row += fmt_g(schedule.alpha);
    row += ',';
    row += fmt_g(schedule.horizon);
    row += ',';
    row += std::to_string(schedule.n);
    row += ',';
    row += estimator_label;
    row += ',';
    row += fmt_g(report.delta_exact);
    row += ',';
    row += fmt_g(report.step_size_bound);
    row += ',';
    if (report.geometric_bound) {
        row += fmt_g(*report.geometric_bound);
    }
    row += ',';
    if (report.mc) {
        row += fmt_g(report.mc->estimate);
    }
    row += ',';
    if (report.mc) {
        row += fmt_g(report.mc->std_error);
    }
    row += ',';
    row += fmt_g(report.tv_bound);
    return row;
}

} // namespace samplab
