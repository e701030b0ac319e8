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

#ifndef SAMPLAB_DIVERGENCE_HPP_
#define SAMPLAB_DIVERGENCE_HPP_

/**
 * KL-divergence accounting between the comparison chain Y and a sampler
 * chain Z over n steps, written Delta_n = KL(Law(Y_1..Y_n) || Law(Z_1..Z_n)).
 *
 * Everything here rests on one exact three-term identity: with the exact
 * conditional-mean drift replaced by an arbitrary deterministic drift f,
 *
 *   Delta_n =  sum_k delta_k/2 * M(t_{k-1})        (Riemann term)
 *            - I(X; Y_n)                           (mutual-information term)
 *            + sum_k delta_k/2 * E||f_k - E[X|Y_{k-1}]||^2   (drift error)
 *
 * where M is the channel MMSE curve of the target.  The module evaluates
 * the identity in closed form (exact_divergence), the two analytic upper
 * bounds driven by the step sizes (step_size_bound, the worst-step bound,
 * and geometric_schedule_bound for constant-ratio grids), an unbiased
 * Monte Carlo estimate of the same quantity from simulated comparison
 * paths (pathwise_kl_estimate), the per-step mutual-information sandwich,
 * the total-variation conversion, and the area decomposition that shows
 * Delta_n as half the gap between the Riemann staircase and the area under
 * the MMSE curve.  All information quantities are in nats.
 */

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "samplab/estimators.hpp"
#include "samplab/processes.hpp"
#include "samplab/schedules.hpp"
#include "samplab/targets.hpp"

namespace samplab {

/// Monte Carlo estimate of Delta_n with its standard error.  `paths_used`
/// counts the paths that survived simulation and log-ratio evaluation.
struct PathwiseKl {
    double estimate = 0.0;
    double std_error = 0.0;
    std::int64_t paths_used = 0;
};

/// Full divergence accounting for one (target, schedule, drift) triple.
/// delta_exact always equals mmse_riemann_term - mutual_info_term
/// + estimator_error_term exactly as computed; tv_bound = sqrt(max(delta,
/// 0)/2).  geometric_bound is present only for uniform/geometric schedules
/// with the exact drift (the hypothesis under which that bound holds); mc
/// is filled by attach_mc, not by exact_divergence.
struct DivergenceReport {
    double mmse_riemann_term = 0.0;
    double mutual_info_term = 0.0;
    double estimator_error_term = 0.0;
    double delta_exact = 0.0;
    double step_size_bound = 0.0;
    std::optional<double> geometric_bound;
    std::optional<PathwiseKl> mc;
    double tv_bound = 0.0;
    std::int64_t paths_used = 0;

    void attach_mc(const PathwiseKl& kl) {
        mc = kl;
        paths_used = kl.paths_used;
    }
};

/// One row of the per-step mutual-information sandwich
///   delta_k/2 * M(t_k)  <=  I(t_k) - I(t_{k-1})  <=  delta_k/2 * M(t_{k-1}).
struct SandwichRow {
    int k = 0;
    double lower = 0.0;
    double mid = 0.0;
    double upper = 0.0;
    bool violation = false; ///< an inequality failed beyond the tolerance
};

/// Areas of the staircase-vs-curve picture: riemann_area = sum_k delta_k
/// * M(t_{k-1}) (staircase), info_area = 2 I(T) (area under M), and
/// gap_area = riemann_area - info_area = 2 * Delta_n for the exact drift.
/// `curve` samples (s, M(s)) on [0, T]; `staircase` lists the step-function
/// corner points ready for plotting.
struct AreaDecomposition {
    double riemann_area = 0.0;
    double info_area = 0.0;
    double gap_area = 0.0;
    std::vector<std::pair<double, double>> curve;
    std::vector<std::pair<double, double>> staircase;
};

/// Evaluate the three-term identity in closed form (quadrature where the
/// target needs it) and both analytic bounds.  MC fields are left empty.
DivergenceReport exact_divergence(const TargetModel& model,
                                  const Schedule& schedule,
                                  const EstimatorSpec& estimator,
                                  const QuadratureConfig& quad = {});

/// Worst-step bound: delta_max/2 * tr(cov X) + drift error term.
double step_size_bound(const TargetModel& model, const Schedule& schedule,
                       const EstimatorSpec& estimator,
                       const QuadratureConfig& quad = {});

/// Constant-ratio-schedule bound for the exact drift:
///   (alpha - 1) * ( T (M(0) - M(T)) / (2 (alpha^n - 1))
///                   + I(T) - T M(T)/2 )
/// with the alpha -> 1 limit T (M(0) - M(T)) / (2n) for uniform schedules.
/// Rejects explicit schedules (no constant ratio to use).
double geometric_schedule_bound(const TargetModel& model,
                                const Schedule& schedule,
                                const QuadratureConfig& quad = {});

/**
 * Unbiased Monte Carlo estimate of Delta_n.  Simulates comparison paths
 * (in memory-bounded chunks of disjoint streams of `master_seed`), and for
 * each path accumulates the step log-ratio r = sum_k [log p_k - log q_k]
 * of the two transition densities along the path.  The per-path statistic
 * is g = expm1(-r) + r, which is nonnegative, has mean exactly Delta_n
 * under the comparison law, and has vanishing variance as q -> p — so the
 * estimate stays resolvable even when the divergence is tiny.  Paths whose
 * log-ratio is non-finite are dropped; more than 0.1% of them aborts with
 * NumericalError.
 */
PathwiseKl pathwise_kl_estimate(const TargetModel& model,
                                const Schedule& schedule,
                                const EstimatorSpec& estimator,
                                std::int64_t paths, std::uint64_t master_seed,
                                const SimulateOptions& options = {});

/// Same estimate against a kernel-driven sampler: mean_only matches the
/// exact-drift sampler, gaussian_matched uses the widened per-step noise
/// covariance delta^2 S + delta I, and posterior_exact has q = p (the
/// log-ratio is identically zero).
PathwiseKl pathwise_kl_estimate(const TargetModel& model,
                                const Schedule& schedule,
                                const KernelSpec& kernel, std::int64_t paths,
                                std::uint64_t master_seed,
                                const SimulateOptions& options = {});

/// Per-step sandwich rows for k = 1..n; a row is flagged when an
/// inequality fails by more than `tolerance` (quadrature slack).
std::vector<SandwichRow> sandwich_check(const TargetModel& model,
                                        const Schedule& schedule,
                                        const QuadratureConfig& quad = {},
                                        double tolerance = 1e-6);

/// Total-variation bound sqrt(delta/2); rejects negative input.
double pinsker_tv(double delta);

/// Staircase-vs-curve areas with plot-ready samples (curve_points >= 2
/// evenly spaced MMSE samples on [0, T]).
AreaDecomposition area_decomposition(const TargetModel& model,
                                     const Schedule& schedule,
                                     const QuadratureConfig& quad = {},
                                     int curve_points = 201);

/// CSV emission: fixed header and one row per configuration.  Optional
/// fields (geometric bound, MC columns) are left empty when absent; all
/// numbers use round-trip precision.
std::string report_csv_header();
std::string report_csv_row(const std::string& model_label,
                           const Schedule& schedule,
                           const std::string& estimator_label,
                           const DivergenceReport& report);

} // namespace samplab

#endif // SAMPLAB_DIVERGENCE_HPP_
