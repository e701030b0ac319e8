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

#include "samplab/processes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "parallel.hpp"
#include "samplab/errors.hpp"
#include "samplab/rng.hpp"

namespace samplab {

namespace {

StorageMode pick_storage(const Schedule& schedule, int dim,
                         std::int64_t paths,
                         const SimulateOptions& options) {
    const std::int64_t full =
        paths * (static_cast<std::int64_t>(schedule.n) + 1) * dim;
    return static_cast<std::uint64_t>(full) <= options.memory_budget_doubles
               ? StorageMode::kFull
               : StorageMode::kEndpoints;
}

void fill_path_nan(TrajectorySet& set, std::int64_t path) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int k : set.stored_steps()) {
        set.state_mut(path, k).setConstant(nan);
    }
    if (set.has_latent_x()) {
        set.latent_x_mut(path).setConstant(nan);
    }
}

/// Enforce the failure budget: more than 0.1% of paths failing aborts the
/// whole run, per the path-error design contract.
void enforce_failure_budget(const TrajectorySet& set) {
    const double frac =
        static_cast<double>(set.failed_paths().size()) /
        static_cast<double>(set.paths());
    if (frac > 1e-3) {
        char msg[128];
        std::snprintf(msg, sizeof(msg),
                      "simulation aborted: %zu of %lld paths (%.3f%%) "
                      "produced non-finite states",
                      set.failed_paths().size(),
                      static_cast<long long>(set.paths()), 100.0 * frac);
        throw NumericalError(msg);
    }
}

/// Shared driver for the forward chains: `step` advances the state in
/// place and may throw (or produce non-finite values) to fail the path.
/// `init` runs once per path before the first step.
template <typename Init, typename StepFn>
void run_forward(TrajectorySet& set, std::uint64_t master_seed,
                 const SimulateOptions& options, Init&& init, StepFn&& step) {
    const Schedule& sched = set.schedule();
    const int d = set.dim();
    set.seeds_mut() =
        SeedManifest{master_seed, options.first_stream_id, set.paths()};
    auto failed = detail::run_paths(
        set.paths(), options.workers, [&](std::int64_t p) {
        rng::Stream stream(master_seed,
                           options.first_stream_id +
                               static_cast<std::uint64_t>(p));
        Vec cur = Vec::Zero(d);
        try {
            init(p, stream);
            if (set.has_step(0)) {
                set.state_mut(p, 0) = cur;
            }
            for (int k = 1; k <= sched.n; ++k) {
                step(p, k, cur, stream);
                if (!cur.allFinite()) {
                    throw NumericalError("non-finite state");
                }
                if (set.has_step(k)) {
                    set.state_mut(p, k) = cur;
                }
            }
            return true;
        } catch (const std::exception&) {
            fill_path_nan(set, p);
            return false;
        }
    });
    set.failed_paths_mut() = std::move(failed);
    enforce_failure_budget(set);
}

} // namespace

std::string process_kind_name(ProcessKind kind) {
    switch (kind) {
    case ProcessKind::kComparison:
        return "comparison";
    case ProcessKind::kSampler:
        return "sampler";
    case ProcessKind::kReverse:
        return "reverse";
    case ProcessKind::kConditionalRep:
        return "conditional_rep";
    case ProcessKind::kMomentMatched:
        return "moment_matched";
    }
    throw ConfigError("process_kind_name: unknown kind");
}

TrajectorySet::TrajectorySet(ProcessKind kind, const Schedule& schedule,
                             int dim, std::int64_t paths, StorageMode mode)
    : kind_(kind), schedule_(schedule), dim_(dim), paths_(paths),
      mode_(mode) {
    if (dim < 1 || dim > kMaxDim) {
        throw ConfigError("TrajectorySet: dimension out of range");
    }
    if (paths < 1) {
        throw ConfigError("TrajectorySet: paths must be >= 1");
    }
    if (mode_ == StorageMode::kFull) {
        stored_steps_.resize(static_cast<std::size_t>(schedule_.n) + 1);
        for (int k = 0; k <= schedule_.n; ++k) {
            stored_steps_[static_cast<std::size_t>(k)] = k;
        }
    } else {
        stored_steps_ = {0, schedule_.n};
    }
    states_.assign(static_cast<std::size_t>(paths_) * stored_steps_.size() *
                       static_cast<std::size_t>(dim_),
                   0.0);
    if (kind_ == ProcessKind::kComparison) {
        latent_x_.assign(
            static_cast<std::size_t>(paths_) * static_cast<std::size_t>(dim_),
            0.0);
    }
}

int TrajectorySet::slot_of_step(int k) const {
    if (mode_ == StorageMode::kFull) {
        return (k >= 0 && k <= schedule_.n) ? k : -1;
    }
    if (k == 0) {
        return 0;
    }
    if (k == schedule_.n) {
        return 1;
    }
    return -1;
}

Eigen::Map<const Vec> TrajectorySet::state(std::int64_t path, int k) const {
    const int slot = slot_of_step(k);
    if (path < 0 || path >= paths_ || slot < 0) {
        throw ConfigError("TrajectorySet::state: path or step not stored");
    }
    const std::size_t offset =
        (static_cast<std::size_t>(path) * stored_steps_.size() +
         static_cast<std::size_t>(slot)) *
        static_cast<std::size_t>(dim_);
    return Eigen::Map<const Vec>(states_.data() + offset, dim_);
}

Eigen::Map<Vec> TrajectorySet::state_mut(std::int64_t path, int k) {
    const int slot = slot_of_step(k);
    if (path < 0 || path >= paths_ || slot < 0) {
        throw ConfigError(
            "TrajectorySet::state_mut: path or step not stored");
    }
    const std::size_t offset =
        (static_cast<std::size_t>(path) * stored_steps_.size() +
         static_cast<std::size_t>(slot)) *
        static_cast<std::size_t>(dim_);
    return Eigen::Map<Vec>(states_.data() + offset, dim_);
}

Eigen::Map<const Vec> TrajectorySet::latent_x(std::int64_t path) const {
    if (latent_x_.empty() || path < 0 || path >= paths_) {
        throw ConfigError("TrajectorySet::latent_x: not available");
    }
    return Eigen::Map<const Vec>(
        latent_x_.data() +
            static_cast<std::size_t>(path) * static_cast<std::size_t>(dim_),
        dim_);
}

Eigen::Map<Vec> TrajectorySet::latent_x_mut(std::int64_t path) {
    if (latent_x_.empty() || path < 0 || path >= paths_) {
        throw ConfigError("TrajectorySet::latent_x_mut: not available");
    }
    return Eigen::Map<Vec>(
        latent_x_.data() +
            static_cast<std::size_t>(path) * static_cast<std::size_t>(dim_),
        dim_);
}

bool TrajectorySet::path_failed(std::int64_t path) const {
    return std::binary_search(failed_paths_.begin(), failed_paths_.end(),
                              path);
}

TrajectorySet simulate_comparison(const TargetModel& model,
                                  const Schedule& schedule,
                                  std::int64_t paths,
                                  std::uint64_t master_seed,
                                  const SimulateOptions& options) {
    const int d = model.dim();
    TrajectorySet set(ProcessKind::kComparison, schedule, d, paths,
                      pick_storage(schedule, d, paths, options));
    run_forward(
        set, master_seed, options,
        [&](std::int64_t p, rng::Stream& stream) {
            set.latent_x_mut(p) = sample_target(model, stream);
        },
        [&](std::int64_t p, int k, Vec& cur, rng::Stream& stream) {
            const double delta =
                schedule.increments[static_cast<std::size_t>(k - 1)];
            cur += delta * set.latent_x(p) +
                   std::sqrt(delta) * stream.standard_normal_vector(d);
        });
    return set;
}

TrajectorySet simulate_sampler(const TargetModel& model,
                               const EstimatorSpec& estimator,
                               const Schedule& schedule, std::int64_t paths,
                               std::uint64_t master_seed,
                               const SimulateOptions& options) {
    const int d = model.dim();
    // Surface structural config problems (wrong bias dimension, ...) before
    // any path runs; inside the loop an exception means a state-driven
    // failure of that path only.
    (void)evaluate_estimator(model, estimator, Vec::Zero(d), 0.0);
    TrajectorySet set(ProcessKind::kSampler, schedule, d, paths,
                      pick_storage(schedule, d, paths, options));
    run_forward(
        set, master_seed, options,
        [](std::int64_t, rng::Stream&) {},
        [&](std::int64_t, int k, Vec& cur, rng::Stream& stream) {
            const double delta =
                schedule.increments[static_cast<std::size_t>(k - 1)];
            const double t_prev =
                schedule.times[static_cast<std::size_t>(k - 1)];
            cur += delta * evaluate_estimator(model, estimator, cur, t_prev) +
                   std::sqrt(delta) * stream.standard_normal_vector(d);
        });
    return set;
}

TrajectorySet simulate_reverse(const TargetModel& model,
                               const Schedule& schedule, std::int64_t paths,
                               std::uint64_t master_seed,
                               const SimulateOptions& options) {
    const int d = model.dim();
    TrajectorySet set(ProcessKind::kReverse, schedule, d, paths,
                      pick_storage(schedule, d, paths, options));
    const int n = schedule.n;
    set.seeds_mut() =
        SeedManifest{master_seed, options.first_stream_id, paths};
    auto failed = detail::run_paths(
        paths, options.workers, [&](std::int64_t p) {
        rng::Stream stream(master_seed,
                           options.first_stream_id +
                               static_cast<std::uint64_t>(p));
        try {
            // endpoint: Y_n = t_n X + sqrt(t_n) N exactly
            const Vec x = sample_target(model, stream);
            const double T = schedule.horizon;
            Vec cur = T * x + std::sqrt(T) * stream.standard_normal_vector(d);
            if (set.has_step(n)) {
                set.state_mut(p, n) = cur;
            }
            // walk downward; B_k ~ N(0, delta_{k+1} I)
            for (int k = n - 1; k >= 1; --k) {
                const double t_k =
                    schedule.times[static_cast<std::size_t>(k)];
                const double t_next =
                    schedule.times[static_cast<std::size_t>(k + 1)];
                const double delta_next =
                    schedule.increments[static_cast<std::size_t>(k)];
                const Vec b = std::sqrt(delta_next) *
                              stream.standard_normal_vector(d);
                cur = (t_k / t_next) * cur + std::sqrt(t_k / t_next) * b;
                if (!cur.allFinite()) {
                    throw NumericalError("non-finite state");
                }
                if (set.has_step(k)) {
                    set.state_mut(p, k) = cur;
                }
            }
            if (set.has_step(0)) {
                set.state_mut(p, 0).setZero(); // t_0 = 0 collapses the chain
            }
            return true;
        } catch (const std::exception&) {
            fill_path_nan(set, p);
            return false;
        }
    });
    set.failed_paths_mut() = std::move(failed);
    enforce_failure_budget(set);
    return set;
}

TrajectorySet simulate_conditional_representation(
    const TargetModel& model, const Schedule& schedule, std::int64_t paths,
    std::uint64_t master_seed, const SimulateOptions& options) {
    const int d = model.dim();
    TrajectorySet set(ProcessKind::kConditionalRep, schedule, d, paths,
                      pick_storage(schedule, d, paths, options));
    run_forward(
        set, master_seed, options,
        [](std::int64_t, rng::Stream&) {},
        [&](std::int64_t, int k, Vec& cur, rng::Stream& stream) {
            const double delta =
                schedule.increments[static_cast<std::size_t>(k - 1)];
            const double t_prev =
                schedule.times[static_cast<std::size_t>(k - 1)];
            const Vec x_k = sample_posterior(model, cur, t_prev, stream);
            cur += delta * x_k +
                   std::sqrt(delta) * stream.standard_normal_vector(d);
        });
    return set;
}

TrajectorySet simulate_moment_matched(const TargetModel& model,
                                      const Schedule& schedule,
                                      std::int64_t paths,
                                      std::uint64_t master_seed,
                                      const KernelSpec& kernel,
                                      const SimulateOptions& options) {
    const int d = model.dim();
    TrajectorySet set(ProcessKind::kMomentMatched, schedule, d, paths,
                      pick_storage(schedule, d, paths, options));
    if (kernel.variant == KernelVariant::kGaussianMatched) {
        run_forward(
            set, master_seed, options,
            [](std::int64_t, rng::Stream&) {},
            [&](std::int64_t, int k, Vec& cur, rng::Stream& stream) {
                const double delta =
                    schedule.increments[static_cast<std::size_t>(k - 1)];
                const double t_prev =
                    schedule.times[static_cast<std::size_t>(k - 1)];
                const PosteriorStats post =
                    posterior_stats(model, cur, t_prev);
                // adapted noise: (delta^2 S + delta I)^{1/2}
                const Mat noise_cov =
                    delta * delta * post.covariance +
                    delta * Mat::Identity(d, d);
                const Mat root = psd_sqrt(noise_cov);
                cur += delta * post.mean +
                       root * stream.standard_normal_vector(d);
            });
    } else {
        run_forward(
            set, master_seed, options,
            [](std::int64_t, rng::Stream&) {},
            [&](std::int64_t, int k, Vec& cur, rng::Stream& stream) {
                const double delta =
                    schedule.increments[static_cast<std::size_t>(k - 1)];
                const double t_prev =
                    schedule.times[static_cast<std::size_t>(k - 1)];
                const Vec xhat =
                    sample_kernel(model, kernel, cur, t_prev, stream);
                cur += delta * xhat +
                       std::sqrt(delta) * stream.standard_normal_vector(d);
            });
    }
    return set;
}

ReverseDiagnostics reverse_diagnostics(const TargetModel& model,
                                       const Schedule& schedule,
                                       std::int64_t paths,
                                       std::uint64_t master_seed,
                                       const SimulateOptions& options) {
    if (schedule.n < 2) {
        throw ConfigError("reverse_diagnostics: requires n >= 2");
    }
    TrajectorySet fwd =
        simulate_comparison(model, schedule, paths, master_seed, options);
    if (fwd.storage() != StorageMode::kFull) {
        throw ConfigError(
            "reverse_diagnostics: needs full trajectories; raise the memory "
            "budget or reduce paths/n");
    }
    const int d = model.dim();
    const int n = schedule.n;
    const int nb = n - 1; // B_k for k = 1..n-1

    ReverseDiagnostics diag;
    diag.schedule = schedule;
    diag.dim = d;
    diag.paths = paths;
    diag.b_increments.assign(static_cast<std::size_t>(paths) *
                                 static_cast<std::size_t>(nb) *
                                 static_cast<std::size_t>(d),
                             std::numeric_limits<double>::quiet_NaN());
    diag.w_samples.assign(static_cast<std::size_t>(paths) *
                              static_cast<std::size_t>(n) *
                              static_cast<std::size_t>(d),
                          std::numeric_limits<double>::quiet_NaN());

    for (std::int64_t p = 0; p < paths; ++p) {
        if (fwd.path_failed(p)) {
            continue;
        }
        const auto x = fwd.latent_x(p);
        for (int m = 1; m <= n; ++m) {
            const double t_m = schedule.times[static_cast<std::size_t>(m)];
            const Vec w = fwd.state(p, m) - t_m * x;
            for (int i = 0; i < d; ++i) {
                diag.w_samples[(static_cast<std::size_t>(p) * n + (m - 1)) *
                                   d +
                               static_cast<std::size_t>(i)] = w[i];
            }
        }
        for (int k = 1; k <= nb; ++k) {
            const double t_k = schedule.times[static_cast<std::size_t>(k)];
            const double t_next =
                schedule.times[static_cast<std::size_t>(k + 1)];
            const Vec b = std::sqrt(t_next / t_k) * fwd.state(p, k) -
                          std::sqrt(t_k / t_next) * fwd.state(p, k + 1);
            for (int i = 0; i < d; ++i) {
                diag.b_increments[(static_cast<std::size_t>(p) * nb +
                                   (k - 1)) *
                                      d +
                                  static_cast<std::size_t>(i)] = b[i];
            }
        }
    }

    // two-pass covariance estimates with standard errors
    diag.cross_cov = Mat::Zero(nb, n);
    diag.cross_se = Mat::Zero(nb, n);
    diag.b_var.assign(static_cast<std::size_t>(nb), 0.0);
    diag.b_var_se.assign(static_cast<std::size_t>(nb), 0.0);

    auto b_at = [&](std::int64_t p, int k, int i) {
        return diag.b_increments[(static_cast<std::size_t>(p) * nb +
                                  (k - 1)) *
                                     d +
                                 static_cast<std::size_t>(i)];
    };
    auto w_at = [&](std::int64_t p, int m, int i) {
        return diag.w_samples[(static_cast<std::size_t>(p) * n + (m - 1)) *
                                  d +
                              static_cast<std::size_t>(i)];
    };

    std::vector<std::int64_t> ok;
    ok.reserve(static_cast<std::size_t>(paths));
    for (std::int64_t p = 0; p < paths; ++p) {
        if (!fwd.path_failed(p)) {
            ok.push_back(p);
        }
    }
    const double N = static_cast<double>(ok.size());
    if (N < 2) {
        throw NumericalError("reverse_diagnostics: too few surviving paths");
    }

    for (int k = 1; k <= nb; ++k) {
        // variance of B_k, coordinate-averaged
        long double var_acc = 0, var_e2 = 0;
        for (int i = 0; i < d; ++i) {
            long double mean = 0;
            for (std::int64_t p : ok) {
                mean += b_at(p, k, i);
            }
            mean /= N;
            long double m2 = 0, m4 = 0;
            for (std::int64_t p : ok) {
                const long double c = b_at(p, k, i) - mean;
                m2 += c * c;
                m4 += c * c * c * c;
            }
            m2 /= N;
            m4 /= N;
            var_acc += m2;
            var_e2 += (m4 - m2 * m2) / N; // variance of the variance estimate
        }
        diag.b_var[static_cast<std::size_t>(k - 1)] =
            static_cast<double>(var_acc / d);
        diag.b_var_se[static_cast<std::size_t>(k - 1)] =
            static_cast<double>(sqrtl(var_e2) / d);

        for (int m = 1; m <= n; ++m) {
            long double cov_acc = 0, se2_acc = 0;
            for (int i = 0; i < d; ++i) {
                long double mb = 0, mw = 0;
                for (std::int64_t p : ok) {
                    mb += b_at(p, k, i);
                    mw += w_at(p, m, i);
                }
                mb /= N;
                mw /= N;
                long double s1 = 0, s2 = 0;
                for (std::int64_t p : ok) {
                    const long double prod = (b_at(p, k, i) - mb) *
                                             (w_at(p, m, i) - mw);
                    s1 += prod;
                    s2 += prod * prod;
                }
                const long double cov = s1 / N;
                cov_acc += cov;
                se2_acc += (s2 / N - cov * cov) / N;
            }
            diag.cross_cov(k - 1, m - 1) = static_cast<double>(cov_acc / d);
            diag.cross_se(k - 1, m - 1) =
                static_cast<double>(sqrtl(se2_acc) / d);
        }
    }
    return diag;
}

void write_trajectories_csv(const TrajectorySet& set, std::ostream& out) {
    out << "path,k,t";
    for (int i = 0; i < set.dim(); ++i) {
        out << ",coord" << i;
    }
    out << "\n";
    char buf[32];
    for (std::int64_t p = 0; p < set.paths(); ++p) {
        for (int k : set.stored_steps()) {
            out << p << ',' << k;
            std::snprintf(buf, sizeof(buf), "%.17g",
                          set.schedule().times[static_cast<std::size_t>(k)]);
            out << ',' << buf;
            const auto s = set.state(p, k);
            for (int i = 0; i < set.dim(); ++i) {
                std::snprintf(buf, sizeof(buf), "%.17g", s[i]);
                out << ',' << buf;
            }
            out << "\n";
        }
    }
}

} // namespace samplab
