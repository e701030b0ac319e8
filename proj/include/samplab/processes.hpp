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

#ifndef SAMPLAB_PROCESSES_HPP_
#define SAMPLAB_PROCESSES_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "samplab/estimators.hpp"
#include "samplab/linalg.hpp"
#include "samplab/schedules.hpp"
#include "samplab/targets.hpp"

namespace samplab {

/// Which recursion produced a trajectory set.
enum class ProcessKind {
    kComparison,     ///< Y_k = Y_{k-1} + delta_k X + sqrt(delta_k) N_k
    kSampler,        ///< Z_k = Z_{k-1} + delta_k f(Z_{k-1}, t_{k-1}) + noise
    kReverse,        ///< downward chain from Y_n with independent B_k
    kConditionalRep, ///< X_k redrawn from the posterior at each step
    kMomentMatched,  ///< kernel draw (or matched-Gaussian noise) per step
};

std::string process_kind_name(ProcessKind kind);

/// Provenance of every random draw in a trajectory set: path p uses the
/// counter-based stream (master_seed, first_stream_id + p), so any path can
/// be regenerated in isolation and results are independent of worker count.
/// Ensembles that must be statistically independent (e.g. the two groups of
/// a two-sample test) should use different master seeds.
struct SeedManifest {
    std::uint64_t master_seed = 0;
    std::uint64_t first_stream_id = 0;
    std::int64_t paths = 0;
};

/// Simulation tuning knobs.  `memory_budget_doubles` caps the states array;
/// when paths*(n+1)*d exceeds it, only the k = 0 and k = n marginals are
/// stored (each simulator still runs every step).  Consumers that need the
/// full trajectory should check storage() first.
struct SimulateOptions {
    int workers = 1;
    std::size_t memory_budget_doubles = std::size_t{1} << 26; // 512 MiB
    /// Stream id of path 0 (path p uses first_stream_id + p).  Lets a
    /// caller split one logical ensemble into memory-bounded chunks whose
    /// paths still draw from disjoint streams of the same master seed.
    std::uint64_t first_stream_id = 0;
};

/// How much of the trajectory a TrajectorySet retains.
enum class StorageMode {
    kFull,      ///< all steps 0..n
    kEndpoints, ///< only k = 0 and k = n
};

/// Simulated paths of one process.  States are stored row-major as
/// [path][stored step][coordinate]; `stored_steps()` lists which k indices
/// are present (all of 0..n in kFull mode).  Paths whose dynamics produced
/// non-finite values are listed in `failed_paths` (sorted) and their states
/// are NaN-filled; simulation throws once failures exceed 0.1% of paths.
class TrajectorySet {
  public:
    TrajectorySet(ProcessKind kind, const Schedule& schedule, int dim,
                  std::int64_t paths, StorageMode mode);

    ProcessKind kind() const { return kind_; }
    const Schedule& schedule() const { return schedule_; }
    int dim() const { return dim_; }
    std::int64_t paths() const { return paths_; }
    StorageMode storage() const { return mode_; }
    const std::vector<int>& stored_steps() const { return stored_steps_; }

    /// View of the state of path p at step k.  Throws ConfigError if k is
    /// not stored under the current storage mode.
    Eigen::Map<const Vec> state(std::int64_t path, int k) const;
    Eigen::Map<Vec> state_mut(std::int64_t path, int k);
    bool has_step(int k) const { return slot_of_step(k) >= 0; }

    /// Latent X of path p; present only for the comparison process.
    Eigen::Map<const Vec> latent_x(std::int64_t path) const;
    Eigen::Map<Vec> latent_x_mut(std::int64_t path);
    bool has_latent_x() const { return !latent_x_.empty(); }

    const SeedManifest& seeds() const { return seeds_; }
    SeedManifest& seeds_mut() { return seeds_; }

    const std::vector<std::int64_t>& failed_paths() const {
        return failed_paths_;
    }
    std::vector<std::int64_t>& failed_paths_mut() { return failed_paths_; }
    bool path_failed(std::int64_t path) const;

  private:
    int slot_of_step(int k) const;

    ProcessKind kind_;
    Schedule schedule_;
    int dim_;
    std::int64_t paths_;
    StorageMode mode_;
    std::vector<int> stored_steps_;
    std::vector<double> states_;
    std::vector<double> latent_x_;
    SeedManifest seeds_;
    std::vector<std::int64_t> failed_paths_;
};

/// Forward comparison process: one X ~ mu per path, then
/// Y_k = Y_{k-1} + delta_k X + sqrt(delta_k) N_k from Y_0 = 0.
/// Stream usage per path: the X draw, then one d-vector of noise per step.
TrajectorySet simulate_comparison(const TargetModel& model,
                                  const Schedule& schedule,
                                  std::int64_t paths,
                                  std::uint64_t master_seed,
                                  const SimulateOptions& options = {});

/// Plug-in sampler: Z_k = Z_{k-1} + delta_k f(Z_{k-1}, t_{k-1})
/// + sqrt(delta_k) N_k from Z_0 = 0.  The drift is deterministic, so each
/// path consumes exactly one d-vector of noise per step.
TrajectorySet simulate_sampler(const TargetModel& model,
                               const EstimatorSpec& estimator,
                               const Schedule& schedule, std::int64_t paths,
                               std::uint64_t master_seed,
                               const SimulateOptions& options = {});

/// Time-reversed chain: Y_n = t_n X + sqrt(t_n) N exactly, then
/// Y_k = (t_k/t_{k+1}) Y_{k+1} + sqrt(t_k/t_{k+1}) B_k with independent
/// B_k ~ N(0, delta_{k+1} I), ending at Y_0 = 0.
TrajectorySet simulate_reverse(const TargetModel& model,
                               const Schedule& schedule, std::int64_t paths,
                               std::uint64_t master_seed,
                               const SimulateOptions& options = {});

/// Conditional-representation chain: X_k ~ P(X | Y_{k-1}, t_{k-1}) redrawn
/// each step, then Y_k = Y_{k-1} + delta_k X_k + sqrt(delta_k) N_k.
/// Distributed identically to the comparison process.
TrajectorySet simulate_conditional_representation(
    const TargetModel& model, const Schedule& schedule, std::int64_t paths,
    std::uint64_t master_seed, const SimulateOptions& options = {});

/// Kernel-driven sampler.  For posterior_exact and mean_only kernels:
/// Z_k = Z_{k-1} + delta_k Xhat_k + sqrt(delta_k) N_k with Xhat_k drawn
/// from the kernel (mean_only consumes no kernel randomness, making it
/// bitwise identical to simulate_sampler with the exact estimator).  For
/// gaussian_matched the noise covariance is adapted:
/// Z_k = Z_{k-1} + delta_k m_k + (delta_k^2 S_k + delta_k I)^{1/2} N_k
/// where (m_k, S_k) are the posterior mean and covariance at Z_{k-1}.
TrajectorySet simulate_moment_matched(const TargetModel& model,
                                      const Schedule& schedule,
                                      std::int64_t paths,
                                      std::uint64_t master_seed,
                                      const KernelSpec& kernel,
                                      const SimulateOptions& options = {});

/// Estimated cross-covariances between the reverse-chain innovations
/// B_k = sqrt(t_{k+1}/t_k) Y_k - sqrt(t_k/t_{k+1}) Y_{k+1} (k = 1..n-1)
/// and the Gaussian-walk component W_m = Y_m - t_m X (m = 1..n) of
/// forward-simulated comparison paths, with matching standard errors.
/// Entries with m > k estimate quantities that are exactly zero.
struct ReverseDiagnostics {
    Schedule schedule;
    int dim = 0;
    std::int64_t paths = 0;
    /// Raw draws, coordinate-flattened: [path][k-1][coord], k = 1..n-1.
    std::vector<double> b_increments;
    /// Raw walk samples: [path][m-1][coord], m = 1..n.
    std::vector<double> w_samples;
    /// cross_cov(k-1, m-1) = covariance of B_k and W_m averaged over
    /// coordinates; cross_se holds its standard error.
    Mat cross_cov;
    Mat cross_se;
    /// Per-k variance of B_k (coordinate-averaged) with standard error;
    /// the expected value is delta_{k+1}.
    std::vector<double> b_var;
    std::vector<double> b_var_se;
};

ReverseDiagnostics reverse_diagnostics(const TargetModel& model,
                                       const Schedule& schedule,
                                       std::int64_t paths,
                                       std::uint64_t master_seed,
                                       const SimulateOptions& options = {});

/// Write stored steps as CSV with header `path,k,t,coord0,...,coord{d-1}`.
void write_trajectories_csv(const TrajectorySet& set, std::ostream& out);

} // namespace samplab

#endif // SAMPLAB_PROCESSES_HPP_
