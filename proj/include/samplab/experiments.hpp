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

#ifndef SAMPLAB_EXPERIMENTS_HPP_
#define SAMPLAB_EXPERIMENTS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "samplab/divergence.hpp"
#include "samplab/estimators.hpp"
#include "samplab/schedules.hpp"
#include "samplab/targets.hpp"

namespace samplab {

/// Library/tool version string (also returned by the C API).
const char* tool_version();

/// The experiment kinds the orchestrator knows how to run.  Names accept
/// both the underscore form used in config files ("rate_study") and the
/// dashed subcommand form ("rate-study").
enum class ExperimentKind {
    kDivergence,
    kRateStudy,
    kScheduleSweep,
    kReverseCheck,
    kTweedieCheck,
    kFigure1,
};

ExperimentKind experiment_kind_from_name(const std::string& name);
std::string experiment_kind_name(ExperimentKind kind);

/**
 * One fully resolved experiment description.  Parsed from a single JSON
 * document; every default is materialized into `resolved`, whose canonical
 * (key-sorted) serialization feeds the manifest digest — so two documents
 * with the same content in different key orders run and hash identically.
 *
 * Top-level schema (kind-specific keys are ignored by other kinds):
 *   experiment  one of divergence | rate_study | schedule_sweep |
 *               reverse_check | tweedie_check | figure1
 *   target      target-model object (see TargetModel::from_json)
 *   schedule    schedule object; required by divergence / reverse_check /
 *               figure1 (rate_study and schedule_sweep build their own grids)
 *   estimator   drift object, default {"variant": "exact_posterior_mean"}
 *   kernel      kernel object; required by rate_study with order 2
 *   paths       Monte Carlo paths (default 100000; 0 disables MC where
 *               it is optional)
 *   seed        master seed (default 0)
 *   workers     worker threads for path-parallel stages (default 1)
 *   out         output directory (default "runs/<experiment>")
 *   quadrature  {gh_order, simpson_tol, mc_samples, mc_seed} overrides
 *   T           horizon for rate_study / schedule_sweep (default 1.0)
 *   n_grid      rate_study step counts (default [8,16,...,512])
 *   order       rate_study fit order, 1 (exact) or 2 (kernel MC); default 1
 *   n           schedule_sweep step count (default 16)
 *   alpha_grid  schedule_sweep ratios (default: a small grid around 1 plus
 *               the horizon-dependent ratio when defined)
 *   time        tweedie_check observation time t (default 1.0)
 *   y_min/y_max/y_points   tweedie_check grid (default -5/5/201)
 *   tolerance   tweedie_check max allowed deviation (default 1e-4)
 *   curve_points  figure1 curve resolution (default 201)
 *   save_trajectories  divergence: also write this many comparison paths
 *               to trajectories.csv (default 0)
 */
struct RunConfig {
    ExperimentKind kind = ExperimentKind::kDivergence;
    TargetModel target = TargetModel::isotropic_gaussian(Vec::Zero(1), 1.0);
    std::optional<Schedule> schedule;
    EstimatorSpec estimator;
    std::optional<KernelSpec> kernel;
    std::int64_t paths = 100000;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out_dir;
    QuadratureConfig quad;

    double horizon = 1.0;
    std::vector<int> n_grid = {8, 16, 32, 64, 128, 256, 512};
    int order = 1;

    int sweep_n = 16;
    std::vector<double> alpha_grid;

    double time = 1.0;
    double y_min = -5.0;
    double y_max = 5.0;
    int y_points = 201;
    double tolerance = 1e-4;

    int curve_points = 201;
    std::int64_t save_trajectories = 0;

    /// Canonical form with all defaults applied; input-key-order invariant.
    nlohmann::json resolved;
};

/// Validate and resolve a config document.  Throws ConfigError on unknown
/// top-level keys, missing required fields, or out-of-range values.
RunConfig parse_run_config(const nlohmann::json& config);

/// FNV-1a 64-bit digest (hex) of the canonical serialization.
std::string config_digest(const nlohmann::json& canonical);

/// Outcome of one invariant/statistical check performed during a run.
struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// What a run produced.  exit_code follows the tool contract: 0 all checks
/// pass, 2 at least one check failed; 3/4/1 are produced only by the
/// run_experiment_text wrapper below (config / numerical / unexpected).
struct RunResult {
    int exit_code = 0;
    std::string summary;             ///< human-readable result lines
    std::string error;               ///< nonempty when exit_code != 0
    std::vector<CheckResult> checks;
    nlohmann::json manifest;         ///< copy of the persisted manifest.json
};

/// Run one experiment, writing results.csv, manifest.json and any extra
/// outputs (curve.csv, figure1.svg, trajectories.csv) under
/// config.out_dir.  Rerunning with an identical config produces
/// byte-identical CSVs.  Throws ConfigError / NumericalError.
RunResult run_experiment(const RunConfig& config);

/// Command-line style overrides applied on top of the config document
/// before parsing (each one replaces the matching top-level key).
struct RunOverrides {
    std::optional<std::string> experiment;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> paths;
    std::optional<int> workers;
};

/// Parse config text, apply overrides, and run, translating exceptions to
/// the exit-code contract (3 config error, 4 numerical failure,
/// 1 unexpected) with the message in `error`.
RunResult run_experiment_text(const std::string& config_text,
                              const RunOverrides& overrides);

/// Round-trip decimal formatting used for every CSV number.
std::string format_double(double value);

} // namespace samplab

#endif // SAMPLAB_EXPERIMENTS_HPP_
