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

#ifndef SAMPLAB_SCHEDULES_HPP_
#define SAMPLAB_SCHEDULES_HPP_

#include <string>
#include <vector>

#include <json.hpp>

namespace samplab {

/// How a time grid was constructed.  Geometric grids carry their ratio so
/// downstream rate bounds can be evaluated without re-fitting it.
enum class ScheduleFamily {
    kUniform,
    kGeometric,
    kExplicit,
};

/// A discretization 0 = t_0 < t_1 < ... < t_n = T of the simulation horizon,
/// together with the step sizes delta_k = t_k - t_{k-1}.  Immutable value
/// type; construct through the factory functions below, which enforce the
/// invariants (strictly increasing times, positive steps, steps summing to
/// the horizon).
struct Schedule {
    std::vector<double> times;      ///< t_0..t_n, with t_0 = 0 and t_n = T
    std::vector<double> increments; ///< delta_1..delta_n (size n)
    double horizon = 0.0;           ///< T
    int n = 0;                      ///< number of steps
    ScheduleFamily family = ScheduleFamily::kExplicit;
    double alpha = 1.0; ///< step-size ratio; meaningful for kGeometric only

    /// Largest step size, max_k delta_k.
    double delta_max() const;
};

/// Equal steps delta_k = T/n.  The final time is pinned to exactly T (the
/// last increment absorbs any accumulated rounding).
Schedule uniform_schedule(double T, int n);

/// Geometric steps with ratio alpha: t_k = T(alpha^k - 1)/(alpha^n - 1),
/// so delta_{k+1} = alpha * delta_k.  Values of alpha within 1e-9 of 1 are
/// routed to uniform_schedule — the formula's exact limit there — because
/// the direct expression suffers catastrophic cancellation near alpha = 1.
/// Computed in expm1-based form so that extreme ratios (say alpha = 2 with
/// n = 512) neither overflow nor lose precision.
Schedule geometric_schedule(double T, int n, double alpha);

/// A schedule from an explicit strictly increasing time vector starting at
/// exactly 0.  The horizon is the last entry.
Schedule explicit_schedule(const std::vector<double>& times);

/// The horizon-dependent ratio alpha = (T * ln T)^{1/n} used by the
/// geometric-schedule rate analysis.  Requires T * ln T > 1 so the root is
/// well defined and exceeds 1.
double corollary_alpha(double T, int n);

/// Parse a schedule from a config object such as
///   {"family": "geometric", "T": 10.0, "n": 128, "alpha": 1.05}
/// or {"family": "explicit", "times": [0.0, 0.5, 2.0]}.
Schedule schedule_from_json(const nlohmann::json& j);

/// Canonical JSON form; round-trips through schedule_from_json.
nlohmann::json schedule_to_json(const Schedule& s);

/// Human-readable family name ("uniform", "geometric", "explicit").
std::string schedule_family_name(ScheduleFamily family);

} // namespace samplab

#endif // SAMPLAB_SCHEDULES_HPP_
