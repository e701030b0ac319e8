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

#include "samplab/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include <json.hpp>

#include "samplab/errors.hpp"

namespace samplab {

namespace {

void require_horizon_steps(double T, int n, const char* where) {
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw ConfigError(std::string(where) +
                          ": horizon T must be finite and > 0");
    }
    if (n < 1) {
        throw ConfigError(std::string(where) + ": step count n must be >= 1");
    }
}

/// Rebuild times as a cumulative sum of the increments, pinning t_0 = 0 and
/// t_n = T exactly.  The accumulated floating-point rounding (order eps*T)
/// is absorbed by the largest increment — for the smallest one it could be a
/// large *relative* perturbation and would break the geometric ratio
/// property.  Ties take the last maximal step, so uniform grids absorb into
/// the final step.
void finalize_times(Schedule& s) {
    const std::size_t n = s.increments.size();
    std::size_t widest = 0;
    long double total = 0.0L;
    for (std::size_t k = 0; k < n; ++k) {
        total += s.increments[k];
        if (s.increments[k] >= s.increments[widest]) {
            widest = k;
        }
    }
    s.increments[widest] = static_cast<double>(
        s.increments[widest] + (static_cast<long double>(s.horizon) - total));
    s.times.assign(n + 1, 0.0);
    long double acc = 0.0L;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        acc += s.increments[k];
        s.times[k + 1] = static_cast<double>(acc);
    }
    s.times[n] = s.horizon;
    for (std::size_t k = 0; k < n; ++k) {
        if (!(s.times[k + 1] > s.times[k]) || !(s.increments[k] > 0.0)) {
            throw NumericalError(
                "schedule construction: adjacent times are not strictly "
                "increasing at double precision (steps crowd together "
                "faster than the representable spacing); reduce n or move "
                "alpha toward 1");
        }
    }
}

} // namespace

double Schedule::delta_max() const {
    double m = 0.0;
    for (double d : increments) {
        m = std::max(m, d);
    }
    return m;
}

Schedule uniform_schedule(double T, int n) {
    require_horizon_steps(T, n, "uniform_schedule");
    Schedule s;
    s.horizon = T;
    s.n = n;
    s.family = ScheduleFamily::kUniform;
    s.alpha = 1.0;
    s.increments.assign(static_cast<std::size_t>(n), T / n);
    finalize_times(s);
    return s;
}

Schedule geometric_schedule(double T, int n, double alpha) {
    require_horizon_steps(T, n, "geometric_schedule");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ConfigError("geometric_schedule: alpha must be finite and > 0");
    }
    if (std::abs(alpha - 1.0) <= 1e-9) {
        // The ratio formula degenerates to 0/0 at alpha = 1; its limit is the
        // uniform grid, which we return directly to avoid cancellation.
        return uniform_schedule(T, n);
    }
    Schedule s;
    s.horizon = T;
    s.n = n;
    s.family = ScheduleFamily::kGeometric;
    s.alpha = alpha;
    s.increments.resize(static_cast<std::size_t>(n));

    // delta_k = T * alpha^{k-1} (alpha - 1)/(alpha^n - 1).  With l = ln alpha
    // and using expm1(x) = e^x - 1,
    //   delta_k = -T * e^{(k-1-n) l} * expm1(l) / expm1(-n l),
    // which stays inside double range for l > 0 even when alpha^n overflows.
    // For alpha < 1 the same exponent becomes large and positive, so we
    // compute the mirrored ratio 1/alpha (l > 0) and reverse the increments;
    // this also makes the reversal identity between alpha and 1/alpha hold
    // bit-for-bit.
    const bool mirrored = alpha < 1.0;
    const double l = std::log(mirrored ? 1.0 / alpha : alpha);
    const double scale = -T * std::expm1(l) / std::expm1(-n * l);
    for (int k = 1; k <= n; ++k) {
        const double d = scale * std::exp((k - 1 - n) * l);
        s.increments[mirrored ? static_cast<std::size_t>(n - k)
                              : static_cast<std::size_t>(k - 1)] = d;
        if (!(d > 0.0) || !std::isfinite(d)) {
            throw NumericalError(
                "geometric_schedule: step size underflowed to zero; the "
                "requested (T, n, alpha) combination is too extreme");
        }
    }
    finalize_times(s);
    return s;
}

Schedule explicit_schedule(const std::vector<double>& times) {
    if (times.size() < 2) {
        throw ConfigError(
            "explicit_schedule: need at least two time points (t_0 and t_1)");
    }
    if (times[0] != 0.0) {
        throw ConfigError("explicit_schedule: times must start at exactly 0");
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!std::isfinite(times[k])) {
            throw ConfigError("explicit_schedule: times must be finite");
        }
        if (k > 0 && !(times[k] > times[k - 1])) {
            throw ConfigError(
                "explicit_schedule: times must be strictly increasing");
        }
    }
    Schedule s;
    s.times = times;
    s.horizon = times.back();
    s.n = static_cast<int>(times.size()) - 1;
    s.family = ScheduleFamily::kExplicit;
    s.alpha = 1.0;
    s.increments.resize(static_cast<std::size_t>(s.n));
    for (int k = 1; k <= s.n; ++k) {
        s.increments[static_cast<std::size_t>(k - 1)] =
            times[static_cast<std::size_t>(k)] -
            times[static_cast<std::size_t>(k - 1)];
    }
    return s;
}

double corollary_alpha(double T, int n) {
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw ConfigError("corollary_alpha: T must be finite and > 0");
    }
    if (n < 1) {
        throw ConfigError("corollary_alpha: n must be >= 1");
    }
    const double tlogt = T * std::log(T);
    if (!(tlogt > 1.0)) {
        throw ConfigError(
            "corollary_alpha: requires T * ln(T) > 1 so the ratio exceeds 1");
    }
    return std::exp(std::log(tlogt) / n);
}

Schedule schedule_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ConfigError("schedule config must be a JSON object");
    }
    const std::string family = j.value("family", std::string("uniform"));
    if (family == "explicit") {
        if (!j.contains("times") || !j["times"].is_array()) {
            throw ConfigError(
                "explicit schedule config requires a \"times\" array");
        }
        std::vector<double> times;
        for (const auto& v : j["times"]) {
            if (!v.is_number()) {
                throw ConfigError("schedule times must be numbers");
            }
            times.push_back(v.get<double>());
        }
        return explicit_schedule(times);
    }
    if (!j.contains("T") || !j["T"].is_number()) {
        throw ConfigError("schedule config requires numeric \"T\"");
    }
    if (!j.contains("n") || !j["n"].is_number_integer()) {
        throw ConfigError("schedule config requires integer \"n\"");
    }
    const double T = j["T"].get<double>();
    const int n = j["n"].get<int>();
    if (family == "uniform") {
        return uniform_schedule(T, n);
    }
    if (family == "geometric") {
        if (!j.contains("alpha") || !j["alpha"].is_number()) {
            throw ConfigError(
                "geometric schedule config requires numeric \"alpha\"");
        }
        return geometric_schedule(T, n, j["alpha"].get<double>());
    }
    throw ConfigError("unknown schedule family: " + family);
}

nlohmann::json schedule_to_json(const Schedule& s) {
    nlohmann::json j;
    j["family"] = schedule_family_name(s.family);
    switch (s.family) {
    case ScheduleFamily::kUniform:
        j["T"] = s.horizon;
        j["n"] = s.n;
        break;
    case ScheduleFamily::kGeometric:
        j["T"] = s.horizon;
        j["n"] = s.n;
        j["alpha"] = s.alpha;
        break;
    case ScheduleFamily::kExplicit:
        j["times"] = s.times;
        break;
    }
    return j;
}

std::string schedule_family_name(ScheduleFamily family) {
    switch (family) {
    case ScheduleFamily::kUniform:
        return "uniform";
    case ScheduleFamily::kGeometric:
        return "geometric";
    case ScheduleFamily::kExplicit:
        return "explicit";
    }
    throw ConfigError("schedule_family_name: unknown family");
}

} // namespace samplab
