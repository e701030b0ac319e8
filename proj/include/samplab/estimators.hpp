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

#ifndef SAMPLAB_ESTIMATORS_HPP_
#define SAMPLAB_ESTIMATORS_HPP_

#include <string>

#include <json.hpp>

#include "samplab/linalg.hpp"
#include "samplab/rng.hpp"
#include "samplab/targets.hpp"

namespace samplab {

/// Drift families for the discretized sampler: perturbations of the
/// conditional-mean estimator with known, analytically tractable error.
enum class EstimatorVariant {
    kExactPosteriorMean, ///< f(y, t) = E[X | Y_t = y]
    kBiased,             ///< f(y, t) = E[X | Y_t = y] + b
    kScaled,             ///< f(y, t) = c * E[X | Y_t = y]
    kZero,               ///< f(y, t) = 0
};

/// Plain-data description of a drift function.  The target model is passed
/// explicitly to evaluation so one spec can be reused across models of the
/// same dimension and the spec itself stays trivially serializable.
struct EstimatorSpec {
    EstimatorVariant variant = EstimatorVariant::kExactPosteriorMean;
    Vec bias;           ///< used by kBiased; dimension must match the model
    double scale = 1.0; ///< used by kScaled

    static EstimatorSpec exact();
    static EstimatorSpec biased(const Vec& b);
    static EstimatorSpec scaled(double c);
    static EstimatorSpec zero();

    /// Parse from config, e.g. {"variant": "biased", "bias": [0.5]} or
    /// {"variant": "scaled", "factor": 0.9}.  `dim` fixes the bias length
    /// (a scalar bias entry broadcasts across coordinates).
    static EstimatorSpec from_json(const nlohmann::json& j, int dim);
    nlohmann::json to_json() const;

    /// Canonical variant name ("exact_posterior_mean", "biased", ...).
    std::string label() const;
};

/// Stochastic transition kernels approximating the conditional law of X:
/// the exact posterior, its Gaussian two-moment match, and the degenerate
/// mean-only (one-moment) kernel.
enum class KernelVariant {
    kPosteriorExact,
    kGaussianMatched,
    kMeanOnly,
};

struct KernelSpec {
    KernelVariant variant = KernelVariant::kPosteriorExact;

    static KernelSpec posterior_exact();
    static KernelSpec gaussian_matched();
    static KernelSpec mean_only();

    static KernelSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    std::string label() const;
};

/// Evaluate the drift f(y, t) for the given spec.  Throws ConfigError for
/// non-finite y, negative t, or a bias whose dimension does not match.
Vec evaluate_estimator(const TargetModel& model, const EstimatorSpec& spec,
                       const Vec& y, double t);

/// Draw one step from the kernel given state z at signal level t.
///   posterior_exact  — a draw from P(X | Y_t = z)
///   gaussian_matched — a draw from N(posterior mean, posterior covariance)
///   mean_only        — the posterior mean, deterministically (the stream
///                      is not consumed)
Vec sample_kernel(const TargetModel& model, const KernelSpec& spec,
                  const Vec& z, double t, rng::Stream& stream);

/// Score (gradient of the log density) of the observation a*X + sigma*N at
/// y, computed through the conditional mean:
///   score(y) = (a * E[X | a X + sigma N = y] - y) / sigma^2.
/// Requires sigma > 0; a may be any finite value (a = 0 degenerates to the
/// pure-noise score -y/sigma^2).
Vec tweedie_score(const TargetModel& model, const Vec& y, double a,
                  double sigma);

} // namespace samplab

#endif // SAMPLAB_ESTIMATORS_HPP_
