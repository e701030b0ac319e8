/*
   Copyright 2026 The samplab authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "samplab/linalg.hpp"
#include "samplab/rng.hpp"

namespace samplab {

/**
 * Target distributions with exact posterior statistics under the observation
 * model Y(t) = t·X + √t·N, N ~ N(0, I) independent of X.
 *
 * Conditioning on Y(t) = y tilts the prior by exp{⟨x, y⟩ − t‖x‖²/2} (the
 * Gaussian likelihood in natural parameters), which stays in closed form for
 * every family below:
 *
 *   - IsotropicGaussian(m, v):   posterior N((m + v·y)/(1 + t·v),
 *                                            v/(1 + t·v)·I)
 *   - DiagonalGaussian(m, v_i):  the same per coordinate
 *   - GaussianMixture (isotropic components): mixture of the per-component
 *     posteriors with reweighted responsibilities
 *   - AtomMixture: discrete posterior over the atoms
 *
 * The same channel at signal-to-noise s is √s·X + N; an observation y' of it
 * maps to (y, t) = (√s·y', s), which is how mmse() and the score map reuse
 * posterior_stats().
 */
enum class TargetKind {
    kIsotropicGaussian,
    kDiagonalGaussian,
    kGaussianMixture,
    kAtomMixture,
};

struct IsotropicGaussian {
    Vec mean;
    double variance = 1.0;
};

struct DiagonalGaussian {
    Vec mean;
    Vec variances;
};

/// Mixture of isotropic Gaussian components N(mean_j, variance_j · I).
struct GaussianMixture {
    Weights weights;
    std::vector<Vec> means;
    std::vector<double> variances;
};

/// Discrete distribution on finitely many points.
struct AtomMixture {
    Weights weights;
    std::vector<Vec> atoms;
};

/// Exact conditional mean/covariance of X given Y(t) = y.
struct PosteriorStats {
    Vec mean;
    Mat covariance;          ///< symmetric PSD
    Weights responsibilities; ///< per-component posterior weights (size 1 for
                              ///< plain Gaussians)
};

/// MMSE value with the statistical error of its computation (0 unless the
/// Monte Carlo fallback was used).
struct MmseValue {
    double value = 0.0;
    double std_error = 0.0;
};

/// Knobs for the quadrature/Monte Carlo backends of mmse() and
/// mutual_information().
struct QuadratureConfig {
    int gh_order = 64;              ///< Gauss–Hermite order for d = 1 mixtures
    double simpson_tol = 1e-8;      ///< absolute tolerance for ∫ M
    std::uint64_t mc_samples = 200'000; ///< Monte Carlo fallback sample count
    std::uint64_t mc_seed = 0;      ///< master seed of the fallback stream
};

class TargetModel {
public:
    static TargetModel isotropic_gaussian(Vec mean, double variance);
    static TargetModel diagonal_gaussian(Vec mean, Vec variances);
    static TargetModel gaussian_mixture(const std::vector<double>& weights,
                                        std::vector<Vec> means,
                                        std::vector<double> variances);
    static TargetModel atom_mixture(const std::vector<double>& weights,
                                    std::vector<Vec> atoms);

    /// Parse `{"kind": "...", "dim": d, ...}` (see README for the schema).
    static TargetModel from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    TargetKind kind() const { return kind_; }
    int dim() const { return dim_; }
    int component_count() const;
    /// Short CSV-safe name, e.g. "gaussian_mixture".
    std::string label() const;

    Vec prior_mean() const;
    Mat prior_cov() const;
    double trace_cov() const;
    /// E‖X‖² = tr(cov X) + ‖E X‖².
    double second_moment() const;
    /// True when X is almost surely constant (single atom): M ≡ 0, I ≡ 0.
    bool is_deterministic() const;
    /// True when mmse() evaluates in closed form (Gaussian variants and
    /// single atoms).
    bool has_closed_form_mmse() const;

    /**
     * Smallest documented L with ∫ exp(‖x‖²/L²) dμ ≤ 2 (sub-Gaussian
     * normalization).  Closed form R/√log2 for atom supports of radius R
     * (0 for a point mass at the origin); bisection on the analytic Gaussian
     * integral otherwise.
     */
    double sub_gaussian_constant() const;

    const std::variant<IsotropicGaussian, DiagonalGaussian, GaussianMixture,
                       AtomMixture>&
    data() const {
        return data_;
    }

private:
    TargetModel() = default;
    TargetKind kind_ = TargetKind::kIsotropicGaussian;
    int dim_ = 0;
    std::variant<IsotropicGaussian, DiagonalGaussian, GaussianMixture,
                 AtomMixture>
        data_;
};

/// One draw X ~ μ.  Consumes: mixtures 1 block for the component choice,
/// Gaussian families ⌈d/2⌉ blocks for the coordinates.
Vec sample_target(const TargetModel& model, rng::Stream& stream);

/**
 * Exact posterior mean/covariance/responsibilities of X given Y(t) = y.
 * t = 0 returns the prior (Y(0) = 0 carries no information; y is ignored).
 * Rejects non-finite y and negative t.
 */
PosteriorStats posterior_stats(const TargetModel& model, const Vec& y,
                               double t);

/// One exact draw from the posterior of X given Y(t) = y (Gaussian draw for
/// Gaussian families, categorical for atoms, categorical + Gaussian for
/// mixtures).
Vec sample_posterior(const TargetModel& model, const Vec& y, double t,
                     rng::Stream& stream);

/**
 * M(s) = E‖X − E[X | √s·X + N]‖², the minimum mean-squared error at
 * signal-to-noise s ≥ 0.  Closed form for Gaussian variants and point
 * masses; Gauss–Hermite quadrature for d = 1 mixtures; Monte Carlo with
 * reported standard error for d > 1 mixtures.
 */
MmseValue mmse(const TargetModel& model, double s,
               const QuadratureConfig& cfg = {});

/**
 * I(s) = I(X; √s·X + N) in nats: closed form where available, otherwise
 * ½∫₀ˢ M(u) du by adaptive Simpson at cfg.simpson_tol.
 */
double mutual_information(const TargetModel& model, double s,
                          const QuadratureConfig& cfg = {});

/// I(b) − I(a) = ½∫ₐᵇ M(u) du for 0 ≤ a ≤ b (shares the closed forms).
double mutual_information_increment(const TargetModel& model, double a,
                                    double b, const QuadratureConfig& cfg = {});

/**
 * log p(y_next | y_prev) for one comparison-chain step of size δ > 0 from
 * time t_prev: the increment V = y_next − y_prev is distributed as
 * δ·X' + √δ·N with X' drawn from the posterior at (y_prev, t_prev), which is
 * a (mixture of) Gaussian(s) in closed form for every family.
 */
double log_transition_density(const TargetModel& model, const Vec& y_prev,
                              const Vec& y_next, double t_prev, double delta);

} // namespace samplab
