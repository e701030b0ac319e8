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

#include "samplab/estimators.hpp"

#include <cmath>

#include "samplab/errors.hpp"

namespace samplab {

namespace {

void require_finite_scalar(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw ConfigError(std::string(what) + " must be finite");
    }
}

} // namespace

EstimatorSpec EstimatorSpec::exact() {
    EstimatorSpec s;
    s.variant = EstimatorVariant::kExactPosteriorMean;
    return s;
}

EstimatorSpec EstimatorSpec::biased(const Vec& b) {
    EstimatorSpec s;
    s.variant = EstimatorVariant::kBiased;
    s.bias = b;
    for (int i = 0; i < b.size(); ++i) {
        require_finite_scalar(b[i], "estimator bias");
    }
    return s;
}

EstimatorSpec EstimatorSpec::scaled(double c) {
    EstimatorSpec s;
    s.variant = EstimatorVariant::kScaled;
    require_finite_scalar(c, "estimator scale factor");
    s.scale = c;
    return s;
}

EstimatorSpec EstimatorSpec::zero() {
    EstimatorSpec s;
    s.variant = EstimatorVariant::kZero;
    return s;
}

EstimatorSpec EstimatorSpec::from_json(const nlohmann::json& j, int dim) {
    if (!j.is_object() || !j.contains("variant") ||
        !j["variant"].is_string()) {
        throw ConfigError(
            "estimator config must be an object with a \"variant\" string");
    }
    const std::string v = j["variant"].get<std::string>();
    if (v == "exact_posterior_mean" || v == "exact") {
        return exact();
    }
    if (v == "zero") {
        return zero();
    }
    if (v == "scaled") {
        if (!j.contains("factor") || !j["factor"].is_number()) {
            throw ConfigError(
                "scaled estimator config requires numeric \"factor\"");
        }
        return scaled(j["factor"].get<double>());
    }
    if (v == "biased") {
        if (!j.contains("bias")) {
            throw ConfigError("biased estimator config requires \"bias\"");
        }
        const auto& bj = j["bias"];
        Vec b(dim);
        if (bj.is_number()) {
            b.setConstant(bj.get<double>());
        } else if (bj.is_array() && bj.size() == 1 && dim > 1) {
            if (!bj[0].is_number()) {
                throw ConfigError("estimator bias entries must be numbers");
            }
            b.setConstant(bj[0].get<double>());
        } else if (bj.is_array() &&
                   bj.size() == static_cast<std::size_t>(dim)) {
            for (int i = 0; i < dim; ++i) {
                if (!bj[i].is_number()) {
                    throw ConfigError(
                        "estimator bias entries must be numbers");
                }
                b[i] = bj[i].get<double>();
            }
        } else {
            throw ConfigError("estimator bias must be a scalar or an array "
                              "of length dim");
        }
        return biased(b);
    }
    throw ConfigError("unknown estimator variant: " + v);
}

nlohmann::json EstimatorSpec::to_json() const {
    nlohmann::json j;
    j["variant"] = label();
    switch (variant) {
    case EstimatorVariant::kBiased: {
        std::vector<double> b(bias.data(), bias.data() + bias.size());
        j["bias"] = b;
        break;
    }
    case EstimatorVariant::kScaled:
        j["factor"] = scale;
        break;
    default:
        break;
    }
    return j;
}

std::string EstimatorSpec::label() const {
    switch (variant) {
    case EstimatorVariant::kExactPosteriorMean:
        return "exact_posterior_mean";
    case EstimatorVariant::kBiased:
        return "biased";
    case EstimatorVariant::kScaled:
        return "scaled";
    case EstimatorVariant::kZero:
        return "zero";
    }
    throw ConfigError("EstimatorSpec::label: unknown variant");
}

KernelSpec KernelSpec::posterior_exact() {
    KernelSpec s;
    s.variant = KernelVariant::kPosteriorExact;
    return s;
}

KernelSpec KernelSpec::gaussian_matched() {
    KernelSpec s;
    s.variant = KernelVariant::kGaussianMatched;
    return s;
}

KernelSpec KernelSpec::mean_only() {
    KernelSpec s;
    s.variant = KernelVariant::kMeanOnly;
    return s;
}

KernelSpec KernelSpec::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("variant") ||
        !j["variant"].is_string()) {
        throw ConfigError(
            "kernel config must be an object with a \"variant\" string");
    }
    const std::string v = j["variant"].get<std::string>();
    if (v == "posterior_exact") {
        return posterior_exact();
    }
    if (v == "gaussian_matched") {
        return gaussian_matched();
    }
    if (v == "mean_only") {
        return mean_only();
    }
    throw ConfigError("unknown kernel variant: " + v);
}

nlohmann::json KernelSpec::to_json() const {
    return nlohmann::json{{"variant", label()}};
}

std::string KernelSpec::label() const {
    switch (variant) {
    case KernelVariant::kPosteriorExact:
        return "posterior_exact";
    case KernelVariant::kGaussianMatched:
        return "gaussian_matched";
    case KernelVariant::kMeanOnly:
        return "mean_only";
    }
    throw ConfigError("KernelSpec::label: unknown variant");
}

Vec evaluate_estimator(const TargetModel& model, const EstimatorSpec& spec,
                       const Vec& y, double t) {
    // posterior_stats validates y (finite, right dimension) and t >= 0 for
    // every variant, keeping the error contract uniform.
    switch (spec.variant) {
    case EstimatorVariant::kExactPosteriorMean:
        return posterior_stats(model, y, t).mean;
    case EstimatorVariant::kBiased: {
        if (spec.bias.size() != model.dim()) {
            throw ConfigError(
                "evaluate_estimator: bias dimension does not match model");
        }
        return posterior_stats(model, y, t).mean + spec.bias;
    }
    case EstimatorVariant::kScaled:
        return spec.scale * posterior_stats(model, y, t).mean;
    case EstimatorVariant::kZero: {
        // validate as strictly as the other variants, without paying for a
        // posterior evaluation that would be discarded
        if (y.size() != model.dim() || !y.allFinite()) {
            throw ConfigError(
                "evaluate_estimator: y must be finite with model dimension");
        }
        if (!(t >= 0.0) || !std::isfinite(t)) {
            throw ConfigError(
                "evaluate_estimator: t must be finite and >= 0");
        }
        return Vec::Zero(model.dim());
    }
    }
    throw ConfigError("evaluate_estimator: unknown variant");
}

Vec sample_kernel(const TargetModel& model, const KernelSpec& spec,
                  const Vec& z, double t, rng::Stream& stream) {
    switch (spec.variant) {
    case KernelVariant::kPosteriorExact:
        return sample_posterior(model, z, t, stream);
    case KernelVariant::kGaussianMatched: {
        const PosteriorStats post = posterior_stats(model, z, t);
        const Mat root = psd_sqrt(post.covariance);
        return post.mean + root * stream.standard_normal_vector(model.dim());
    }
    case KernelVariant::kMeanOnly:
        return posterior_stats(model, z, t).mean;
    }
    throw ConfigError("sample_kernel: unknown variant");
}

Vec tweedie_score(const TargetModel& model, const Vec& y, double a,
                  double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw ConfigError("tweedie_score: sigma must be finite and > 0");
    }
    require_finite_scalar(a, "tweedie_score scale a");
    // (a X + sigma N = y) carries the same information as observing the
    // accumulated channel at signal level t = a^2/sigma^2 with natural
    // observation (a/sigma^2) y, so the conditional mean comes straight
    // from the posterior machinery.
    const double t = a * a / (sigma * sigma);
    const Vec natural = (a / (sigma * sigma)) * y;
    const Vec cond_mean = posterior_stats(model, natural, t).mean;
    return (a * cond_mean - y) / (sigma * sigma);
}

} // namespace samplab
