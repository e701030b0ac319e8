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
#include "samplab/targets.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "samplab/errors.hpp"
#include "samplab/quadrature.hpp"

namespace samplab {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

double log_normal_1d(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (kLogTwoPi + std::log(var) + d * d / var);
}

void require_finite_vec(const Vec& v, int dim, const char* who) {
    if (v.size() != dim) {
        throw ConfigError(std::string(who) + ": expected dimension " +
                          std::to_string(dim) + ", got " +
                          std::to_string(v.size()));
    }
    for (int i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            throw ConfigError(std::string(who) + ": non-finite coordinate");
        }
    }
}

void require_dim(int d) {
    if (d < 1 || d > kMaxDim) {
        throw ConfigError("target dimension must be in [1, " +
                          std::to_string(kMaxDim) + "]");
    }
}

Weights normalize_weights(const std::vector<double>& w) {
    const int n = static_cast<int>(w.size());
    if (n < 1 || n > kMaxComponents) {
        throw ConfigError("component count must be in [1, " +
                          std::to_string(kMaxComponents) + "]");
    }
    double sum = 0.0;
    for (double x : w) {
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw ConfigError("weights must be finite and nonnegative");
        }
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("weights must sum to 1 (got " + std::to_string(sum) +
                          ")");
    }
    Weights out(n);
    for (int i = 0; i < n; ++i) {
        out[i] = w[i] / sum;
    }
    return out;
}

void require_variance(double v) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ConfigError("variance must be strictly positive and finite");
    }
}

/// One posterior mixture component: N(mean, var·I) with log responsibility
/// (atoms use var = 0).
struct CompPost {
    double log_resp;
    Vec mean;
    double var;
};

/**
 * Posterior decomposition for the mixture families at (y, t).  For t > 0 the
 * responsibilities tilt by the marginal likelihood of y under each component
 * (Gaussian components: y ~ N(t·m_j, (t²v_j + t)I); atoms: the natural-
 * parameter weight ⟨y, a_j⟩ − t‖a_j‖²/2); t = 0 returns the prior mixture.
 * Returns the component count; log_resp is normalized.
 */
int mixture_posterior(const TargetModel& model, const Vec& y, double t,
                      CompPost* out) {
    const int d = model.dim();
    if (const auto* gm = std::get_if<GaussianMixture>(&model.data())) {
        const int n = static_cast<int>(gm->means.size());
        for (int j = 0; j < n; ++j) {
            const double v = gm->variances[j];
            if (t == 0.0) {
                out[j].log_resp = std::log(gm->weights[j]);
                out[j].mean = gm->means[j];
                out[j].var = v;
            } else {
                const double marg_var = t * t * v + t;
                double lw = std::log(gm->weights[j]);
                for (int i = 0; i < d; ++i) {
                    lw += log_normal_1d(y[i], t * gm->means[j][i], marg_var);
                }
                out[j].log_resp = lw;
                out[j].mean = (gm->means[j] + v * y) / (1.0 + t * v);
                out[j].var = v / (1.0 + t * v);
            }
        }
        if (t > 0.0) {
            std::array<double, kMaxComponents> lw{};
            for (int j = 0; j < n; ++j) {
                lw[j] = out[j].log_resp;
            }
            const double norm = log_sum_exp(lw.data(), n);
            for (int j = 0; j < n; ++j) {
                out[j].log_resp -= norm;
            }
        }
        return n;
    }
    const auto& am = std::get<AtomMixture>(model.data());
    const int n = static_cast<int>(am.atoms.size());
    std::array<double, kMaxComponents> lw{};
    for (int j = 0; j < n; ++j) {
        const Vec& a = am.atoms[j];
        double w = std::log(am.weights[j]);
        if (t > 0.0) {
            w += y.dot(a) - 0.5 * t * a.squaredNorm();
        }
        lw[j] = w;
        out[j].mean = a;
        out[j].var = 0.0;
    }
    const double norm = log_sum_exp(lw.data(), n);
    for (int j = 0; j < n; ++j) {
        out[j].log_resp = lw[j] - norm;
    }
    return n;
}

bool is_mixture_kind(TargetKind k) {
    return k == TargetKind::kGaussianMixture || k == TargetKind::kAtomMixture;
}

Vec parse_point(const nlohmann::json& j, int dim, const char* who) {
    Vec v(dim);
    if (j.is_number()) {
        v.setConstant(j.get<double>());
        return v;
    }
    if (!j.is_array() || static_cast<int>(j.size()) != dim) {
        throw ConfigError(std::string(who) + ": expected a number or an array"
                          " of length dim");
    }
    for (int i = 0; i < dim; ++i) {
        if (!j[i].is_number()) {
            throw ConfigError(std::string(who) + ": entries must be numbers");
        }
        v[i] = j[i].get<double>();
    }
    return v;
}

std::vector<Vec> parse_points(const nlohmann::json& j, int dim,
                              const char* who) {
    if (!j.is_array() || j.empty()) {
        throw ConfigError(std::string(who) + ": expected a nonempty array");
    }
    std::vector<Vec> out;
    out.reserve(j.size());
    for (const auto& e : j) {
        out.push_back(parse_point(e, dim, who));
    }
    return out;
}

nlohmann::json point_json(const Vec& v) {
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) {
        a.push_back(v[i]);
    }
    return a;
}

} // namespace

TargetModel TargetModel::isotropic_gaussian(Vec mean, double variance) {
    require_dim(static_cast<int>(mean.size()));
    require_finite_vec(mean, static_cast<int>(mean.size()), "mean");
    require_variance(variance);
    TargetModel m;
    m.kind_ = TargetKind::kIsotropicGaussian;
    m.dim_ = static_cast<int>(mean.size());
    m.data_ = IsotropicGaussian{std::move(mean), variance};
    return m;
}

TargetModel TargetModel::diagonal_gaussian(Vec mean, Vec variances) {
    require_dim(static_cast<int>(mean.size()));
    require_finite_vec(mean, static_cast<int>(mean.size()), "mean");
    if (variances.size() != mean.size()) {
        throw ConfigError("diagonal_gaussian: variances must match dim");
    }
    for (int i = 0; i < variances.size(); ++i) {
        require_variance(variances[i]);
    }
    TargetModel m;
    m.kind_ = TargetKind::kDiagonalGaussian;
    m.dim_ = static_cast<int>(mean.size());
    m.data_ = DiagonalGaussian{std::move(mean), std::move(variances)};
    return m;
}

TargetModel TargetModel::gaussian_mixture(const std::vector<double>& weights,
                                          std::vector<Vec> means,
                                          std::vector<double> variances) {
    Weights w = normalize_weights(weights);
    if (means.empty() || means.size() != weights.size() ||
        variances.size() != weights.size()) {
        throw ConfigError(
            "gaussian_mixture: weights/means/variances sizes differ");
    }
    const int d = static_cast<int>(means[0].size());
    require_dim(d);
    for (const Vec& m : means) {
        require_finite_vec(m, d, "gaussian_mixture mean");
    }
    for (double v : variances) {
        require_variance(v);
    }
    TargetModel m;
    m.kind_ = TargetKind::kGaussianMixture;
    m.dim_ = d;
    m.data_ =
        GaussianMixture{std::move(w), std::move(means), std::move(variances)};
    return m;
}

TargetModel TargetModel::atom_mixture(const std::vector<double>& weights,
                                      std::vector<Vec> atoms) {
    Weights w = normalize_weights(weights);
    if (atoms.empty() || atoms.size() != weights.size()) {
        throw ConfigError("atom_mixture: weights/atoms sizes differ");
    }
    const int d = static_cast<int>(atoms[0].size());
    require_dim(d);
    for (const Vec& a : atoms) {
        require_finite_vec(a, d, "atom");
    }
    TargetModel m;
    m.kind_ = TargetKind::kAtomMixture;
    m.dim_ = d;
    m.data_ = AtomMixture{std::move(w), std::move(atoms)};
    return m;
}

TargetModel TargetModel::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
        throw ConfigError("target: expected an object with a \"kind\" string");
    }
    const std::string kind = j["kind"].get<std::string>();
    if (!j.contains("dim") || !j["dim"].is_number_integer()) {
        throw ConfigError("target: \"dim\" (integer) is required");
    }
    const int dim = j["dim"].get<int>();
    require_dim(dim);

    auto weights_of = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_array()) {
            throw ConfigError(std::string("target: \"") + key +
                              "\" array is required");
        }
        return j[key].get<std::vector<double>>();
    };

    if (kind == "isotropic_gaussian") {
        if (!j.contains("variance")) {
            throw ConfigError("isotropic_gaussian: \"variance\" is required");
        }
        return isotropic_gaussian(
            parse_point(j.value("mean", nlohmann::json(0.0)), dim, "mean"),
            j["variance"].get<double>());
    }
    if (kind == "diagonal_gaussian") {
        return diagonal_gaussian(
            parse_point(j.value("mean", nlohmann::json(0.0)), dim, "mean"),
            parse_point(j.at("variances"), dim, "variances"));
    }
    if (kind == "gaussian_mixture") {
        return gaussian_mixture(weights_of("weights"),
                                parse_points(j.at("means"), dim, "means"),
                                j.at("variances").get<std::vector<double>>());
    }
    if (kind == "atom_mixture") {
        return atom_mixture(weights_of("weights"),
                            parse_points(j.at("atoms"), dim, "atoms"));
    }
    throw ConfigError("target: unknown kind \"" + kind + "\"");
}

nlohmann::json TargetModel::to_json() const {
    nlohmann::json j;
    j["kind"] = label();
    j["dim"] = dim_;
    switch (kind_) {
    case TargetKind::kIsotropicGaussian: {
        const auto& g = std::get<IsotropicGaussian>(data_);
        j["mean"] = point_json(g.mean);
        j["variance"] = g.variance;
        break;
    }
    case TargetKind::kDiagonalGaussian: {
        const auto& g = std::get<DiagonalGaussian>(data_);
        j["mean"] = point_json(g.mean);
        j["variances"] = point_json(g.variances);
        break;
    }
    case TargetKind::kGaussianMixture: {
        const auto& g = std::get<GaussianMixture>(data_);
        j["weights"] = nlohmann::json::array();
        j["means"] = nlohmann::json::array();
        j["variances"] = nlohmann::json::array();
        for (size_t i = 0; i < g.means.size(); ++i) {
            j["weights"].push_back(g.weights[static_cast<int>(i)]);
            j["means"].push_back(point_json(g.means[i]));
            j["variances"].push_back(g.variances[i]);
        }
        break;
    }
    case TargetKind::kAtomMixture: {
        const auto& a = std::get<AtomMixture>(data_);
        j["weights"] = nlohmann::json::array();
        j["atoms"] = nlohmann::json::array();
        for (size_t i = 0; i < a.atoms.size(); ++i) {
            j["weights"].push_back(a.weights[static_cast<int>(i)]);
            j["atoms"].push_back(point_json(a.atoms[i]));
        }
        break;
    }
    }
    return j;
}

int TargetModel::component_count() const {
    switch (kind_) {
    case TargetKind::kGaussianMixture:
        return static_cast<int>(std::get<GaussianMixture>(data_).means.size());
    case TargetKind::kAtomMixture:
        return static_cast<int>(std::get<AtomMixture>(data_).atoms.size());
    default:
        return 1;
    }
}

std::string TargetModel::label() const {
    switch (kind_) {
    case TargetKind::kIsotropicGaussian:
        return "isotropic_gaussian";
    case TargetKind::kDiagonalGaussian:
        return "diagonal_gaussian";
    case TargetKind::kGaussianMixture:
        return "gaussian_mixture";
    case TargetKind::kAtomMixture:
        return "atom_mixture";
    }
    return "unknown";
}

Vec TargetModel::prior_mean() const {
    switch (kind_) {
    case TargetKind::kIsotropicGaussian:
        return std::get<IsotropicGaussian>(data_).mean;
    case TargetKind::kDiagonalGaussian:
        return std::get<DiagonalGaussian>(data_).mean;
    case TargetKind::kGaussianMixture: {
        const auto& g = std::get<GaussianMixture>(data_);
        Vec m = Vec::Zero(dim_);
        for (size_t j = 0; j < g.means.size(); ++j) {
            m += g.weights[static_cast<int>(j)] * g.means[j];
        }
        return m;
    }
    case TargetKind::kAtomMixture: {
        const auto& a = std::get<AtomMixture>(data_);
        Vec m = Vec::Zero(dim_);
        for (size_t j = 0; j < a.atoms.size(); ++j) {
            m += a.weights[static_cast<int>(j)] * a.atoms[j];
        }
        return m;
    }
    }
    return Vec::Zero(dim_);
}

Mat TargetModel::prior_cov() const {
    const Vec mbar = prior_mean();
    switch (kind_) {
    case TargetKind::kIsotropicGaussian: {
        const auto& g = std::get<IsotropicGaussian>(data_);
        return g.variance * Mat::Identity(dim_, dim_);
    }
    case TargetKind::kDiagonalGaussian: {
        const auto& g = std::get<DiagonalGaussian>(data_);
        return g.variances.asDiagonal();
    }
    case TargetKind::kGaussianMixture: {
        const auto& g = std::get<GaussianMixture>(data_);
        Mat c = Mat::Zero(dim_, dim_);
        for (size_t j = 0; j < g.means.size(); ++j) {
            const double w = g.weights[static_cast<int>(j)];
            const Vec d = g.means[j] - mbar;
            c += w * (g.variances[j] * Mat::Identity(dim_, dim_) +
                      d * d.transpose());
        }
        return c;
    }
    case TargetKind::kAtomMixture: {
        const auto& a = std::get<AtomMixture>(data_);
        Mat c = Mat::Zero(dim_, dim_);
        for (size_t j = 0; j < a.atoms.size(); ++j) {
            const Vec d = a.atoms[j] - mbar;
            c += a.weights[static_cast<int>(j)] * (d * d.transpose());
        }
        return c;
    }
    }
    return Mat::Zero(dim_, dim_);
}

double TargetModel::trace_cov() const { return prior_cov().trace(); }

double TargetModel::second_moment() const {
    return trace_cov() + prior_mean().squaredNorm();
}

bool TargetModel::is_deterministic() const {
    if (kind_ != TargetKind::kAtomMixture) {
        return false;
    }
    const auto& a = std::get<AtomMixture>(data_);
    for (size_t j = 1; j < a.atoms.size(); ++j) {
        if (a.atoms[j] != a.atoms[0]) {
            return false;
        }
    }
    return true;
}

bool TargetModel::has_closed_form_mmse() const {
    return kind_ == TargetKind::kIsotropicGaussian ||
           kind_ == TargetKind::kDiagonalGaussian || is_deterministic();
}

double TargetModel::sub_gaussian_constant() const {
    constexpr double kLog2 = 0.6931471805599453094;
    if (kind_ == TargetKind::kAtomMixture) {
        const auto& a = std::get<AtomMixture>(data_);
        double r2 = 0.0;
        for (const Vec& atom : a.atoms) {
            r2 = std::max(r2, atom.squaredNorm());
        }
        return std::sqrt(r2 / kLog2);
    }
    // Gaussian families: E exp(beta ||X||^2) has the closed form
    //   sum_j w_j (1 - 2 beta v_j)^{-d/2} exp(beta ||m_j||^2/(1 - 2 beta v_j))
    // (per coordinate for the diagonal family), monotone increasing in beta.
    // Bisect for the beta with expectation 2; L = 1/sqrt(beta).
    auto log_moment = [&](double beta) -> double {
        switch (kind_) {
        case TargetKind::kIsotropicGaussian: {
            const auto& g = std::get<IsotropicGaussian>(data_);
            const double q = 1.0 - 2.0 * beta * g.variance;
            return -0.5 * dim_ * std::log(q) +
                   beta * g.mean.squaredNorm() / q;
        }
        case TargetKind::kDiagonalGaussian: {
            const auto& g = std::get<DiagonalGaussian>(data_);
            double acc = 0.0;
            for (int i = 0; i < dim_; ++i) {
                const double q = 1.0 - 2.0 * beta * g.variances[i];
                acc += -0.5 * std::log(q) + beta * g.mean[i] * g.mean[i] / q;
            }
            return acc;
        }
        default: {
            const auto& g = std::get<GaussianMixture>(data_);
            std::array<double, kMaxComponents> terms;
            const int n = static_cast<int>(g.means.size());
            for (int j = 0; j < n; ++j) {
                const double q = 1.0 - 2.0 * beta * g.variances[j];
                terms[j] = std::log(g.weights[j]) - 0.5 * dim_ * std::log(q) +
                           beta * g.means[j].squaredNorm() / q;
            }
            return log_sum_exp(terms.data(), n);
        }
        }
    };
    double v_max = 0.0;
    if (kind_ == TargetKind::kIsotropicGaussian) {
        v_max = std::get<IsotropicGaussian>(data_).variance;
    } else if (kind_ == TargetKind::kDiagonalGaussian) {
        v_max = std::get<DiagonalGaussian>(data_).variances.maxCoeff();
    } else {
        for (double v : std::get<GaussianMixture>(data_).variances) {
            v_max = std::max(v_max, v);
        }
    }
    double lo = 0.0, hi = (1.0 - 1e-12) / (2.0 * v_max);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (log_moment(mid) < kLog2 ? lo : hi) = mid;
    }
    const double beta = 0.5 * (lo + hi);
    return 1.0 / std::sqrt(beta);
}

Vec sample_target(const TargetModel& model, rng::Stream& stream) {
    const int d = model.dim();
    switch (model.kind()) {
    case TargetKind::kIsotropicGaussian: {
        const auto& g = std::get<IsotropicGaussian>(model.data());
        return g.mean + std::sqrt(g.variance) * stream.standard_normal_vector(d);
    }
    case TargetKind::kDiagonalGaussian: {
        const auto& g = std::get<DiagonalGaussian>(model.data());
        Vec z = stream.standard_normal_vector(d);
        return g.mean + g.variances.cwiseSqrt().cwiseProduct(z);
    }
    case TargetKind::kGaussianMixture: {
        const auto& g = std::get<GaussianMixture>(model.data());
        const double u = stream.uniform01();
        double acc = 0.0;
        int pick = static_cast<int>(g.means.size()) - 1;
        for (size_t j = 0; j < g.means.size(); ++j) {
            acc += g.weights[static_cast<int>(j)];
            if (u <= acc) {
                pick = static_cast<int>(j);
                break;
            }
        }
        return g.means[pick] +
               std::sqrt(g.variances[pick]) * stream.standard_normal_vector(d);
    }
    case TargetKind::kAtomMixture: {
        const auto& a = std::get<AtomMixture>(model.data());
        const double u = stream.uniform01();
        double acc = 0.0;
        for (size_t j = 0; j < a.atoms.size(); ++j) {
            acc += a.weights[static_cast<int>(j)];
            if (u <= acc) {
                return a.atoms[j];
            }
        }
        return a.atoms.back();
    }
    }
    throw ConfigError("sample_target: unreachable kind");
}

PosteriorStats posterior_stats(const TargetModel& model, const Vec& y,
                               double t) {
    const int d = model.dim();
    require_finite_vec(y, d, "posterior_stats y");
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw ConfigError("posterior_stats: t must be finite and >= 0");
    }
    PosteriorStats out;
    if (t == 0.0) {
        // A zero signal level carries no information: the conditional law is
        // the prior regardless of y.  (The closed forms below treat y as a
        // natural parameter scaled by t, so they must not be applied here.)
        out.mean = model.prior_mean();
        out.covariance = model.prior_cov();
        const int n = model.component_count();
        out.responsibilities.resize(n);
        switch (model.kind()) {
        case TargetKind::kGaussianMixture:
            out.responsibilities =
                std::get<GaussianMixture>(model.data()).weights;
            break;
        case TargetKind::kAtomMixture:
            out.responsibilities = std::get<AtomMixture>(model.data()).weights;
            break;
        default:
            out.responsibilities = Weights::Ones(1);
            break;
        }
        return out;
    }
    switch (model.kind()) {
    case TargetKind::kIsotropicGaussian: {
        const auto& g = std::get<IsotropicGaussian>(model.data());
        const double denom = 1.0 + t * g.variance;
        out.mean = (g.mean + g.variance * y) / denom;
        out.covariance = (g.variance / denom) * Mat::Identity(d, d);
        out.responsibilities = Weights::Ones(1);
        return out;
    }
    case TargetKind::kDiagonalGaussian: {
        const auto& g = std::get<DiagonalGaussian>(model.data());
        out.mean.resize(d);
        out.covariance = Mat::Zero(d, d);
        for (int i = 0; i < d; ++i) {
            const double denom = 1.0 + t * g.variances[i];
            out.mean[i] = (g.mean[i] + g.variances[i] * y[i]) / denom;
            out.covariance(i, i) = g.variances[i] / denom;
        }
        out.responsibilities = Weights::Ones(1);
        return out;
    }
    default:
        break;
    }
    std::array<CompPost, kMaxComponents> comps;
    const int n = mixture_posterior(model, y, t, comps.data());
    out.responsibilities.resize(n);
    out.mean = Vec::Zero(d);
    for (int j = 0; j < n; ++j) {
        out.responsibilities[j] = std::exp(comps[j].log_resp);
        out.mean += out.responsibilities[j] * comps[j].mean;
    }
    // Centered mixture covariance: sum_j r_j (var_j I + dd^T) is symmetric
    // PSD by construction up to roundoff.
    if (d == 1) {
        double c = 0.0;
        for (int j = 0; j < n; ++j) {
            const double dm = comps[j].mean[0] - out.mean[0];
            c += out.responsibilities[j] * (comps[j].var + dm * dm);
        }
        out.covariance = Mat::Constant(1, 1, std::max(c, 0.0));
    } else {
        Mat c = Mat::Zero(d, d);
        for (int j = 0; j < n; ++j) {
            const Vec dm = comps[j].mean - out.mean;
            c += out.responsibilities[j] *
                 (comps[j].var * Mat::Identity(d, d) + dm * dm.transpose());
        }
        out.covariance = psd_clamp(c);
    }
    return out;
}

Vec sample_posterior(const TargetModel& model, const Vec& y, double t,
                     rng::Stream& stream) {
    const int d = model.dim();
    require_finite_vec(y, d, "sample_posterior y");
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw ConfigError("sample_posterior: t must be finite and >= 0");
    }
    switch (model.kind()) {
    case TargetKind::kIsotropicGaussian:
    case TargetKind::kDiagonalGaussian: {
        const PosteriorStats ps = posterior_stats(model, y, t);
        Vec z = stream.standard_normal_vector(d);
        return ps.mean +
               ps.covariance.diagonal().cwiseSqrt().cwiseProduct(z);
    }
    default:
        break;
    }
    std::array<CompPost, kMaxComponents> comps;
    const int n = mixture_posterior(model, y, t, comps.data());
    const double u = stream.uniform01();
    double acc = 0.0;
    int pick = n - 1;
    for (int j = 0; j < n; ++j) {
        acc += std::exp(comps[j].log_resp);
        if (u <= acc) {
            pick = j;
            break;
        }
    }
    if (model.kind() == TargetKind::kAtomMixture) {
        return comps[pick].mean;
    }
    return comps[pick].mean +
           std::sqrt(comps[pick].var) * stream.standard_normal_vector(d);
}

namespace {

/// tr cov(X | channel observation y' of sqrt(s) X + N).
double posterior_trace_at_channel(const TargetModel& model, double s,
                                  const Vec& y_channel) {
    const Vec y = std::sqrt(s) * y_channel;
    return posterior_stats(model, y, s).covariance.trace();
}

MmseValue mmse_quadrature_1d(const TargetModel& model, double s,
                             const QuadratureConfig& cfg) {
    const auto& rule = quadrature::gauss_hermite(cfg.gh_order);
    const double sqrt_s = std::sqrt(s);
    double acc = 0.0;
    auto post_trace = [&](double yc) {
        Vec y(1);
        y[0] = yc;
        return posterior_trace_at_channel(model, s, y);
    };
    if (const auto* gm = std::get_if<GaussianMixture>(&model.data())) {
        for (size_t j = 0; j < gm->means.size(); ++j) {
            const double c = sqrt_s * gm->means[j][0];
            const double sd = std::sqrt(s * gm->variances[j] + 1.0);
            acc += gm->weights[static_cast<int>(j)] *
                   quadrature::gauss_hermite_expect(rule, c, sd, post_trace);
        }
    } else {
        const auto& am = std::get<AtomMixture>(model.data());
        for (size_t j = 0; j < am.atoms.size(); ++j) {
            const double c = sqrt_s * am.atoms[j][0];
            acc += am.weights[static_cast<int>(j)] *
                   quadrature::gauss_hermite_expect(rule, c, 1.0, post_trace);
        }
    }
    return {acc, 0.0};
}

MmseValue mmse_monte_carlo(const TargetModel& model, double s,
                           const QuadratureConfig& cfg) {
    rng::Stream stream(cfg.mc_seed, rng::roles::kQuadratureMc);
    const double sqrt_s = std::sqrt(s);
    const int d = model.dim();
    double mean = 0.0, m2 = 0.0;
    const std::uint64_t n = cfg.mc_samples;
    for (std::uint64_t i = 0; i < n; ++i) {
        const Vec x = sample_target(model, stream);
        const Vec y_channel = sqrt_s * x + stream.standard_normal_vector(d);
        const double v = posterior_trace_at_channel(model, s, y_channel);
        const double delta = v - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (v - mean);
    }
    const double var = m2 / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

} // namespace

MmseValue mmse(const TargetModel& model, double s,
               const QuadratureConfig& cfg) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
        throw ConfigError("mmse: s must be finite and >= 0");
    }
    if (model.is_deterministic()) {
        return {0.0, 0.0};
    }
    switch (model.kind()) {
    case TargetKind::kIsotropicGaussian: {
        const auto& g = std::get<IsotropicGaussian>(model.data());
        return {model.dim() * g.variance / (1.0 + s * g.variance), 0.0};
    }
    case TargetKind::kDiagonalGaussian: {
        const auto& g = std::get<DiagonalGaussian>(model.data());
        double acc = 0.0;
        for (int i = 0; i < model.dim(); ++i) {
            acc += g.variances[i] / (1.0 + s * g.variances[i]);
        }
        return {acc, 0.0};
    }
    default:
        break;
    }
    if (s == 0.0) {
        return {model.trace_cov(), 0.0};
    }
    if (model.dim() == 1) {
        return mmse_quadrature_1d(model, s, cfg);
    }
    return mmse_monte_carlo(model, s, cfg);
}

double mutual_information_increment(const TargetModel& model, double a,
                                    double b, const QuadratureConfig& cfg) {
    if (!(a >= 0.0) || !(b >= a) || !std::isfinite(b)) {
        throw ConfigError(
            "mutual_information_increment: requires 0 <= a <= b, finite");
    }
    if (a == b || model.is_deterministic()) {
        return 0.0;
    }
    switch (model.kind()) {
    case TargetKind::kIsotropicGaussian: {
        const auto& g = std::get<IsotropicGaussian>(model.data());
        return 0.5 * model.dim() *
               (std::log1p(b * g.variance) - std::log1p(a * g.variance));
    }
    case TargetKind::kDiagonalGaussian: {
        const auto& g = std::get<DiagonalGaussian>(model.data());
        double acc = 0.0;
        for (int i = 0; i < model.dim(); ++i) {
            acc += std::log1p(b * g.variances[i]) -
                   std::log1p(a * g.variances[i]);
        }
        return 0.5 * acc;
    }
    default:
        break;
    }
    auto m_of = [&](double u) { return mmse(model, u, cfg).value; };
    const auto r =
        quadrature::integrate_adaptive_simpson(m_of, a, b, cfg.simpson_tol);
    return 0.5 * r.value;
}

double mutual_information(const TargetModel& model, double s,
                          const QuadratureConfig& cfg) {
    return mutual_information_increment(model, 0.0, s, cfg);
}

double log_transition_density(const TargetModel& model, const Vec& y_prev,
                              const Vec& y_next, double t_prev, double delta) {
    const int d = model.dim();
    require_finite_vec(y_prev, d, "log_transition_density y_prev");
    require_finite_vec(y_next, d, "log_transition_density y_next");
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw ConfigError("log_transition_density: delta must be > 0");
    }
    if (!(t_prev >= 0.0) || !std::isfinite(t_prev)) {
        throw ConfigError("log_transition_density: t_prev must be >= 0");
    }
    const Vec v = y_next - y_prev;
    if (!is_mixture_kind(model.kind())) {
        const PosteriorStats ps = posterior_stats(model, y_prev, t_prev);
        double acc = 0.0;
        for (int i = 0; i < d; ++i) {
            const double var = delta * delta * ps.covariance(i, i) + delta;
            acc += log_normal_1d(v[i], delta * ps.mean[i], var);
        }
        return acc;
    }
    std::array<CompPost, kMaxComponents> comps;
    const int n = mixture_posterior(model, y_prev, t_prev, comps.data());
    std::array<double, kMaxComponents> terms;
    for (int j = 0; j < n; ++j) {
        const double var = delta * delta * comps[j].var + delta;
        double lt = comps[j].log_resp;
        for (int i = 0; i < d; ++i) {
            lt += log_normal_1d(v[i], delta * comps[j].mean[i], var);
        }
        terms[j] = lt;
    }
    return log_sum_exp(terms.data(), n);
}

} // namespace samplab
