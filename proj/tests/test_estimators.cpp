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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <json.hpp>

#include "samplab/errors.hpp"
#include "samplab/estimators.hpp"
#include "samplab/rng.hpp"
#include "samplab/targets.hpp"

#include "oracles.hpp"

using namespace samplab;

namespace {

Vec vec1(double x) {
    Vec v(1);
    v[0] = x;
    return v;
}

TargetModel gauss01() {
    return TargetModel::isotropic_gaussian(vec1(0.0), 1.0);
}

TargetModel two_atoms() {
    return TargetModel::atom_mixture({0.5, 0.5}, {vec1(-1.0), vec1(1.0)});
}

} // namespace

TEST_CASE("evaluate_estimator: exact variant delegates bit-for-bit") {
    TargetModel gm = TargetModel::gaussian_mixture(
        {0.3, 0.7}, {vec1(-2.0), vec1(1.0)}, {0.5, 1.5});
    EstimatorSpec exact = EstimatorSpec::exact();
    for (double y : {-3.0, -0.5, 0.0, 1.7, 42.0}) {
        for (double t : {0.0, 0.25, 1.0, 9.0}) {
            const Vec f = evaluate_estimator(gm, exact, vec1(y), t);
            const Vec m = posterior_stats(gm, vec1(y), t).mean;
            CHECK(f[0] == m[0]); // exact equality, not approximate
        }
    }
}

TEST_CASE("evaluate_estimator: pinned Gaussian value and variant algebra") {
    TargetModel g = gauss01();
    // Gaussian conjugacy: y/(1+t) at (y=2, t=1)
    CHECK(evaluate_estimator(g, EstimatorSpec::exact(), vec1(2.0), 1.0)[0] ==
          doctest::Approx(1.0).epsilon(1e-15));

    const Vec y = vec1(2.0);
    const double mean = 1.0;
    CHECK(evaluate_estimator(g, EstimatorSpec::biased(vec1(0.5)), y, 1.0)[0] ==
          doctest::Approx(mean + 0.5).epsilon(1e-15));
    CHECK(evaluate_estimator(g, EstimatorSpec::scaled(0.25), y, 1.0)[0] ==
          doctest::Approx(0.25 * mean).epsilon(1e-15));
    CHECK(evaluate_estimator(g, EstimatorSpec::zero(), y, 1.0)[0] == 0.0);
    CHECK(evaluate_estimator(two_atoms(), EstimatorSpec::zero(), vec1(-7.0),
                             3.0)[0] == 0.0);
}

TEST_CASE("evaluate_estimator: validation") {
    TargetModel g = gauss01();
    Vec bad = vec1(std::nan(""));
    CHECK_THROWS_AS(
        evaluate_estimator(g, EstimatorSpec::exact(), bad, 1.0), ConfigError);
    CHECK_THROWS_AS(
        evaluate_estimator(g, EstimatorSpec::zero(), bad, 1.0), ConfigError);
    CHECK_THROWS_AS(
        evaluate_estimator(g, EstimatorSpec::exact(), vec1(0.0), -1.0),
        ConfigError);
    // bias of the wrong dimension
    Vec b2(2);
    b2 << 0.1, 0.2;
    CHECK_THROWS_AS(
        evaluate_estimator(g, EstimatorSpec::biased(b2), vec1(0.0), 1.0),
        ConfigError);
    CHECK_THROWS_AS(EstimatorSpec::scaled(std::nan("")), ConfigError);
    CHECK_THROWS_AS(EstimatorSpec::biased(vec1(std::nan(""))), ConfigError);
}

TEST_CASE("sample_kernel: gaussian_matched moments on the two-atom target") {
    TargetModel m = two_atoms();
    const Vec z = vec1(0.8);
    const double t = 1.0;
    const PosteriorStats post = posterior_stats(m, z, t);

    rng::Stream stream(77, 0);
    oracle::MeanVar mv;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) {
        mv.add(sample_kernel(m, KernelSpec::gaussian_matched(), z, t,
                             stream)[0]);
    }
    CHECK(std::abs(mv.mean() - post.mean[0]) < 4.0 * mv.se());
    // variance of the sample variance ~ 2 var^2/(n-1) for Gaussian draws
    const double var_se =
        post.covariance(0, 0) * std::sqrt(2.0 / (n - 1.0));
    CHECK(std::abs(mv.var() - post.covariance(0, 0)) < 4.0 * var_se);
}

TEST_CASE("sample_kernel: posterior_exact matches gaussian_matched in law "
          "on a Gaussian target") {
    TargetModel g = TargetModel::isotropic_gaussian(vec1(0.5), 2.0);
    const Vec z = vec1(-1.0);
    const double t = 0.7;
    rng::Stream s1(5, 1), s2(5, 2);
    oracle::MeanVar a, b;
    for (int i = 0; i < 400'000; ++i) {
        a.add(sample_kernel(g, KernelSpec::posterior_exact(), z, t, s1)[0]);
        b.add(sample_kernel(g, KernelSpec::gaussian_matched(), z, t, s2)[0]);
    }
    const double se = std::sqrt(a.se() * a.se() + b.se() * b.se());
    CHECK(std::abs(a.mean() - b.mean()) < 4.0 * se);
    CHECK(a.var() == doctest::Approx(b.var()).epsilon(0.02));
}

TEST_CASE("sample_kernel: mean_only is deterministic and stream-neutral") {
    TargetModel m = two_atoms();
    rng::Stream stream(3, 9);
    const std::uint64_t before = stream.block_counter();
    const Vec a = sample_kernel(m, KernelSpec::mean_only(), vec1(1.3), 2.0,
                                stream);
    const Vec b = sample_kernel(m, KernelSpec::mean_only(), vec1(1.3), 2.0,
                                stream);
    CHECK(stream.block_counter() == before); // no randomness consumed
    CHECK(a[0] == b[0]);
    CHECK(a[0] ==
          doctest::Approx(posterior_stats(m, vec1(1.3), 2.0).mean[0]));
}

TEST_CASE("tweedie_score: Gaussian closed form and symmetry") {
    TargetModel g = gauss01();
    // a=1, sigma=1: density of X+N is N(0,2), score -y/2
    for (double y : {-2.0, -0.3, 0.0, 1.0, 5.0}) {
        CHECK(tweedie_score(g, vec1(y), 1.0, 1.0)[0] ==
              doctest::Approx(-y / 2.0).epsilon(1e-14));
    }
    // y=0 on symmetric models
    CHECK(tweedie_score(two_atoms(), vec1(0.0), 1.0, 1.0)[0] ==
          doctest::Approx(0.0).scale(1.0));
    CHECK(tweedie_score(g, vec1(0.0), 2.0, 0.5)[0] ==
          doctest::Approx(0.0).scale(1.0));
    // a=0 degenerates to the pure-noise score
    CHECK(tweedie_score(two_atoms(), vec1(1.2), 0.0, 2.0)[0] ==
          doctest::Approx(-1.2 / 4.0).epsilon(1e-14));
}

TEST_CASE("tweedie_score: finite-difference oracle on the two-atom model") {
    TargetModel m = two_atoms();
    // log density of a X + sigma N at y, directly from the closed-form
    // two-component Gaussian mixture
    const double a = 1.3, sigma = 0.8;
    auto logp = [&](double y) {
        const double v = sigma * sigma;
        const long double t1 = std::exp(-0.5L * (y - a) * (y - a) / v);
        const long double t2 = std::exp(-0.5L * (y + a) * (y + a) / v);
        return static_cast<double>(
            std::log(0.5L * (t1 + t2) / std::sqrt(2.0L * M_PI * v)));
    };
    for (double y : {-2.0, -0.9, 0.0, 0.4, 1.1, 2.5}) {
        const double h = 1e-5;
        const double fd = (logp(y + h) - logp(y - h)) / (2.0 * h);
        CHECK(tweedie_score(m, vec1(y), a, sigma)[0] ==
              doctest::Approx(fd).epsilon(1e-4));
    }
}

TEST_CASE("tweedie_score: validation") {
    TargetModel g = gauss01();
    CHECK_THROWS_AS(tweedie_score(g, vec1(0.0), 1.0, 0.0), ConfigError);
    CHECK_THROWS_AS(tweedie_score(g, vec1(0.0), 1.0, -1.0), ConfigError);
    CHECK_THROWS_AS(tweedie_score(g, vec1(std::nan("")), 1.0, 1.0),
                    ConfigError);
}

TEST_CASE("estimator and kernel specs: JSON round trips and validation") {
    EstimatorSpec b = EstimatorSpec::from_json(
        nlohmann::json{{"variant", "biased"}, {"bias", {0.5}}}, 1);
    CHECK(b.variant == EstimatorVariant::kBiased);
    CHECK(b.bias[0] == 0.5);
    EstimatorSpec b2 = EstimatorSpec::from_json(b.to_json(), 1);
    CHECK(b2.bias[0] == 0.5);

    // scalar bias broadcasts across dimensions
    EstimatorSpec b3 = EstimatorSpec::from_json(
        nlohmann::json{{"variant", "biased"}, {"bias", 0.25}}, 3);
    CHECK(b3.bias.size() == 3);
    CHECK(b3.bias[2] == 0.25);

    EstimatorSpec c = EstimatorSpec::from_json(
        nlohmann::json{{"variant", "scaled"}, {"factor", 0.9}}, 1);
    CHECK(c.scale == 0.9);
    CHECK(EstimatorSpec::from_json(c.to_json(), 1).scale == 0.9);

    CHECK(EstimatorSpec::from_json(nlohmann::json{{"variant", "exact"}}, 2)
              .variant == EstimatorVariant::kExactPosteriorMean);
    CHECK(EstimatorSpec::from_json(
              nlohmann::json{{"variant", "exact_posterior_mean"}}, 2)
              .variant == EstimatorVariant::kExactPosteriorMean);
    CHECK(EstimatorSpec::exact().to_json()["variant"] ==
          "exact_posterior_mean");

    CHECK_THROWS_AS(
        EstimatorSpec::from_json(nlohmann::json{{"variant", "best"}}, 1),
        ConfigError);
    CHECK_THROWS_AS(
        EstimatorSpec::from_json(
            nlohmann::json{{"variant", "biased"}, {"bias", {0.1, 0.2}}}, 3),
        ConfigError);
    CHECK_THROWS_AS(
        EstimatorSpec::from_json(nlohmann::json{{"variant", "scaled"}}, 1),
        ConfigError);
    CHECK_THROWS_AS(EstimatorSpec::from_json(nlohmann::json::array(), 1),
                    ConfigError);

    for (const char* v : {"posterior_exact", "gaussian_matched",
                          "mean_only"}) {
        KernelSpec k = KernelSpec::from_json(nlohmann::json{{"variant", v}});
        CHECK(KernelSpec::from_json(k.to_json()).variant == k.variant);
        CHECK(k.label() == v);
    }
    CHECK_THROWS_AS(
        KernelSpec::from_json(nlohmann::json{{"variant", "magic"}}),
        ConfigError);
}
