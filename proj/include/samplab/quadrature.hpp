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

#include <Eigen/Dense>
#include <functional>

namespace samplab::quadrature {

/// Gauss–Hermite rule for the weight e^{-x^2}: sum_i w_i f(x_i) ~ integral.
struct GaussHermite {
    Eigen::VectorXd nodes;   ///< ascending
    Eigen::VectorXd weights; ///< positive, sum = sqrt(pi)
};

/**
 * Cached Gauss–Hermite rule of the given order (1..256), computed by
 * Golub–Welsch from the symmetric tridiagonal Jacobi matrix with
 * off-diagonals sqrt(k/2).
 */
const GaussHermite& gauss_hermite(int order);

/**
 * E[g(Z)] for Z ~ N(mean, sd^2) via the substitution z = mean + sqrt(2)*sd*x:
 * (1/sqrt(pi)) * sum_i w_i g(mean + sqrt(2)*sd*x_i).
 */
template <class F>
double gauss_hermite_expect(const GaussHermite& rule, double mean, double sd,
                            F&& g) {
    constexpr double inv_sqrt_pi = 0.56418958354775628695;
    const double scale = 1.4142135623730950488 * sd;
    double acc = 0.0;
    for (int i = 0; i < rule.nodes.size(); ++i) {
        acc += rule.weights[i] * g(mean + scale * rule.nodes[i]);
    }
    return inv_sqrt_pi * acc;
}

struct IntegrateResult {
    double value;
    double error_estimate; ///< accumulated local Richardson error bound
};

/**
 * Adaptive Simpson quadrature of f over [a, b] to absolute tolerance abs_tol.
 *
 * Throws ConfigError for a > b or a non-positive tolerance, NumericalError
 * when the tolerance cannot be met within max_depth subdivisions (the message
 * reports the achieved error estimate).
 */
IntegrateResult integrate_adaptive_simpson(
    const std::function<double(double)>& f, double a, double b, double abs_tol,
    int max_depth = 48);

} // namespace samplab::quadrature
