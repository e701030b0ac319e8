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
#include "samplab/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "samplab/errors.hpp"

namespace samplab {

double log_sum_exp(const double* v, int n) {
    if (n <= 0) {
        return -std::numeric_limits<double>::infinity();
    }
    double m = v[0];
    for (int i = 1; i < n; ++i) {
        m = std::max(m, v[i]);
    }
    if (!std::isfinite(m)) {
        return m; // all -inf, or a contaminating +/-inf propagates
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += std::exp(v[i] - m);
    }
    return m + std::log(acc);
}

namespace {

struct EigenDecomp {
    Mat vectors;
    Vec values;
};

EigenDecomp clamped_eigs(const Mat& a, double neg_tol, const char* who) {
    Mat sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    if (es.info() != Eigen::Success) {
        throw NumericalError(std::string(who) + ": eigendecomposition failed");
    }
    Vec vals = es.eigenvalues();
    const double scale = std::max(1.0, vals.cwiseAbs().maxCoeff());
    for (int i = 0; i < vals.size(); ++i) {
        if (vals[i] < -neg_tol * scale) {
            throw NumericalError(std::string(who) + ": eigenvalue " +
                                 std::to_string(vals[i]) +
                                 " below the clamp window");
        }
        vals[i] = std::max(vals[i], 0.0);
    }
    return {es.eigenvectors(), vals};
}

} // namespace

Mat psd_clamp(const Mat& a, double neg_tol) {
    auto [q, vals] = clamped_eigs(a, neg_tol, "psd_clamp");
    return q * vals.asDiagonal() * q.transpose();
}

Mat psd_sqrt(const Mat& a, double neg_tol) {
    auto [q, vals] = clamped_eigs(a, neg_tol, "psd_sqrt");
    return q * vals.cwiseSqrt().asDiagonal() * q.transpose();
}

} // namespace samplab
