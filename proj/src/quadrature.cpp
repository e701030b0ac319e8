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
#include "samplab/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "samplab/errors.hpp"

namespace samplab::quadrature {

namespace {

GaussHermite build_gauss_hermite(int order) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
    Eigen::VectorXd sub(std::max(order - 1, 0));
    for (int k = 1; k < order; ++k) {
        sub[k - 1] = std::sqrt(0.5 * k);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) {
        throw NumericalError("gauss_hermite: tridiagonal solve failed");
    }
    GaussHermite rule;
    rule.nodes = es.eigenvalues();
    rule.weights.resize(order);
    const double sqrt_pi = std::sqrt(M_PI);
    for (int i = 0; i < order; ++i) {
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = sqrt_pi * v0 * v0;
    }
    return rule;
}

} // namespace

const GaussHermite& gauss_hermite(int order) {
    if (order < 1 || order > 256) {
        throw ConfigError("gauss_hermite: order must be in [1, 256]");
    }
    static std::mutex mutex;
    static std::map<int, GaussHermite> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end()) {
        it = cache.emplace(order, build_gauss_hermite(order)).first;
    }
    return it->second;
}

namespace {

struct SimpsonState {
    const std::function<double(double)>& f;
    double abs_tol_total;
    double error_acc = 0.0;
    bool tolerance_failed = false;
};

double simpson(double a, double fa, double fm, double b, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double simpson_recurse(SimpsonState& st, double a, double fa, double m,
                       double fm, double b, double fb, double whole,
                       double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = st.f(lm);
    const double frm = st.f(rm);
    const double left = simpson(a, fa, flm, m, fm);
    const double right = simpson(m, fm, frm, b, fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol || depth <= 0) {
        if (std::abs(delta) > 15.0 * tol) {
            st.tolerance_failed = true;
        }
        st.error_acc += std::abs(delta) / 15.0;
        return left + right + delta / 15.0;
    }
    return simpson_recurse(st, a, fa, lm, flm, m, fm, left, 0.5 * tol,
                           depth - 1) +
           simpson_recurse(st, m, fm, rm, frm, b, fb, right, 0.5 * tol,
                           depth - 1);
}

} // namespace

IntegrateResult integrate_adaptive_simpson(
    const std::function<double(double)>& f, double a, double b, double abs_tol,
    int max_depth) {
    if (!(abs_tol > 0.0)) {
        throw ConfigError("integrate_adaptive_simpson: tolerance must be > 0");
    }
    if (!(a <= b)) {
        throw ConfigError("integrate_adaptive_simpson: requires a <= b");
    }
    if (a == b) {
        return {0.0, 0.0};
    }
    SimpsonState st{f, abs_tol};
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = simpson(a, fa, fm, b, fb);
    const double value =
        simpson_recurse(st, a, fa, m, fm, b, fb, whole, abs_tol, max_depth);
    if (st.tolerance_failed && st.error_acc > abs_tol) {
        std::ostringstream msg;
        msg << "integrate_adaptive_simpson: tolerance " << abs_tol
            << " not met; achieved error estimate " << st.error_acc
            << " with value " << value;
        throw NumericalError(msg.str());
    }
    return {value, st.error_acc};
}

} // namespace samplab::quadrature
