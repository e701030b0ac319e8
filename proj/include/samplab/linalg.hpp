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

namespace samplab {

/// Hard cap on the state dimension.  Vectors/matrices carry a compile-time
/// max size so that all per-sample temporaries live on the stack.
inline constexpr int kMaxDim = 16;

/// Hard cap on the number of mixture components of a target.
inline constexpr int kMaxComponents = 32;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0,
                          kMaxDim, kMaxDim>;
using Weights = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxComponents, 1>;

/// log(sum_i exp(v_i)) without overflow; returns -inf for n == 0.
double log_sum_exp(const double* v, int n);

/**
 * Symmetrize `a` and clamp slightly negative eigenvalues to zero.
 *
 * Eigenvalues below -neg_tol * max(1, lambda_max) indicate an actual defect
 * rather than roundoff and raise NumericalError.  The result is symmetric
 * positive semidefinite by construction.
 */
Mat psd_clamp(const Mat& a, double neg_tol = 1e-10);

/// Symmetric PSD square root via eigendecomposition (clamps as psd_clamp).
Mat psd_sqrt(const Mat& a, double neg_tol = 1e-10);

} // namespace samplab
