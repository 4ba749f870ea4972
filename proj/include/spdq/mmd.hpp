// Copyright 2026-present the spdq project
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

#pragma once

#include <span>
#include <vector>

#include "spdq/matrix.hpp"

namespace spdq::mmd {

/// Convex combination of Gaussian kernels k_a(x, y) = exp(-||x - y||^2 / tau_a).
/// Weights are fixed, non-negative, and sum to one.
struct KernelBank {
    std::vector<double> bandwidths;
    std::vector<double> weights;

    static KernelBank single(double tau);

    /// Five kernels at {0.25, 0.5, 1, 2, 4} times a base squared distance
    /// (typically the median heuristic), uniform weights. A non-positive base
    /// falls back to 1. The second form takes custom scale multipliers.
    static KernelBank multi_scale(double base_sq_dist);
    static KernelBank multi_scale(double base_sq_dist, const std::vector<double>& scales);

    /// Throws InvalidArgument unless bandwidths are positive, weights are
    /// non-negative and sum to 1 within 1e-12, and both lists share a length
    /// of at least one.
    void validate() const;
};

double gaussian_kernel(std::span<const double> x, std::span<const double> y, double tau);

double multi_kernel(std::span<const double> x, std::span<const double> y, const KernelBank& bank);

/// Plug-in estimate over all sample pairs (including self pairs):
/// mean k(p,p) - 2 mean k(p,q) + mean k(q,q), clamped at zero. Samples are
/// matrix columns. Quadratic cost; serves as the oracle for the linear
/// estimator. The default entry point parallelizes rows of the pair sums.
double mmd_sq_biased(const Matrix& p_samples, const Matrix& q_samples, const KernelBank& bank);
double mmd_sq_biased_serial(const Matrix& p_samples, const Matrix& q_samples,
                            const KernelBank& bank);

/// Linear-time unbiased estimate over quad-tuples of consecutive sample
/// pairs: (2/N) * sum_n [k(p1,p2) - k(p1,q2) + k(q1,q2) - k(q1,p2)] where
/// p1,p2 (q1,q2) are columns 2n-1, 2n of p (q). Both sets must share the same
/// even column count. May be slightly negative.
double mmd_sq_linear(const Matrix& p_samples, const Matrix& q_samples, const KernelBank& bank);

struct LinearMmdGrad {
    Matrix dp;  // gradient with respect to every column of p_samples
    Matrix dq;
};

LinearMmdGrad mmd_sq_linear_grad(const Matrix& p_samples, const Matrix& q_samples,
                                 const KernelBank& bank);

/// Median of pairwise squared distances over at most `cap` evenly-strided
/// columns. Returns 0 when all selected samples coincide.
double median_sq_dist(const Matrix& samples, std::size_t cap = 256);

}  // namespace spdq::mmd
