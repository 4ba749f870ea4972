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

namespace spdq {

// Matrix products. The OpenMP variants split rows of the result across
// threads; every output element is computed by exactly one thread with the
// same accumulation order as the serial reference, so the two variants are
// bit-identical.

Matrix matmul(const Matrix& a, const Matrix& b);         // a * b
Matrix matmul_serial(const Matrix& a, const Matrix& b);

Matrix matmul_nt(const Matrix& a, const Matrix& b);      // a * b^T
Matrix matmul_nt_serial(const Matrix& a, const Matrix& b);

Matrix matmul_tn(const Matrix& a, const Matrix& b);      // a^T * b
Matrix matmul_tn_serial(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

// Elementwise helpers.
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
void add_inplace(Matrix& a, const Matrix& b, double scale = 1.0);
void scale_inplace(Matrix& a, double s);

double frobenius_norm(const Matrix& a);
double frobenius_sq(const Matrix& a);
double max_abs(const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double sq_dist(std::span<const double> a, std::span<const double> b);

struct SvdResult {
    Matrix u;                   // rows(a) x k, orthonormal columns
    std::vector<double> sigma;  // k = min(rows, cols), non-increasing, >= 0
    Matrix v;                   // cols(a) x k, orthonormal columns
};

/// Thin SVD a = u * diag(sigma) * v^T via one-sided Jacobi rotations.
/// Reconstruction holds to ~1e-14 relative Frobenius error; columns of u and
/// v are orthonormal to the same precision. Throws NumericalError if the
/// sweep budget is exhausted before the off-diagonal mass converges.
SvdResult svd(const Matrix& a);

/// Solves (a + ridge*I) x = b for symmetric positive definite a via Cholesky.
/// Throws InvalidArgument when a is not square/symmetric and NumericalError
/// when a + ridge*I is not positive definite.
Matrix solve_spd(const Matrix& a, const Matrix& b, double ridge);

}  // namespace spdq
