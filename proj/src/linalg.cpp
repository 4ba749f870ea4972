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

#include "spdq/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <string>

namespace spdq {

namespace {

void check_mul(std::size_t inner_a, std::size_t inner_b, const char* what) {
    if (inner_a != inner_b) {
        throw DimensionError(std::string(what) + ": inner dimensions " +
                             std::to_string(inner_a) + " vs " + std::to_string(inner_b));
    }
}

// c[i,:] += a(i,k) * b[k,:], accumulated in ascending k for every row.
inline void mul_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
    double* crow = c.row_ptr(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        const double* brow = b.row_ptr(k);
        for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
}

inline void mul_tn_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
    double* crow = c.row_ptr(i);
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double aki = a(k, i);
        if (aki == 0.0) continue;
        const double* brow = b.row_ptr(k);
        for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aki * brow[j];
    }
}

inline void mul_nt_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
    double* crow = c.row_ptr(i);
    const double* arow = a.row_ptr(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
        const double* brow = b.row_ptr(j);
        double acc = 0.0;
        for (std::size_t k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
        crow[j] = acc;
    }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_mul(a.cols(), b.rows(), "matmul");
    Matrix c(a.rows(), b.cols());
    const std::int64_t n = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) mul_row(a, b, c, static_cast<std::size_t>(i));
    return c;
}

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
    check_mul(a.cols(), b.rows(), "matmul");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) mul_row(a, b, c, i);
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    check_mul(a.rows(), b.rows(), "matmul_tn");
    Matrix c(a.cols(), b.cols());
    const std::int64_t n = static_cast<std::int64_t>(a.cols());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) mul_tn_row(a, b, c, static_cast<std::size_t>(i));
    return c;
}

Matrix matmul_tn_serial(const Matrix& a, const Matrix& b) {
    check_mul(a.rows(), b.rows(), "matmul_tn");
    Matrix c(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.cols(); ++i) mul_tn_row(a, b, c, i);
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    check_mul(a.cols(), b.cols(), "matmul_nt");
    Matrix c(a.rows(), b.rows());
    const std::int64_t n = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) mul_nt_row(a, b, c, static_cast<std::size_t>(i));
    return c;
}

Matrix matmul_nt_serial(const Matrix& a, const Matrix& b) {
    check_mul(a.cols(), b.cols(), "matmul_nt");
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) mul_nt_row(a, b, c, i);
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* row = a.row_ptr(i);
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = row[j];
    }
    return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("add: shape mismatch");
    Matrix c = a;
    for (std::size_t k = 0; k < c.size(); ++k) c.values()[k] += b.values()[k];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("sub: shape mismatch");
    Matrix c = a;
    for (std::size_t k = 0; k < c.size(); ++k) c.values()[k] -= b.values()[k];
    return c;
}

void add_inplace(Matrix& a, const Matrix& b, double scale) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError("add_inplace: shape mismatch");
    }
    for (std::size_t k = 0; k < a.size(); ++k) a.values()[k] += scale * b.values()[k];
}

void scale_inplace(Matrix& a, double s) {
    for (double& v : a.values()) v *= s;
}

double frobenius_sq(const Matrix& a) {
    double acc = 0.0;
    for (double v : a.values()) acc += v * v;
    return acc;
}

double frobenius_norm(const Matrix& a) { return std::sqrt(frobenius_sq(a)); }

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.values()) m = std::max(m, std::fabs(v));
    return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("sq_dist: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

Matrix solve_spd(const Matrix& a, const Matrix& b, double ridge) {
    if (a.rows() != a.cols()) throw InvalidArgument("solve_spd: matrix not square");
    if (ridge < 0.0) throw InvalidArgument("solve_spd: negative ridge");
    if (b.rows() != a.rows()) throw DimensionError("solve_spd: rhs row count mismatch");
    const std::size_t n = a.rows();

    double scale = max_abs(a);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::fabs(a(i, j) - a(j, i)) > 1e-8 * std::max(1.0, scale)) {
                throw InvalidArgument("solve_spd: matrix not symmetric");
            }
        }
    }

    // Lower Cholesky factor of a + ridge*I, in place.
    Matrix l = a;
    for (std::size_t i = 0; i < n; ++i) l(i, i) += ridge;
    for (std::size_t j = 0; j < n; ++j) {
        double d = l(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) {
            throw NumericalError("solve_spd: matrix not positive definite (pivot " +
                                 std::to_string(j) + ")");
        }
        const double root = std::sqrt(d);
        l(j, j) = root;
        const std::int64_t rows_below = static_cast<std::int64_t>(n - j - 1);
#pragma omp parallel for schedule(static) if (rows_below > 256)
        for (std::int64_t r = 0; r < rows_below; ++r) {
            const std::size_t i = j + 1 + static_cast<std::size_t>(r);
            double s = l(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / root;
        }
    }

    // Forward/back substitution per right-hand-side column.
    Matrix x = b;
    const std::int64_t ncols = static_cast<std::int64_t>(b.cols());
#pragma omp parallel for schedule(static) if (ncols > 4)
    for (std::int64_t c = 0; c < ncols; ++c) {
        const std::size_t col = static_cast<std::size_t>(c);
        for (std::size_t i = 0; i < n; ++i) {
            double s = x(i, col);
            for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, col);
            x(i, col) = s / l(i, i);
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double s = x(ii, col);
            for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x(k, col);
            x(ii, col) = s / l(ii, ii);
        }
    }
    ensure_finite(x, "solve_spd");
    return x;
}

}  // namespace spdq
