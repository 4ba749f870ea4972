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

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "spdq/error.hpp"

namespace spdq {

/// Dense row-major matrix of doubles.
///
/// Batches of vectors are stored one sample per column throughout the
/// project, so n vectors of dimension d form a d x n matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }

    double* row_ptr(std::size_t i) noexcept { return values_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const noexcept { return values_.data() + i * cols_; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    void col_copy(std::size_t j, std::span<double> out) const {
        for (std::size_t i = 0; i < rows_; ++i) out[i] = values_[i * cols_ + j];
    }
    std::vector<double> col(std::size_t j) const {
        std::vector<double> out(rows_);
        col_copy(j, out);
        return out;
    }
    void set_col(std::size_t j, std::span<const double> in) {
        for (std::size_t i = 0; i < rows_; ++i) values_[i * cols_ + j] = in[i];
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.values_ == b.values_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

bool all_finite(const Matrix& m);
bool all_finite(std::span<const double> v);

/// Throws NumericalError naming `what` when a non-finite entry is present.
void ensure_finite(const Matrix& m, const char* what);
void ensure_finite(std::span<const double> v, const char* what);

// --- file formats -----------------------------------------------------------
//
// CSV: one row per line, comma separated, '.' decimal separator, written with
// 17 significant digits so values round-trip exactly.
//
// Binary: magic "SPDQMAT1", then rows and cols as 64-bit little-endian
// unsigned integers, then row-major 64-bit little-endian IEEE doubles.

Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);

Matrix read_matrix_binary(const std::filesystem::path& path);
void write_matrix_binary(const Matrix& m, const std::filesystem::path& path);

/// Binary-format block on an open stream; used for files that concatenate
/// several matrices.
void write_matrix_block(std::ostream& os, const Matrix& m);
Matrix read_matrix_block(std::istream& is);

/// Sniffs the magic bytes and dispatches to the binary or CSV reader.
Matrix read_matrix(const std::filesystem::path& path);

}  // namespace spdq
