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

#include "spdq/matrix.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace spdq {

bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

bool all_finite(const Matrix& m) { return all_finite(m.values()); }

void ensure_finite(std::span<const double> v, const char* what) {
    if (!all_finite(v)) {
        throw NumericalError(std::string(what) + ": non-finite value encountered");
    }
}

void ensure_finite(const Matrix& m, const char* what) { ensure_finite(m.values(), what); }

namespace {

constexpr char kMatrixMagic[8] = {'S', 'P', 'D', 'Q', 'M', 'A', 'T', '1'};

void put_u64_le(std::ostream& os, std::uint64_t v) {
    std::array<unsigned char, 8> b;
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::uint64_t get_u64_le(std::istream& is) {
    std::array<unsigned char, 8> b;
    is.read(reinterpret_cast<char*>(b.data()), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void put_f64_le(std::ostream& os, double d) { put_u64_le(os, std::bit_cast<std::uint64_t>(d)); }

double get_f64_le(std::istream& is) { return std::bit_cast<double>(get_u64_le(is)); }

void check_exists(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw MissingFileError("no such file: " + path.string());
    }
}

}  // namespace

Matrix read_matrix_csv(const std::filesystem::path& path) {
    check_exists(path);
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t row_cols = 0;
        const char* p = line.data();
        const char* end = p + line.size();
        while (p < end) {
            while (p < end && (*p == ' ' || *p == '\t')) ++p;
            double x = 0.0;
            auto [next, ec] = std::from_chars(p, end, x);
            if (ec != std::errc()) {
                throw IoError(path.string() + ": malformed number at row " +
                              std::to_string(rows + 1));
            }
            values.push_back(x);
            ++row_cols;
            p = next;
            while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
            if (p < end) {
                if (*p != ',') {
                    throw IoError(path.string() + ": expected ',' at row " +
                                  std::to_string(rows + 1));
                }
                ++p;
            }
        }
        if (rows == 0) {
            cols = row_cols;
        } else if (row_cols != cols) {
            throw IoError(path.string() + ": ragged row " + std::to_string(rows + 1));
        }
        ++rows;
    }
    Matrix m(rows, cols);
    std::memcpy(m.values().data(), values.data(), values.size() * sizeof(double));
    ensure_finite(m, "read_matrix_csv");
    return m;
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    char buf[64];
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row_ptr(i);
        for (std::size_t j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
            if (j > 0) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void write_matrix_block(std::ostream& os, const Matrix& m) {
    os.write(kMatrixMagic, 8);
    put_u64_le(os, m.rows());
    put_u64_le(os, m.cols());
    for (double v : m.values()) put_f64_le(os, v);
    if (!os) throw IoError("matrix block write failed");
}

Matrix read_matrix_block(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMatrixMagic, 8) != 0) {
        throw IoError("bad matrix magic");
    }
    std::uint64_t rows = get_u64_le(is);
    std::uint64_t cols = get_u64_le(is);
    if (!is) throw IoError("truncated matrix header");
    if (rows > (1ull << 32) || cols > (1ull << 32)) {
        throw IoError("implausible matrix shape");
    }
    Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    for (std::size_t k = 0; k < m.size(); ++k) m.values()[k] = get_f64_le(is);
    if (!is) throw IoError("truncated matrix payload");
    ensure_finite(m, "read_matrix_block");
    return m;
}

Matrix read_matrix_binary(const std::filesystem::path& path) {
    check_exists(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return read_matrix_block(in);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void write_matrix_binary(const Matrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_matrix_block(out, m);
    if (!out) throw IoError("write failed: " + path.string());
}

Matrix read_matrix(const std::filesystem::path& path) {
    check_exists(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8] = {};
    in.read(magic, 8);
    in.close();
    if (std::memcmp(magic, kMatrixMagic, 8) == 0) return read_matrix_binary(path);
    return read_matrix_csv(path);
}

}  // namespace spdq
