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

#include "spdq/random.hpp"

#include <cmath>

#include "spdq/linalg.hpp"

namespace spdq {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + salt * 0x9e3779b97f4a7c15ull + 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

Matrix random_gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    Matrix m(rows, cols);
    for (double& v : m.values()) v = dist(rng);
    return m;
}

Matrix random_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo,
                      double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Matrix m(rows, cols);
    for (double& v : m.values()) v = dist(rng);
    return m;
}

Matrix random_row_orthonormal(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    if (rows > cols) throw InvalidArgument("random_row_orthonormal: rows > cols");
    Matrix c(rows, cols);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double norm = 0.0;
        // Redraw on (vanishingly unlikely) degenerate rows.
        while (norm < 1e-8) {
            for (std::size_t j = 0; j < cols; ++j) c(r, j) = dist(rng);
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t k = 0; k < r; ++k) {
                    double proj = 0.0;
                    for (std::size_t j = 0; j < cols; ++j) proj += c(r, j) * c(k, j);
                    for (std::size_t j = 0; j < cols; ++j) c(r, j) -= proj * c(k, j);
                }
            }
            norm = 0.0;
            for (std::size_t j = 0; j < cols; ++j) norm += c(r, j) * c(r, j);
            norm = std::sqrt(norm);
        }
        for (std::size_t j = 0; j < cols; ++j) c(r, j) /= norm;
    }
    return c;
}

}  // namespace spdq
