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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spdq/matrix.hpp"

namespace spdq::quant {

/// Additive-quantization code table: n points, m dictionary slots per point,
/// each slot one index in [0, k_d).
struct CodeTable {
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t k_d = 0;
    std::vector<std::uint16_t> entries;  // n * m, point-major

    std::span<std::uint16_t> code(std::size_t point) {
        return {entries.data() + point * m, m};
    }
    std::span<const std::uint16_t> code(std::size_t point) const {
        return {entries.data() + point * m, m};
    }

    friend bool operator==(const CodeTable& a, const CodeTable& b) = default;
};

CodeTable random_codes(std::size_t n, std::size_t m, std::size_t k_d, std::uint64_t seed);

/// Label-aligned additive quantizer. The two transforms have orthonormal
/// rows; dictionaries are stored as one d_z x (m * k_d) matrix where codeword
/// (slot, k) lives in column slot * k_d + k.
struct QuantModel {
    Matrix c_i;       // d_z x d_s
    Matrix c_t;       // d_z x d_s
    Matrix z;         // d_z x num_classes
    Matrix d;         // d_z x (m * k_d)
    CodeTable codes;  // one code per training point
    std::size_t m = 0;
    std::size_t k_d = 0;

    std::size_t label_dim() const { return c_i.rows(); }
};

/// Row-orthonormal C minimizing ||C S - ZL||_F, from the thin SVD of
/// (ZL) S^T = U Sigma W^T as C = U W^T. Any valid minimizer is returned when
/// the product is rank deficient.
Matrix update_c(const Matrix& s, const Matrix& zl);

/// Closed-form anchor update
/// Z = [(C_i S_i + C_t S_t) + beta D B] L^T ((2 + beta) L L^T + ridge I)^-1.
Matrix update_z(const Matrix& ci_si, const Matrix& ct_st, const Matrix& d, const CodeTable& codes,
                const Matrix& labels, double beta, double ridge);

/// Least-squares dictionary update D = (ZL B^T)(B B^T + ridge I)^-1 over the
/// expanded 0/1 indicator matrix B. Codewords never selected by any point get
/// zero columns; their flat indices are reported through `unused` when given.
Matrix update_d(const Matrix& zl, const CodeTable& codes, double ridge,
                std::vector<std::size_t>* unused = nullptr);

/// Sum of the selected codeword columns per point, d_z x n.
Matrix reconstruct(const Matrix& d, const CodeTable& codes);
std::vector<double> reconstruct_point(const Matrix& d, std::span<const std::uint16_t> code);

/// Dictionary layout transposed for contiguous codeword access, plus cached
/// squared norms. Built once per assignment pass.
struct IcmWorkspace {
    Matrix codewords;              // (m * k_d) x d_z, one codeword per row
    std::vector<double> sq_norms;  // m * k_d
    std::size_t m = 0;
    std::size_t k_d = 0;

    static IcmWorkspace build(const Matrix& d, std::size_t m, std::size_t k_d);
};

/// Coordinate-wise exhaustive refinement of one code: each sweep visits every
/// slot in order and replaces its codeword with the squared-error argmin,
/// breaking ties toward the lowest index. The objective never increases.
/// Returns the final squared residual norm.
double icm_refine(std::span<const double> target, const IcmWorkspace& ws,
                  std::span<std::uint16_t> code, int sweeps);

/// Spec-shaped convenience wrapper around icm_refine.
void icm_assign(std::span<const double> target, const Matrix& d, std::size_t m, std::size_t k_d,
                std::span<std::uint16_t> code, int sweeps);

/// Multi-start variant: attempt 0 warm-starts from the incoming code, further
/// attempts use seeded random initial codes; the best final objective wins,
/// so the result is never worse than plain refinement.
double icm_refine_multistart(std::span<const double> target, const IcmWorkspace& ws,
                             std::span<std::uint16_t> code, int sweeps, int restarts,
                             std::uint64_t seed);

/// Assigns all columns of `targets`, warm-starting each point from its
/// current code. Points are independent, so the OpenMP variant distributes
/// them across threads; per-point restart seeds derive from (seed, point) and
/// never from scheduling.
void icm_assign_all(const Matrix& targets, const Matrix& d, CodeTable& codes, int sweeps,
                    int restarts = 1, std::uint64_t seed = 0);
void icm_assign_all_serial(const Matrix& targets, const Matrix& d, CodeTable& codes, int sweeps,
                           int restarts = 1, std::uint64_t seed = 0);

/// ||C_i S_i - ZL||^2 + ||C_t S_t - ZL||^2 + beta ||ZL - DB||^2.
double quant_objective(const QuantModel& model, const Matrix& s_i, const Matrix& s_t,
                       const Matrix& labels, double beta);

// Persistence: one binary matrix file per transform plus a code file with
// magic "SPDQCOD1", n / m / k_d as 64-bit little-endian unsigned integers,
// and n * m code bytes (requires k_d <= 256).
void write_codes(const CodeTable& codes, const std::filesystem::path& path);
CodeTable read_codes(const std::filesystem::path& path);

void save_quant_model(const QuantModel& model, const std::filesystem::path& dir);
QuantModel load_quant_model(const std::filesystem::path& dir);

}  // namespace spdq::quant
