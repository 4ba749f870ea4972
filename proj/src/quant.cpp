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

#include "spdq/quant.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "spdq/linalg.hpp"
#include "spdq/random.hpp"

namespace spdq::quant {

CodeTable random_codes(std::size_t n, std::size_t m, std::size_t k_d, std::uint64_t seed) {
    if (m == 0 || k_d == 0) throw InvalidArgument("random_codes: m and k_d must be positive");
    CodeTable codes{n, m, k_d, std::vector<std::uint16_t>(n * m)};
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint32_t> dist(0, static_cast<std::uint32_t>(k_d - 1));
    for (auto& e : codes.entries) e = static_cast<std::uint16_t>(dist(rng));
    return codes;
}

Matrix update_c(const Matrix& s, const Matrix& zl) {
    if (s.cols() != zl.cols()) throw DimensionError("update_c: sample counts differ");
    if (zl.rows() > s.rows()) {
        throw DimensionError("update_c: label dim exceeds representation dim");
    }
    const Matrix p = matmul_nt(zl, s);  // d_z x d_s
    const SvdResult f = svd(p);
    return matmul_nt(f.u, f.v);
}

Matrix update_z(const Matrix& ci_si, const Matrix& ct_st, const Matrix& d, const CodeTable& codes,
                const Matrix& labels, double beta, double ridge) {
    if (ci_si.rows() != ct_st.rows() || ci_si.cols() != ct_st.cols()) {
        throw DimensionError("update_z: aligned representation shapes differ");
    }
    if (labels.cols() != ci_si.cols()) throw DimensionError("update_z: label count mismatch");
    if (beta < 0.0) throw InvalidArgument("update_z: negative beta");

    Matrix numer = add(ci_si, ct_st);
    if (beta != 0.0) {
        const Matrix db = reconstruct(d, codes);
        if (db.rows() != numer.rows() || db.cols() != numer.cols()) {
            throw DimensionError("update_z: reconstruction shape mismatch");
        }
        add_inplace(numer, db, beta);
    }
    const Matrix rhs = matmul_nt(numer, labels);  // d_z x K_c
    Matrix gram = matmul_nt(labels, labels);      // K_c x K_c
    scale_inplace(gram, 2.0 + beta);
    const Matrix x = solve_spd(gram, transpose(rhs), ridge);  // K_c x d_z
    return transpose(x);
}

Matrix update_d(const Matrix& zl, const CodeTable& codes, double ridge,
                std::vector<std::size_t>* unused) {
    if (codes.n != zl.cols()) throw DimensionError("update_d: code count mismatch");
    const std::size_t mk = codes.m * codes.k_d;
    const std::size_t d_z = zl.rows();

    // RHS = ZL B^T via scatter-add of point columns into selected codewords.
    Matrix rhs(d_z, mk);
    for (std::size_t point = 0; point < codes.n; ++point) {
        const auto code = codes.code(point);
        for (std::size_t slot = 0; slot < codes.m; ++slot) {
            const std::size_t col = slot * codes.k_d + code[slot];
            for (std::size_t i = 0; i < d_z; ++i) rhs(i, col) += zl(i, point);
        }
    }

    // Gram = B B^T counts co-selections.
    Matrix gram(mk, mk);
    for (std::size_t point = 0; point < codes.n; ++point) {
        const auto code = codes.code(point);
        for (std::size_t a = 0; a < codes.m; ++a) {
            const std::size_t ca = a * codes.k_d + code[a];
            for (std::size_t b = 0; b < codes.m; ++b) {
                gram(ca, b * codes.k_d + code[b]) += 1.0;
            }
        }
    }

    if (unused != nullptr) {
        unused->clear();
        for (std::size_t c = 0; c < mk; ++c) {
            if (gram(c, c) == 0.0) unused->push_back(c);
        }
    }

    const Matrix x = solve_spd(gram, transpose(rhs), ridge);  // mk x d_z
    return transpose(x);
}

Matrix reconstruct(const Matrix& d, const CodeTable& codes) {
    if (d.cols() != codes.m * codes.k_d) throw DimensionError("reconstruct: dictionary/code mismatch");
    Matrix out(d.rows(), codes.n);
    for (std::size_t point = 0; point < codes.n; ++point) {
        const auto code = codes.code(point);
        for (std::size_t slot = 0; slot < codes.m; ++slot) {
            const std::size_t col = slot * codes.k_d + code[slot];
            for (std::size_t i = 0; i < d.rows(); ++i) out(i, point) += d(i, col);
        }
    }
    return out;
}

std::vector<double> reconstruct_point(const Matrix& d, std::span<const std::uint16_t> code) {
    const std::size_t m = code.size();
    if (m == 0 || d.cols() % m != 0) throw DimensionError("reconstruct_point: bad code length");
    const std::size_t k_d = d.cols() / m;
    std::vector<double> out(d.rows(), 0.0);
    for (std::size_t slot = 0; slot < m; ++slot) {
        const std::size_t col = slot * k_d + code[slot];
        for (std::size_t i = 0; i < d.rows(); ++i) out[i] += d(i, col);
    }
    return out;
}

IcmWorkspace IcmWorkspace::build(const Matrix& d, std::size_t m, std::size_t k_d) {
    if (d.cols() != m * k_d) throw DimensionError("icm: dictionary has wrong column count");
    IcmWorkspace ws;
    ws.m = m;
    ws.k_d = k_d;
    ws.codewords = transpose(d);
    ws.sq_norms.resize(m * k_d);
    for (std::size_t c = 0; c < m * k_d; ++c) {
        const double* row = ws.codewords.row_ptr(c);
        double acc = 0.0;
        for (std::size_t i = 0; i < ws.codewords.cols(); ++i) acc += row[i] * row[i];
        ws.sq_norms[c] = acc;
    }
    return ws;
}

double icm_refine(std::span<const double> target, const IcmWorkspace& ws,
                  std::span<std::uint16_t> code, int sweeps) {
    if (sweeps < 1) throw InvalidArgument("icm: sweeps must be >= 1");
    if (code.size() != ws.m) throw DimensionError("icm: code length mismatch");
    const std::size_t d_z = ws.codewords.cols();
    if (target.size() != d_z) throw DimensionError("icm: target dimension mismatch");

    // residual = target - sum of selected codewords
    std::vector<double> residual(target.begin(), target.end());
    for (std::size_t slot = 0; slot < ws.m; ++slot) {
        const double* cw = ws.codewords.row_ptr(slot * ws.k_d + code[slot]);
        for (std::size_t i = 0; i < d_z; ++i) residual[i] -= cw[i];
    }

    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (std::size_t slot = 0; slot < ws.m; ++slot) {
            const std::size_t base = slot * ws.k_d;
            const double* current = ws.codewords.row_ptr(base + code[slot]);
            for (std::size_t i = 0; i < d_z; ++i) residual[i] += current[i];

            // argmin_k ||residual - d_k||^2 = argmax_k 2 <residual, d_k> - ||d_k||^2,
            // ties to the lowest index.
            std::size_t best = 0;
            double best_score = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < ws.k_d; ++k) {
                const double* cw = ws.codewords.row_ptr(base + k);
                double ip = 0.0;
                for (std::size_t i = 0; i < d_z; ++i) ip += residual[i] * cw[i];
                const double score = 2.0 * ip - ws.sq_norms[base + k];
                if (score > best_score) {
                    best_score = score;
                    best = k;
                }
            }
            code[slot] = static_cast<std::uint16_t>(best);
            const double* chosen = ws.codewords.row_ptr(base + best);
            for (std::size_t i = 0; i < d_z; ++i) residual[i] -= chosen[i];
        }
    }
    double obj = 0.0;
    for (double v : residual) obj += v * v;
    return obj;
}

void icm_assign(std::span<const double> target, const Matrix& d, std::size_t m, std::size_t k_d,
                std::span<std::uint16_t> code, int sweeps) {
    const IcmWorkspace ws = IcmWorkspace::build(d, m, k_d);
    icm_refine(target, ws, code, sweeps);
}

double icm_refine_multistart(std::span<const double> target, const IcmWorkspace& ws,
                             std::span<std::uint16_t> code, int sweeps, int restarts,
                             std::uint64_t seed) {
    if (restarts < 1) throw InvalidArgument("icm: restarts must be >= 1");
    std::vector<std::uint16_t> best_code(code.begin(), code.end());
    double best_obj = icm_refine(target, ws, best_code, sweeps);
    std::vector<std::uint16_t> trial(ws.m);
    for (int attempt = 1; attempt < restarts; ++attempt) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
        std::uniform_int_distribution<std::uint32_t> dist(0,
                                                          static_cast<std::uint32_t>(ws.k_d - 1));
        for (auto& e : trial) e = static_cast<std::uint16_t>(dist(rng));
        const double obj = icm_refine(target, ws, trial, sweeps);
        if (obj < best_obj) {
            best_obj = obj;
            best_code = trial;
        }
    }
    std::copy(best_code.begin(), best_code.end(), code.begin());
    return best_obj;
}

namespace {

template <bool Parallel>
void icm_assign_all_impl(const Matrix& targets, const Matrix& d, CodeTable& codes, int sweeps,
                         int restarts, std::uint64_t seed) {
    if (codes.n != targets.cols()) throw DimensionError("icm_assign_all: target/code count");
    const IcmWorkspace ws = IcmWorkspace::build(d, codes.m, codes.k_d);
    const std::int64_t n = static_cast<std::int64_t>(codes.n);
#pragma omp parallel for schedule(dynamic, 16) if (Parallel)
    for (std::int64_t point = 0; point < n; ++point) {
        const std::size_t pt = static_cast<std::size_t>(point);
        std::vector<double> target = targets.col(pt);
        if (restarts > 1) {
            icm_refine_multistart(target, ws, codes.code(pt), sweeps, restarts,
                                  mix_seed(seed, pt));
        } else {
            icm_refine(target, ws, codes.code(pt), sweeps);
        }
    }
}

}  // namespace

void icm_assign_all(const Matrix& targets, const Matrix& d, CodeTable& codes, int sweeps,
                    int restarts, std::uint64_t seed) {
    icm_assign_all_impl<true>(targets, d, codes, sweeps, restarts, seed);
}

void icm_assign_all_serial(const Matrix& targets, const Matrix& d, CodeTable& codes, int sweeps,
                           int restarts, std::uint64_t seed) {
    icm_assign_all_impl<false>(targets, d, codes, sweeps, restarts, seed);
}

double quant_objective(const QuantModel& model, const Matrix& s_i, const Matrix& s_t,
                       const Matrix& labels, double beta) {
    const Matrix zl = matmul(model.z, labels);
    const double align_i = frobenius_sq(sub(matmul(model.c_i, s_i), zl));
    const double align_t = frobenius_sq(sub(matmul(model.c_t, s_t), zl));
    const double quant_err = frobenius_sq(sub(zl, reconstruct(model.d, model.codes)));
    return align_i + align_t + beta * quant_err;
}

namespace {

constexpr char kCodeMagic[8] = {'S', 'P', 'D', 'Q', 'C', 'O', 'D', '1'};

void put_u64_le(std::ostream& os, std::uint64_t v) {
    std::array<unsigned char, 8> b;
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::uint64_t get_u64_le(std::istream& is) {
    std::array<unsigned char, 8> b{};
    is.read(reinterpret_cast<char*>(b.data()), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void write_codes(const CodeTable& codes, const std::filesystem::path& path) {
    if (codes.k_d > 256) {
        throw InvalidArgument("code file stores one byte per slot, needs k_d <= 256");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kCodeMagic, 8);
    put_u64_le(out, codes.n);
    put_u64_le(out, codes.m);
    put_u64_le(out, codes.k_d);
    for (std::uint16_t e : codes.entries) {
        const unsigned char byte = static_cast<unsigned char>(e);
        out.write(reinterpret_cast<const char*>(&byte), 1);
    }
    if (!out) throw IoError("write failed: " + path.string());
}

CodeTable read_codes(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw MissingFileError("no such file: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCodeMagic, 8) != 0) {
        throw IoError(path.string() + ": bad code magic");
    }
    CodeTable codes;
    codes.n = get_u64_le(in);
    codes.m = get_u64_le(in);
    codes.k_d = get_u64_le(in);
    if (!in || codes.k_d == 0 || codes.k_d > 256 || codes.m == 0) {
        throw IoError(path.string() + ": bad code header");
    }
    codes.entries.resize(codes.n * codes.m);
    for (auto& e : codes.entries) {
        unsigned char byte = 0;
        in.read(reinterpret_cast<char*>(&byte), 1);
        if (byte >= codes.k_d) throw IoError(path.string() + ": code index out of range");
        e = byte;
    }
    if (!in) throw IoError(path.string() + ": truncated code payload");
    return codes;
}

void save_quant_model(const QuantModel& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_matrix_binary(model.c_i, dir / "c_i.bin");
    write_matrix_binary(model.c_t, dir / "c_t.bin");
    write_matrix_binary(model.z, dir / "z.bin");
    write_matrix_binary(model.d, dir / "d.bin");
    write_codes(model.codes, dir / "codes.bin");
}

QuantModel load_quant_model(const std::filesystem::path& dir) {
    QuantModel model;
    model.c_i = read_matrix_binary(dir / "c_i.bin");
    model.c_t = read_matrix_binary(dir / "c_t.bin");
    model.z = read_matrix_binary(dir / "z.bin");
    model.d = read_matrix_binary(dir / "d.bin");
    model.codes = read_codes(dir / "codes.bin");
    model.m = model.codes.m;
    model.k_d = model.codes.k_d;
    if (model.d.cols() != model.m * model.k_d) {
        throw ConfigError(dir.string() + ": dictionary and code table disagree");
    }
    return model;
}

}  // namespace spdq::quant
