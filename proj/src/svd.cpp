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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "spdq/linalg.hpp"

namespace spdq {

namespace {

// One-sided Jacobi (Hestenes). Columns of the work matrix are rotated in
// pairs until they are mutually orthogonal; singular values are the final
// column norms. Column-major storage keeps the rotations contiguous.

struct ColMajor {
    std::size_t rows = 0, cols = 0;
    std::vector<double> v;
    double* col(std::size_t j) { return v.data() + j * rows; }
    const double* col(std::size_t j) const { return v.data() + j * rows; }
};

double col_dot(const ColMajor& m, std::size_t p, std::size_t q) {
    const double* a = m.col(p);
    const double* b = m.col(q);
    double acc = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) acc += a[i] * b[i];
    return acc;
}

void rotate_cols(ColMajor& m, std::size_t p, std::size_t q, double c, double s) {
    double* a = m.col(p);
    double* b = m.col(q);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double ai = a[i];
        const double bi = b[i];
        a[i] = c * ai - s * bi;
        b[i] = s * ai + c * bi;
    }
}

constexpr int kMaxSweeps = 64;
constexpr double kPairTol = 1e-15;

SvdResult svd_tall(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();

    ColMajor w{m, n, std::vector<double>(m * n)};
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) w.col(j)[i] = a(i, j);
    }
    ColMajor v{n, n, std::vector<double>(n * n, 0.0)};
    for (std::size_t j = 0; j < n; ++j) v.col(j)[j] = 1.0;

    bool converged = (n <= 1);
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        double max_off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = col_dot(w, p, p);
                const double beta = col_dot(w, q, q);
                const double gamma = col_dot(w, p, q);
                if (alpha == 0.0 || beta == 0.0) continue;
                const double denom = std::sqrt(alpha * beta);
                const double off = std::fabs(gamma) / denom;
                max_off = std::max(max_off, off);
                if (off <= kPairTol) continue;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                rotate_cols(w, p, q, c, s);
                rotate_cols(v, p, q, c, s);
            }
        }
        if (max_off <= kPairTol) converged = true;
    }
    if (!converged) {
        throw NumericalError("svd: Jacobi sweeps did not converge within budget");
    }

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(col_dot(w, j, j));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    SvdResult out;
    out.sigma.resize(n);
    out.u = Matrix(m, n);
    out.v = Matrix(n, n);
    std::vector<bool> needs_fill(n, false);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.sigma[j] = sigma[src];
        for (std::size_t i = 0; i < n; ++i) out.v(i, j) = v.col(src)[i];
        if (sigma[src] > 0.0) {
            const double inv = 1.0 / sigma[src];
            const double* wc = w.col(src);
            for (std::size_t i = 0; i < m; ++i) out.u(i, j) = wc[i] * inv;
        } else {
            needs_fill[j] = true;
        }
    }

    // Zero singular values leave u columns undefined; complete them to an
    // orthonormal set from coordinate vectors via Gram-Schmidt so the
    // orthogonality contract holds regardless of rank.
    std::size_t cursor = 0;
    std::vector<double> work(m);
    std::vector<double> best(m);
    auto residual_norm = [&](std::size_t cand) {
        std::fill(work.begin(), work.end(), 0.0);
        work[cand] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t k = 0; k < n; ++k) {
                if (needs_fill[k]) continue;
                double proj = 0.0;
                for (std::size_t i = 0; i < m; ++i) proj += work[i] * out.u(i, k);
                for (std::size_t i = 0; i < m; ++i) work[i] -= proj * out.u(i, k);
            }
        }
        return std::sqrt(dot(work, work));
    };
    for (std::size_t j = 0; j < n; ++j) {
        if (!needs_fill[j]) continue;
        double best_norm = -1.0;
        for (std::size_t tries = 0; tries < m; ++tries) {
            const std::size_t cand = (cursor + tries) % m;
            const double norm = residual_norm(cand);
            if (norm > best_norm) {
                best_norm = norm;
                best = work;
            }
            if (norm > 0.25) {
                cursor = cand + 1;
                break;
            }
        }
        if (best_norm <= 0.0) throw NumericalError("svd: basis completion failed");
        const double norm = std::sqrt(dot(best, best));
        for (std::size_t i = 0; i < m; ++i) out.u(i, j) = best[i] / norm;
        needs_fill[j] = false;
    }
    ensure_finite(out.u, "svd");
    ensure_finite(out.v, "svd");
    return out;
}

}  // namespace

SvdResult svd(const Matrix& a) {
    if (a.rows() == 0 || a.cols() == 0) throw InvalidArgument("svd: empty matrix");
    ensure_finite(a, "svd input");
    if (a.rows() >= a.cols()) return svd_tall(a);
    SvdResult r = svd_tall(transpose(a));
    std::swap(r.u, r.v);
    return r;
}

}  // namespace spdq
