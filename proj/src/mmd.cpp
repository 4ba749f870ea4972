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

#include "spdq/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "spdq/linalg.hpp"

namespace spdq::mmd {

KernelBank KernelBank::single(double tau) {
    KernelBank bank{{tau}, {1.0}};
    bank.validate();
    return bank;
}

KernelBank KernelBank::multi_scale(double base_sq_dist) {
    return multi_scale(base_sq_dist, {0.25, 0.5, 1.0, 2.0, 4.0});
}

KernelBank KernelBank::multi_scale(double base_sq_dist, const std::vector<double>& scales) {
    if (scales.empty()) throw InvalidArgument("kernel bank: no scales");
    if (!(base_sq_dist > 0.0)) base_sq_dist = 1.0;
    KernelBank bank;
    const double w = 1.0 / static_cast<double>(scales.size());
    for (double scale : scales) {
        bank.bandwidths.push_back(base_sq_dist * scale);
        bank.weights.push_back(w);
    }
    // Exact sum-to-one regardless of the division rounding.
    bank.weights.back() = 1.0;
    for (std::size_t i = 0; i + 1 < bank.weights.size(); ++i) bank.weights.back() -= bank.weights[i];
    bank.validate();
    return bank;
}

void KernelBank::validate() const {
    if (bandwidths.empty() || bandwidths.size() != weights.size()) {
        throw InvalidArgument("kernel bank: bandwidth/weight lists must match and be non-empty");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < bandwidths.size(); ++i) {
        if (!(bandwidths[i] > 0.0)) throw InvalidArgument("kernel bank: bandwidth must be > 0");
        if (weights[i] < 0.0) throw InvalidArgument("kernel bank: negative weight");
        sum += weights[i];
    }
    if (std::fabs(sum - 1.0) > 1e-12) {
        throw InvalidArgument("kernel bank: weights must sum to 1");
    }
}

namespace {

inline double bank_kernel_from_sq(double d2, const KernelBank& bank) {
    double acc = 0.0;
    for (std::size_t a = 0; a < bank.bandwidths.size(); ++a) {
        acc += bank.weights[a] * std::exp(-d2 / bank.bandwidths[a]);
    }
    return acc;
}

// Rows-as-samples copy so pairwise loops touch contiguous memory.
Matrix to_sample_rows(const Matrix& samples) { return transpose(samples); }

// sum over all (i, j) of k(x_i, y_j), row-parallel with a fixed-order final
// reduction so the value never depends on the thread count.
template <bool Parallel>
double pair_kernel_sum(const Matrix& x_rows, const Matrix& y_rows, const KernelBank& bank) {
    const std::size_t nx = x_rows.rows();
    const std::size_t ny = y_rows.rows();
    const std::size_t d = x_rows.cols();
    std::vector<double> partial(nx, 0.0);
    const std::int64_t n = static_cast<std::int64_t>(nx);
#pragma omp parallel for schedule(static) if (Parallel)
    for (std::int64_t ii = 0; ii < n; ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const double* xi = x_rows.row_ptr(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < ny; ++j) {
            const double* yj = y_rows.row_ptr(j);
            double d2 = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = xi[k] - yj[k];
                d2 += diff * diff;
            }
            acc += bank_kernel_from_sq(d2, bank);
        }
        partial[i] = acc;
    }
    double total = 0.0;
    for (double v : partial) total += v;
    return total;
}

template <bool Parallel>
double mmd_sq_biased_impl(const Matrix& p, const Matrix& q, const KernelBank& bank) {
    bank.validate();
    if (p.cols() == 0 || q.cols() == 0) throw InvalidArgument("mmd_sq_biased: empty sample set");
    if (p.rows() != q.rows()) throw DimensionError("mmd_sq_biased: sample dimension mismatch");
    const Matrix pr = to_sample_rows(p);
    const Matrix qr = to_sample_rows(q);
    const double np = static_cast<double>(p.cols());
    const double nq = static_cast<double>(q.cols());
    const double spp = pair_kernel_sum<Parallel>(pr, pr, bank);
    const double sqq = pair_kernel_sum<Parallel>(qr, qr, bank);
    const double spq = pair_kernel_sum<Parallel>(pr, qr, bank);
    const double v = spp / (np * np) + sqq / (nq * nq) - 2.0 * spq / (np * nq);
    return std::max(v, 0.0);
}

void check_linear_inputs(const Matrix& p, const Matrix& q) {
    if (p.rows() != q.rows()) throw DimensionError("mmd_sq_linear: sample dimension mismatch");
    if (p.cols() != q.cols()) {
        throw InvalidArgument("mmd_sq_linear: sample counts must match (" +
                              std::to_string(p.cols()) + " vs " + std::to_string(q.cols()) + ")");
    }
    if (p.cols() < 2 || p.cols() % 2 != 0) {
        throw InvalidArgument("mmd_sq_linear: needs an even sample count >= 2, got " +
                              std::to_string(p.cols()));
    }
}

}  // namespace

double gaussian_kernel(std::span<const double> x, std::span<const double> y, double tau) {
    if (!(tau > 0.0)) throw InvalidArgument("gaussian_kernel: tau must be > 0");
    return std::exp(-sq_dist(x, y) / tau);
}

double multi_kernel(std::span<const double> x, std::span<const double> y, const KernelBank& bank) {
    bank.validate();
    return bank_kernel_from_sq(sq_dist(x, y), bank);
}

double mmd_sq_biased(const Matrix& p, const Matrix& q, const KernelBank& bank) {
    return mmd_sq_biased_impl<true>(p, q, bank);
}

double mmd_sq_biased_serial(const Matrix& p, const Matrix& q, const KernelBank& bank) {
    return mmd_sq_biased_impl<false>(p, q, bank);
}

double mmd_sq_linear(const Matrix& p, const Matrix& q, const KernelBank& bank) {
    bank.validate();
    check_linear_inputs(p, q);
    const std::size_t n = p.cols();
    const std::size_t d = p.rows();
    std::vector<double> a(d), b(d), c(d), e(d);
    double acc = 0.0;
    for (std::size_t t = 0; t + 1 < n; t += 2) {
        p.col_copy(t, a);
        p.col_copy(t + 1, b);
        q.col_copy(t, c);
        q.col_copy(t + 1, e);
        acc += bank_kernel_from_sq(sq_dist(a, b), bank) -
               bank_kernel_from_sq(sq_dist(a, e), bank) +
               bank_kernel_from_sq(sq_dist(c, e), bank) -
               bank_kernel_from_sq(sq_dist(c, b), bank);
    }
    return 2.0 * acc / static_cast<double>(n);
}

namespace {

// d/dx of the bank kernel at (x, y): sum_a w_a * exp(-||x-y||^2/tau_a) *
// (-2/tau_a) * (x - y), accumulated into grad with the given scale.
void add_kernel_grad(std::span<const double> x, std::span<const double> y, const KernelBank& bank,
                     double scale, Matrix& grad, std::size_t col) {
    const double d2 = sq_dist(x, y);
    double coef = 0.0;
    for (std::size_t a = 0; a < bank.bandwidths.size(); ++a) {
        coef += bank.weights[a] * std::exp(-d2 / bank.bandwidths[a]) * (-2.0 / bank.bandwidths[a]);
    }
    coef *= scale;
    for (std::size_t i = 0; i < x.size(); ++i) grad(i, col) += coef * (x[i] - y[i]);
}

}  // namespace

LinearMmdGrad mmd_sq_linear_grad(const Matrix& p, const Matrix& q, const KernelBank& bank) {
    bank.validate();
    check_linear_inputs(p, q);
    const std::size_t n = p.cols();
    const std::size_t d = p.rows();
    LinearMmdGrad out{Matrix(d, n), Matrix(d, n)};
    std::vector<double> a(d), b(d), c(d), e(d);
    const double scale = 2.0 / static_cast<double>(n);
    for (std::size_t t = 0; t + 1 < n; t += 2) {
        p.col_copy(t, a);
        p.col_copy(t + 1, b);
        q.col_copy(t, c);
        q.col_copy(t + 1, e);
        // eta = k(a,b) - k(a,e) + k(c,e) - k(c,b)
        add_kernel_grad(a, b, bank, scale, out.dp, t);       // d k(a,b) / da
        add_kernel_grad(a, e, bank, -scale, out.dp, t);      // -d k(a,e) / da
        add_kernel_grad(b, a, bank, scale, out.dp, t + 1);   // d k(a,b) / db
        add_kernel_grad(b, c, bank, -scale, out.dp, t + 1);  // -d k(c,b) / db
        add_kernel_grad(c, e, bank, scale, out.dq, t);       // d k(c,e) / dc
        add_kernel_grad(c, b, bank, -scale, out.dq, t);      // -d k(c,b) / dc
        add_kernel_grad(e, c, bank, scale, out.dq, t + 1);   // d k(c,e) / de
        add_kernel_grad(e, a, bank, -scale, out.dq, t + 1);  // -d k(a,e) / de
    }
    return out;
}

double median_sq_dist(const Matrix& samples, std::size_t cap) {
    const std::size_t n = samples.cols();
    if (n < 2) return 0.0;
    std::vector<std::size_t> pick;
    if (n <= cap) {
        for (std::size_t i = 0; i < n; ++i) pick.push_back(i);
    } else {
        for (std::size_t i = 0; i < cap; ++i) pick.push_back(i * n / cap);
    }
    std::vector<double> d2;
    d2.reserve(pick.size() * (pick.size() - 1) / 2);
    std::vector<double> xi(samples.rows()), xj(samples.rows());
    for (std::size_t i = 0; i < pick.size(); ++i) {
        samples.col_copy(pick[i], xi);
        for (std::size_t j = i + 1; j < pick.size(); ++j) {
            samples.col_copy(pick[j], xj);
            d2.push_back(sq_dist(xi, xj));
        }
    }
    const std::size_t mid = d2.size() / 2;
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid), d2.end());
    return d2[mid];
}

}  // namespace spdq::mmd
