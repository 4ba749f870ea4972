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

// Times every OpenMP kernel against its serial reference and checks that the
// two produce identical bits. Scale with --scale, repetitions with --reps.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spdq/linalg.hpp"
#include "spdq/mmd.hpp"
#include "spdq/parallel.hpp"
#include "spdq/quant.hpp"
#include "spdq/random.hpp"
#include "spdq/search.hpp"

using namespace spdq;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    using clock = std::chrono::steady_clock;
    fn();  // warm up
    const auto start = clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const auto stop = clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void report(const char* name, const std::string& size, double serial_ms, double parallel_ms,
            bool identical) {
    std::printf("%-24s %-18s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   %s\n", name,
                size.c_str(), serial_ms, parallel_ms, serial_ms / parallel_ms,
                identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_cap();

    double scale = 1.0;
    int reps = 3;
    CLI::App app{"serial vs OpenMP kernel comparison"};
    app.add_option("--scale", scale, "problem size multiplier");
    app.add_option("--reps", reps, "repetitions per measurement");
    CLI11_PARSE(app, argc, argv);

    std::printf("worker threads: %d\n\n", max_threads());
    std::mt19937_64 rng(1);

    {
        const std::size_t n = static_cast<std::size_t>(384 * scale);
        const Matrix a = random_gaussian(n, n, rng);
        const Matrix b = random_gaussian(n, n, rng);
        Matrix serial_out, parallel_out;
        const double ts = time_ms([&] { serial_out = matmul_serial(a, b); }, reps);
        const double tp = time_ms([&] { parallel_out = matmul(a, b); }, reps);
        report("matmul", std::to_string(n) + "^2", ts, tp, serial_out == parallel_out);
    }
    {
        const std::size_t n = static_cast<std::size_t>(400 * scale);
        const Matrix p = random_gaussian(16, n, rng);
        const Matrix q = random_gaussian(16, n, rng);
        const mmd::KernelBank bank = mmd::KernelBank::multi_scale(16.0);
        double serial_out = 0.0, parallel_out = 0.0;
        const double ts = time_ms([&] { serial_out = mmd::mmd_sq_biased_serial(p, q, bank); },
                                  reps);
        const double tp = time_ms([&] { parallel_out = mmd::mmd_sq_biased(p, q, bank); }, reps);
        report("mmd_sq_biased", "2x" + std::to_string(n) + " samples", ts, tp,
               serial_out == parallel_out);
    }
    {
        const std::size_t n = static_cast<std::size_t>(1500 * scale);
        const std::size_t d_z = 64, m = 4, k_d = 64;
        const Matrix dict = random_gaussian(d_z, m * k_d, rng);
        const Matrix targets = random_gaussian(d_z, n, rng);
        const quant::CodeTable init = quant::random_codes(n, m, k_d, 7);
        quant::CodeTable serial_codes, parallel_codes;
        const double ts = time_ms(
            [&] {
                serial_codes = init;
                quant::icm_assign_all_serial(targets, dict, serial_codes, 3);
            },
            reps);
        const double tp = time_ms(
            [&] {
                parallel_codes = init;
                quant::icm_assign_all(targets, dict, parallel_codes, 3);
            },
            reps);
        report("icm_assign_all", std::to_string(n) + " points", ts, tp,
               serial_codes == parallel_codes);
    }
    {
        const std::size_t n = static_cast<std::size_t>(200000 * scale);
        const std::size_t d_z = 64, m = 8, k_d = 256;
        search::SearchIndex index;
        index.dict = random_gaussian(d_z, m * k_d, rng);
        index.codes = quant::random_codes(n, m, k_d, 9);
        const Matrix q = random_gaussian(d_z, 1, rng);
        std::vector<search::RankEntry> serial_out, parallel_out;
        const double ts = time_ms([&] { serial_out = search::rank_serial(q.col(0), index, 10); },
                                  reps);
        const double tp = time_ms([&] { parallel_out = search::rank(q.col(0), index, 10); },
                                  reps);
        bool same = serial_out.size() == parallel_out.size();
        for (std::size_t i = 0; same && i < serial_out.size(); ++i) {
            same = serial_out[i].id == parallel_out[i].id &&
                   serial_out[i].score == parallel_out[i].score;
        }
        report("aqd_rank", std::to_string(n) + " items", ts, tp, same);
    }
    return 0;
}
