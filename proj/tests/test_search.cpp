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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "spdq/linalg.hpp"
#include "spdq/random.hpp"
#include "spdq/search.hpp"

using namespace spdq;
using namespace spdq::search;

namespace {

SearchIndex make_index(std::mt19937_64& rng, std::size_t d_z, std::size_t m, std::size_t k_d,
                       std::size_t n) {
    SearchIndex index;
    index.dict = random_gaussian(d_z, m * k_d, rng);
    index.codes = quant::random_codes(n, m, k_d, rng());
    index.db_modality = net::Modality::text;
    return index;
}

}  // namespace

TEST_CASE("query encoding composes the shared head with the transform") {
    net::EncoderConfig cfg;
    cfg.image_input_dim = 6;
    cfg.text_input_dim = 5;
    cfg.image_hidden = {8};
    cfg.text_hidden = {8};
    cfg.shared_dim = 4;
    cfg.private_dim = 2;
    net::EncoderParams params = net::init_params(cfg, 3, 11);
    std::mt19937_64 rng(12);
    const Matrix x = random_gaussian(6, 1, rng);

    // C = I returns the shared representation unchanged.
    const net::EncoderOutput out = net::forward(params, x, net::Modality::image);
    const std::vector<double> rep_id =
        encode_query(params, x, net::Modality::image, Matrix::identity(4));
    CHECK(rep_id == out.s.col(0));

    // Arbitrary C matches the composition with forward().s.
    const Matrix c = random_row_orthonormal(3, 4, rng);
    const std::vector<double> rep = encode_query(params, x, net::Modality::image, c);
    const std::vector<double> expected = matmul(c, out.s).col(0);
    for (std::size_t i = 0; i < rep.size(); ++i) {
        CHECK(rep[i] == doctest::Approx(expected[i]).epsilon(1e-14));
    }

    // Zero input through a zero-weight network gives the zero vector.
    auto zero_branch = [](net::Branch& b) {
        for (net::Affine& h : b.hidden) scale_inplace(h.w, 0.0);
        scale_inplace(b.shared_head.w, 0.0);
        scale_inplace(b.private_head.w, 0.0);
        scale_inplace(b.classifier.w, 0.0);
    };
    zero_branch(params.image);
    const std::vector<double> zero_rep =
        encode_query(params, Matrix(6, 1), net::Modality::image, c);
    for (double v : zero_rep) CHECK(v == 0.0);

    CHECK_THROWS_AS(encode_query(params, Matrix(9, 1), net::Modality::image, c), DimensionError);
}

TEST_CASE("lookup table entries are exact inner products") {
    std::mt19937_64 rng(1);
    const std::size_t d_z = 7, m = 3, k_d = 5;
    const Matrix dict = random_gaussian(d_z, m * k_d, rng);
    const Matrix q = random_gaussian(d_z, 1, rng);
    const Matrix lut = build_lut(q.col(0), dict, m, k_d);
    for (std::size_t slot = 0; slot < m; ++slot) {
        for (std::size_t k = 0; k < k_d; ++k) {
            double direct = 0.0;
            for (std::size_t i = 0; i < d_z; ++i) direct += q(i, 0) * dict(i, slot * k_d + k);
            CHECK(lut(slot, k) == doctest::Approx(direct).epsilon(1e-12));
        }
    }
    // Zero query -> all-zero table.
    CHECK(max_abs(build_lut(std::vector<double>(d_z, 0.0), dict, m, k_d)) == 0.0);
}

TEST_CASE("one-hot codewords extract query coordinates") {
    const std::size_t d_z = 4;
    Matrix dict(d_z, d_z);  // m = 1, k_d = d_z, codeword k = e_k
    for (std::size_t k = 0; k < d_z; ++k) dict(k, k) = 1.0;
    const std::vector<double> q{0.5, -1.5, 2.0, 3.25};
    const Matrix lut = build_lut(q, dict, 1, d_z);
    for (std::size_t k = 0; k < d_z; ++k) CHECK(lut(0, k) == q[k]);
}

TEST_CASE("aqd score sums the selected table entries") {
    std::mt19937_64 rng(2);
    const std::size_t d_z = 6, m = 4, k_d = 8;
    const Matrix dict = random_gaussian(d_z, m * k_d, rng);
    const Matrix q = random_gaussian(d_z, 1, rng);
    const Matrix lut = build_lut(q.col(0), dict, m, k_d);

    const std::vector<std::uint16_t> code{3, 0, 7, 2};
    double expected = 0.0;
    for (std::size_t slot = 0; slot < m; ++slot) expected += lut(slot, code[slot]);
    CHECK(aqd_score(lut, code) == expected);

    // Zero table -> zero score; single dictionary -> single entry.
    CHECK(aqd_score(Matrix(m, k_d), code) == 0.0);
    const Matrix one_lut = build_lut(q.col(0), dict, 1, m * k_d);
    CHECK(aqd_score(one_lut, std::vector<std::uint16_t>{5}) == one_lut(0, 5));

    const std::vector<std::uint16_t> bad{3, 0, 7, 99};
    CHECK_THROWS_AS(aqd_score(lut, bad), InvalidArgument);
}

TEST_CASE("aqd equals the inner product with the reconstructed vector") {
    std::mt19937_64 rng(3);
    const std::size_t d_z = 16, m = 4, k_d = 16;
    const Matrix dict = random_gaussian(d_z, m * k_d, rng);
    std::uniform_int_distribution<int> pick(0, k_d - 1);
    for (int t = 0; t < 1000; ++t) {
        const Matrix q = random_gaussian(d_z, 1, rng);
        std::vector<std::uint16_t> code(m);
        for (auto& c : code) c = static_cast<std::uint16_t>(pick(rng));
        const Matrix lut = build_lut(q.col(0), dict, m, k_d);
        const std::vector<double> rec = quant::reconstruct_point(dict, code);
        CHECK(std::fabs(aqd_score(lut, code) - dot(q.col(0), rec)) <= 1e-10);
    }
}

TEST_CASE("rank orders by descending score with ascending-id ties") {
    SearchIndex index;
    index.dict = Matrix(2, 4);  // all-zero dictionaries: every score ties at 0
    index.codes = quant::random_codes(5, 2, 2, 1);
    const std::vector<double> q{1.0, -2.0};
    const auto ranked = rank(q, index, 5);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        CHECK(ranked[i].id == i);
        CHECK(ranked[i].score == 0.0);
    }
}

TEST_CASE("rank matches exhaustive scoring with reconstructed vectors") {
    std::mt19937_64 rng(4);
    const std::size_t d_z = 12, m = 3, k_d = 8, n = 200;
    SearchIndex index = make_index(rng, d_z, m, k_d, n);
    const Matrix q = random_gaussian(d_z, 1, rng);
    const auto ranked = rank(q.col(0), index, n);

    std::vector<std::pair<double, std::size_t>> exhaustive;
    for (std::size_t item = 0; item < n; ++item) {
        const std::vector<double> rec = quant::reconstruct_point(index.dict, index.codes.code(item));
        exhaustive.emplace_back(dot(q.col(0), rec), item);
    }
    std::sort(exhaustive.begin(), exhaustive.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(ranked[i].id == exhaustive[i].second);
        CHECK(ranked[i].score == doctest::Approx(exhaustive[i].first).epsilon(1e-10));
    }
}

TEST_CASE("rank handles one-item indexes and rejects empty or oversized requests") {
    std::mt19937_64 rng(5);
    SearchIndex index = make_index(rng, 4, 2, 4, 1);
    const Matrix q = random_gaussian(4, 1, rng);
    const auto ranked = rank(q.col(0), index, 1);
    CHECK(ranked.size() == 1);
    CHECK(ranked[0].id == 0);

    SearchIndex empty;
    empty.dict = Matrix(4, 8);
    empty.codes = quant::CodeTable{0, 2, 4, {}};
    CHECK_THROWS_AS(rank(q.col(0), empty, 1), InvalidArgument);
    CHECK_THROWS_AS(rank(q.col(0), index, 2), InvalidArgument);
}

TEST_CASE("permuting database insertion permutes ids but not the score multiset") {
    std::mt19937_64 rng(6);
    const std::size_t d_z = 8, m = 2, k_d = 8, n = 60;
    SearchIndex index = make_index(rng, d_z, m, k_d, n);
    const Matrix q = random_gaussian(d_z, 1, rng);
    const auto base = rank(q.col(0), index, n);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    SearchIndex shuffled = index;
    shuffled.ids.resize(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
        shuffled.ids[pos] = perm[pos];
        for (std::size_t slot = 0; slot < m; ++slot) {
            shuffled.codes.code(pos)[slot] = index.codes.code(perm[pos])[slot];
        }
    }
    const auto moved = rank(q.col(0), shuffled, n);
    std::vector<double> scores_a, scores_b;
    for (std::size_t i = 0; i < n; ++i) {
        scores_a.push_back(base[i].score);
        scores_b.push_back(moved[i].score);
    }
    CHECK(scores_a == scores_b);  // sorted order => multiset equality
    for (std::size_t i = 0; i < n; ++i) {
        // Same item behind the permuted id, up to exact ties.
        if ((i + 1 < n && base[i].score == base[i + 1].score) ||
            (i > 0 && base[i].score == base[i - 1].score)) {
            continue;
        }
        CHECK(moved[i].id == base[i].id);
    }
}

TEST_CASE("scoring n items costs exactly n*m lookups after one table build") {
    std::mt19937_64 rng(7);
    const std::size_t d_z = 8, m = 3, k_d = 16, n = 77;
    SearchIndex index = make_index(rng, d_z, m, k_d, n);
    const Matrix q = random_gaussian(d_z, 1, rng);
    ScanStats stats;
    rank(q.col(0), index, 10, &stats);
    CHECK(stats.lookups == n * m);
    CHECK(stats.table_entries == m * k_d);
}

TEST_CASE("parallel rank matches the serial reference bit for bit") {
    std::mt19937_64 rng(8);
    SearchIndex index = make_index(rng, 16, 4, 16, 500);
    const Matrix q = random_gaussian(16, 1, rng);
    const auto a = rank(q.col(0), index, 500);
    const auto b = rank_serial(q.col(0), index, 500);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].score == b[i].score);
    }
}

TEST_CASE("index persistence round trips") {
    std::mt19937_64 rng(9);
    SearchIndex index = make_index(rng, 6, 2, 8, 30);
    index.db_modality = net::Modality::image;
    index.ids.resize(30);
    std::iota(index.ids.begin(), index.ids.end(), 100);
    const auto dir = std::filesystem::temp_directory_path() / "spdq_search_test";
    save_index(index, dir);
    const SearchIndex loaded = load_index(dir);
    CHECK(loaded.dict == index.dict);
    CHECK(loaded.codes == index.codes);
    CHECK(loaded.db_modality == index.db_modality);
    CHECK(loaded.ids == index.ids);
}
