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
#include <filesystem>

#include "spdq/data.hpp"
#include "spdq/linalg.hpp"

using namespace spdq;
using namespace spdq::data;

namespace {

SyntheticSpec small_spec(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.num_classes = 4;
    spec.n = 60;
    spec.image_dim = 12;
    spec.text_dim = 9;
    spec.separation = 10.0;
    spec.noise = 0.1;
    spec.seed = seed;
    return spec;
}

std::filesystem::path temp_dir(const char* leaf) {
    auto dir = std::filesystem::temp_directory_path() / leaf;
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("generator is deterministic") {
    const Dataset a = generate_synthetic(small_spec(3));
    const Dataset b = generate_synthetic(small_spec(3));
    CHECK(a.x_i == b.x_i);
    CHECK(a.x_t == b.x_t);
    CHECK(a.labels == b.labels);

    const Dataset c = generate_synthetic(small_spec(4));
    CHECK(!(a.x_i == c.x_i));
}

TEST_CASE("noise-free single-label latents coincide within a class") {
    SyntheticSpec spec = small_spec(5);
    spec.noise = 0.0;
    SyntheticTrace trace;
    generate_synthetic(spec, &trace);
    for (std::size_t j = spec.num_classes; j < spec.n; ++j) {
        const std::size_t buddy = j % spec.num_classes;  // same class, first occurrence
        for (std::size_t i = 0; i < trace.latents.rows(); ++i) {
            CHECK(trace.latents(i, j) == trace.latents(i, buddy));
        }
    }
}

TEST_CASE("single-label class sizes differ by at most one") {
    SyntheticSpec spec = small_spec(6);
    spec.n = 61;  // not divisible by the class count
    const Dataset ds = generate_synthetic(spec);
    std::vector<std::size_t> counts(spec.num_classes, 0);
    for (std::size_t j = 0; j < spec.n; ++j) {
        for (std::size_t k = 0; k < spec.num_classes; ++k) {
            counts[k] += ds.labels(k, j) == 1.0 ? 1 : 0;
        }
    }
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    CHECK(*hi - *lo <= 1);
}

TEST_CASE("prototype separation supports a perfect nearest-prototype classifier") {
    SyntheticSpec spec = small_spec(7);
    spec.separation = 10.0;
    spec.noise = 0.1;
    SyntheticTrace trace;
    const Dataset ds = generate_synthetic(spec, &trace);
    std::size_t correct = 0;
    for (std::size_t j = 0; j < spec.n; ++j) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_k = 0;
        for (std::size_t k = 0; k < spec.num_classes; ++k) {
            double d2 = 0.0;
            for (std::size_t i = 0; i < trace.latents.rows(); ++i) {
                const double diff = trace.latents(i, j) - trace.prototypes(i, k);
                d2 += diff * diff;
            }
            if (d2 < best) {
                best = d2;
                best_k = k;
            }
        }
        correct += ds.labels(best_k, j) == 1.0 ? 1 : 0;
    }
    CHECK(correct == spec.n);
}

TEST_CASE("multi-label mode assigns one to three labels per point") {
    SyntheticSpec spec = small_spec(8);
    spec.num_classes = 8;
    spec.n = 200;
    spec.label_mode = LabelMode::multi;
    const Dataset ds = generate_synthetic(spec);
    bool saw_multi = false;
    for (std::size_t j = 0; j < spec.n; ++j) {
        std::size_t count = 0;
        for (std::size_t k = 0; k < spec.num_classes; ++k) count += ds.labels(k, j) == 1.0;
        CHECK(count >= 1);
        CHECK(count <= 3);
        saw_multi = saw_multi || count > 1;
    }
    CHECK(saw_multi);
}

TEST_CASE("generator rejects infeasible requests") {
    SyntheticSpec spec = small_spec(9);
    spec.num_classes = 1;
    CHECK_THROWS_AS(generate_synthetic(spec), InvalidArgument);
    spec = small_spec(9);
    spec.n = 3;
    CHECK_THROWS_AS(generate_synthetic(spec), InvalidArgument);
    spec = small_spec(9);
    spec.latent_dim = 2;  // fewer dims than classes: prototypes cannot be placed
    CHECK_THROWS_AS(generate_synthetic(spec), InvalidArgument);
}

TEST_CASE("split produces the requested sizes deterministically") {
    Dataset ds = generate_synthetic(small_spec(10));
    SUBCASE("80/10/10 of 100") {
        SyntheticSpec spec = small_spec(10);
        spec.n = 100;
        ds = generate_synthetic(spec);
        split(ds, 0.8, 0.1, 0.1, 42);
        CHECK(indices_of(ds, SplitTag::train).size() == 80);
        CHECK(indices_of(ds, SplitTag::validation).size() == 10);
        CHECK(indices_of(ds, SplitTag::query).size() == 10);

        Dataset again = generate_synthetic(spec);
        split(again, 0.8, 0.1, 0.1, 42);
        CHECK(again.tags == ds.tags);
    }
    SUBCASE("everything train") {
        split(ds, 1.0, 0.0, 0.0, 1);
        CHECK(indices_of(ds, SplitTag::train).size() == ds.count());
    }
    SUBCASE("fractions must sum to one") {
        CHECK_THROWS_AS(split(ds, 0.5, 0.1, 0.1, 1), InvalidArgument);
    }
}

TEST_CASE("subset gathers all three matrices and the tags identically") {
    Dataset ds = generate_synthetic(small_spec(11));
    split(ds, 0.5, 0.25, 0.25, 7);
    const std::vector<std::size_t> cols{5, 0, 17, 3};
    const Dataset sub = subset(ds, cols);
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (std::size_t i = 0; i < ds.x_i.rows(); ++i) CHECK(sub.x_i(i, j) == ds.x_i(i, cols[j]));
        for (std::size_t i = 0; i < ds.x_t.rows(); ++i) CHECK(sub.x_t(i, j) == ds.x_t(i, cols[j]));
        for (std::size_t i = 0; i < ds.labels.rows(); ++i) {
            CHECK(sub.labels(i, j) == ds.labels(i, cols[j]));
        }
        CHECK(sub.tags[j] == ds.tags[cols[j]]);
    }
}

TEST_CASE("dataset round trips bitwise through both file formats") {
    Dataset ds = generate_synthetic(small_spec(12));
    split(ds, 0.6, 0.2, 0.2, 3);
    for (FileFormat format : {FileFormat::binary, FileFormat::csv}) {
        const auto dir = temp_dir(format == FileFormat::binary ? "spdq_data_bin" : "spdq_data_csv");
        save_dataset(ds, dir, format);
        const Dataset loaded = load_dataset(dir);
        CHECK(loaded.x_i == ds.x_i);
        CHECK(loaded.x_t == ds.x_t);
        CHECK(loaded.labels == ds.labels);
        CHECK(loaded.tags == ds.tags);
        CHECK(loaded.seed == ds.seed);
    }
}

TEST_CASE("loader rejects inconsistent directories") {
    Dataset ds = generate_synthetic(small_spec(13));
    const auto dir = temp_dir("spdq_data_bad");
    save_dataset(ds, dir);

    SUBCASE("missing manifest") {
        std::filesystem::remove(dir / "manifest.json");
        CHECK_THROWS_AS(load_dataset(dir), MissingFileError);
    }
    SUBCASE("column count mismatch") {
        write_matrix_binary(Matrix(12, 3), dir / "xi.bin");
        CHECK_THROWS_AS(load_dataset(dir), InvalidArgument);
    }
    SUBCASE("all-zero label column is reported with its index") {
        Matrix labels = ds.labels;
        for (std::size_t k = 0; k < labels.rows(); ++k) labels(k, 2) = 0.0;
        write_matrix_binary(labels, dir / "labels.bin");
        try {
            load_dataset(dir);
            FAIL("expected a validation error");
        } catch (const InvalidArgument& e) {
            CHECK(std::string(e.what()).find(" 2") != std::string::npos);
        }
    }
}

TEST_CASE("validate_dataset flags non-binary labels") {
    Dataset ds = generate_synthetic(small_spec(14));
    ds.labels(0, 0) = 0.5;
    CHECK_THROWS_AS(validate_dataset(ds), InvalidArgument);
}
