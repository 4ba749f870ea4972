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
#include <optional>
#include <string>
#include <vector>

#include "spdq/matrix.hpp"

namespace spdq::data {

enum class SplitTag : std::uint8_t { train = 0, validation = 1, query = 2 };

const char* split_name(SplitTag tag);

/// Paired image/text features with binary multi-label ground truth. Column n
/// of x_i, x_t and labels always refers to the same item.
struct Dataset {
    Matrix x_i;                  // image_dim x n
    Matrix x_t;                  // text_dim x n
    Matrix labels;               // num_classes x n, entries in {0, 1}
    std::vector<SplitTag> tags;  // size n
    std::uint64_t seed = 0;      // generation seed, 0 when unknown

    std::size_t count() const { return labels.cols(); }
    std::size_t num_classes() const { return labels.rows(); }
};

/// Validates pairing, binary labels, and at least one label per column.
/// Throws with the offending column indices listed.
void validate_dataset(const Dataset& ds);

enum class LabelMode { single, multi };

struct SyntheticSpec {
    std::size_t num_classes = 5;
    std::size_t n = 1000;
    std::size_t image_dim = 128;
    std::size_t text_dim = 64;
    double separation = 10.0;
    double noise = 0.3;
    LabelMode label_mode = LabelMode::single;
    std::uint64_t seed = 1;
    std::size_t latent_dim = 0;  // 0 -> max(num_classes, 8)
};

/// Diagnostics from the generator, for tests that probe the latent geometry.
struct SyntheticTrace {
    Matrix prototypes;  // latent_dim x num_classes
    Matrix latents;     // latent_dim x n
};

/// Class prototypes are orthogonal directions scaled by `separation` (so any
/// two sit at distance separation * sqrt(2)); each point's latent is the mean
/// of its classes' prototypes plus Gaussian noise; observed features are
/// tanh(A latent + noise) under fixed random linear maps per modality.
/// Single-label mode assigns classes round-robin (sizes differ by at most 1);
/// multi mode draws 1-3 distinct labels per point.
Dataset generate_synthetic(const SyntheticSpec& spec, SyntheticTrace* trace = nullptr);

/// Assigns split tags over a seeded shuffle of column indices. Fractions must
/// be non-negative and sum to 1; counts are floor(fraction * n) with the
/// remainder going to the query split.
void split(Dataset& ds, double train_frac, double validation_frac, double query_frac,
           std::uint64_t seed);

std::vector<std::size_t> indices_of(const Dataset& ds, SplitTag tag);

/// Gathers the given columns of x_i, x_t, labels and tags identically.
Dataset subset(const Dataset& ds, const std::vector<std::size_t>& cols);

enum class FileFormat { binary, csv };

/// Directory layout: xi.<ext>, xt.<ext>, labels.<ext> plus manifest.json with
/// dims, class count, n, seed and per-split index lists.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir,
                  FileFormat format = FileFormat::binary);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace spdq::data
