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

#include "spdq/config.hpp"
#include "spdq/eval.hpp"
#include "spdq/net.hpp"
#include "spdq/quant.hpp"
#include "spdq/search.hpp"

namespace spdq::cli {

struct GenOptions {
    std::size_t classes = 5;
    std::size_t n = 1000;
    std::size_t image_dim = 128;
    std::size_t text_dim = 64;
    double separation = 10.0;
    double noise = 0.3;
    std::string label_mode = "single";
    double train_frac = 0.8;
    double validation_frac = 0.1;
    double query_frac = 0.1;
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "binary";
};
void cmd_gen(const GenOptions& opt);

struct TrainOptions {
    std::string config;  // optional config file; defaults otherwise
    std::string data;    // dataset directory (falls back to the config's path)
    std::string out;     // model directory
    std::optional<std::uint64_t> seed;
};
void cmd_train(const TrainOptions& opt);

/// Model directory contents: model.json manifest, encoder.bin, plus the
/// quantizer files c_i.bin / c_t.bin / z.bin / d.bin / codes.bin and
/// loss_history.csv.
struct ModelBundle {
    config::RunConfig cfg;
    std::uint64_t hash = 0;
    net::EncoderParams params;
    quant::QuantModel qm;
};
ModelBundle load_model(const std::filesystem::path& dir);

struct IndexOptions {
    std::string model;
    std::string data;
    std::string out;
    std::string modality = "text";  // database modality
    std::string split = "train";
};
void cmd_index(const IndexOptions& opt);

struct QueryOptions {
    std::string model;
    std::string index;
    std::string input;  // matrix file of query features, one query per column
    std::string out;    // csv path; empty writes to stdout
    std::string modality;  // query branch; defaults to the opposite of the index
    std::size_t column = 0;
    std::size_t topn = 50;
};
void cmd_query(const QueryOptions& opt);

struct EvalOptions {
    std::string model;
    std::string data;
    std::string out;  // directory for the three csv files
    std::size_t r = 50;
    std::string map_norm = "total";  // total | min
    std::vector<std::size_t> topn_grid = {1, 5, 10, 20, 50};
};
void cmd_eval(const EvalOptions& opt);

struct SweepOptions {
    std::string param;  // alpha | beta | lambda | bits
    std::vector<double> values;
    std::string config;
    std::string data;
    std::string out;  // csv path
    std::string map_norm = "total";
    std::size_t r = 50;
    std::optional<std::uint64_t> seed;
};
void cmd_sweep(const SweepOptions& opt);

/// Per-direction retrieval metrics used by cmd_eval and cmd_sweep.
struct DirectionMetrics {
    std::string name;  // image_to_text | text_to_image
    eval::MapResult map;
    std::vector<eval::PrecisionPoint> curve;
    std::vector<std::size_t> relevant_counts;  // aligned with map.evaluated
};
std::vector<DirectionMetrics> evaluate_both_directions(const ModelBundle& model,
                                                       const data::Dataset& ds, std::size_t r,
                                                       eval::ApNorm norm,
                                                       const std::vector<std::size_t>& grid);

int run_cli(int argc, char** argv);

}  // namespace spdq::cli
