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
#include <functional>
#include <random>
#include <vector>

#include "spdq/data.hpp"
#include "spdq/mmd.hpp"
#include "spdq/net.hpp"
#include "spdq/quant.hpp"

namespace spdq::train {

struct Hyperparams {
    double alpha = 1.0;    // classification weight
    double beta = 1.0;     // quantization-error weight inside the quantizer objective
    double lambda = 0.01;  // quantizer-objective weight in the overall objective
    double learning_rate = 1e-3;
    double momentum = 0.9;
    std::size_t batch_size = 128;  // even
    std::size_t dictionaries = 2;  // m; code length is m * log2(codewords) bits
    std::size_t codewords = 256;   // k_d, a power of two, <= 256 for the code file
    std::size_t label_dim = 0;     // d_z; 0 means equal to the shared dim
    double ridge = 1e-6;
    int icm_sweeps = 3;
    int icm_restarts = 1;
    std::size_t outer_iters = 20;
    std::size_t epochs_per_outer = 1;
    std::uint64_t seed = 1;
    std::vector<double> kernel_scales{0.25, 0.5, 1.0, 2.0, 4.0};

    void validate() const;
};

struct LossRecord {
    std::size_t outer = 0;
    double o_l = 0.0;  // representation loss, averaged over the iteration's batches
    double o_q = 0.0;  // quantizer objective over the full training set
    double o = 0.0;    // o_l + lambda * o_q
};

struct TrainState {
    net::EncoderParams params;
    net::Gradients velocity;  // momentum buffers, shape-matched to the gradients
    quant::QuantModel qm;
    mmd::KernelBank bank_shared;
    mmd::KernelBank bank_private;
    std::size_t outer_done = 0;
    std::vector<LossRecord> history;
    std::size_t skipped_class_slices = 0;  // batches' classes dropped from the pairing loss
};

/// Aligned mini-batch; column j of x_i and x_t is the same item. Slices group
/// batch positions by class, each an even count, pairs formed by consecutive
/// positions.
struct Batch {
    Matrix x_i;
    Matrix x_t;
    Matrix labels;
    std::vector<net::ClassSlice> slices;
    std::vector<std::size_t> source_cols;
};

/// Draws pairs round-robin across classes (grouped by each item's first
/// label) from per-class shuffled pools. Classes with a single member join
/// the batch only as filler and never form slices. Pools rewind when the
/// dataset is smaller than the batch.
Batch make_batch(const data::Dataset& ds, std::size_t batch_size, std::mt19937_64& rng);

/// One momentum-SGD step on both branches with the quantizer fixed:
/// v <- momentum * v + g, params <- params - lr * v.
/// Throws NumericalError with diagnostics when a gradient is non-finite.
net::LossTerms sgd_step(TrainState& state, const Batch& batch, const Hyperparams& hyper);

using ProgressFn = std::function<void(const LossRecord&)>;

/// Full alternating optimization: per outer iteration, `epochs_per_outer`
/// passes of mini-batch SGD, then the five quantizer updates (both
/// transforms, anchors, dictionaries, one warm-started code assignment pass)
/// on the full training set's current shared representations. Stops after
/// `outer_iters` or when the relative change of the overall objective stays
/// below 1e-5 for 3 consecutive outer iterations. Only columns tagged train
/// participate. `progress` is called once per outer iteration.
TrainState train(const data::Dataset& ds, const net::EncoderConfig& enc, const Hyperparams& hyper,
                 const ProgressFn& progress = {});

void write_loss_history_csv(const std::vector<LossRecord>& history,
                            const std::filesystem::path& path, std::uint64_t config_hash);

}  // namespace spdq::train
