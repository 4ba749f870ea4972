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
#include <string>

#include "spdq/net.hpp"
#include "spdq/trainer.hpp"

namespace spdq::config {

/// Everything a run needs: optimizer and quantizer hyperparameters, encoder
/// dimensions, kernel-bank scales, optional default paths, and the seed.
/// The JSON schema rejects unknown keys.
struct RunConfig {
    train::Hyperparams hyper;
    net::EncoderConfig enc;
    std::string data_dir;  // optional; flags override
    std::string out_dir;   // optional; flags override
};

RunConfig default_config();

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);

/// Canonical (sorted-key) JSON serialization.
std::string canonical_json(const RunConfig& cfg);

/// FNV-1a over the canonical JSON; stamped into every metrics CSV.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace spdq::config
