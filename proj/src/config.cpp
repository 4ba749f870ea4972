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

#include "spdq/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace spdq::config {

using nlohmann::json;

RunConfig default_config() { return RunConfig{}; }

namespace {

json to_json(const RunConfig& cfg) {
    json j;
    j["alpha"] = cfg.hyper.alpha;
    j["beta"] = cfg.hyper.beta;
    j["lambda"] = cfg.hyper.lambda;
    j["learning_rate"] = cfg.hyper.learning_rate;
    j["momentum"] = cfg.hyper.momentum;
    j["batch_size"] = cfg.hyper.batch_size;
    j["dictionaries"] = cfg.hyper.dictionaries;
    j["codewords"] = cfg.hyper.codewords;
    j["label_dim"] = cfg.hyper.label_dim;
    j["ridge"] = cfg.hyper.ridge;
    j["icm_sweeps"] = cfg.hyper.icm_sweeps;
    j["icm_restarts"] = cfg.hyper.icm_restarts;
    j["outer_iters"] = cfg.hyper.outer_iters;
    j["epochs_per_outer"] = cfg.hyper.epochs_per_outer;
    j["seed"] = cfg.hyper.seed;
    j["kernel_scales"] = cfg.hyper.kernel_scales;
    j["image_input_dim"] = cfg.enc.image_input_dim;
    j["text_input_dim"] = cfg.enc.text_input_dim;
    j["image_hidden"] = cfg.enc.image_hidden;
    j["text_hidden"] = cfg.enc.text_hidden;
    j["shared_dim"] = cfg.enc.shared_dim;
    j["private_dim"] = cfg.enc.private_dim;
    j["data"] = cfg.data_dir;
    j["out"] = cfg.out_dir;
    return j;
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = [] {
        std::set<std::string> k;
        const json defaults = to_json(RunConfig{});
        for (const auto& [key, value] : defaults.items()) k.insert(key);
        return k;
    }();
    return keys;
}

template <typename T>
void read_key(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config: bad value type for key '") + key + "'");
    }
}

RunConfig from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!known_keys().contains(key)) {
            throw ConfigError("config: unknown key '" + key + "'");
        }
    }
    RunConfig cfg;
    read_key(j, "alpha", cfg.hyper.alpha);
    read_key(j, "beta", cfg.hyper.beta);
    read_key(j, "lambda", cfg.hyper.lambda);
    read_key(j, "learning_rate", cfg.hyper.learning_rate);
    read_key(j, "momentum", cfg.hyper.momentum);
    read_key(j, "batch_size", cfg.hyper.batch_size);
    read_key(j, "dictionaries", cfg.hyper.dictionaries);
    read_key(j, "codewords", cfg.hyper.codewords);
    read_key(j, "label_dim", cfg.hyper.label_dim);
    read_key(j, "ridge", cfg.hyper.ridge);
    read_key(j, "icm_sweeps", cfg.hyper.icm_sweeps);
    read_key(j, "icm_restarts", cfg.hyper.icm_restarts);
    read_key(j, "outer_iters", cfg.hyper.outer_iters);
    read_key(j, "epochs_per_outer", cfg.hyper.epochs_per_outer);
    read_key(j, "seed", cfg.hyper.seed);
    read_key(j, "kernel_scales", cfg.hyper.kernel_scales);
    read_key(j, "image_input_dim", cfg.enc.image_input_dim);
    read_key(j, "text_input_dim", cfg.enc.text_input_dim);
    read_key(j, "image_hidden", cfg.enc.image_hidden);
    read_key(j, "text_hidden", cfg.enc.text_hidden);
    read_key(j, "shared_dim", cfg.enc.shared_dim);
    read_key(j, "private_dim", cfg.enc.private_dim);
    read_key(j, "data", cfg.data_dir);
    read_key(j, "out", cfg.out_dir);
    try {
        cfg.hyper.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (cfg.enc.shared_dim == 0 || cfg.enc.private_dim == 0) {
        throw ConfigError("config: shared/private dims must be positive");
    }
    return cfg;
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw MissingFileError("no such file: " + path.string());
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return from_json(j);
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << to_json(cfg).dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

std::string canonical_json(const RunConfig& cfg) { return to_json(cfg).dump(); }

std::uint64_t config_hash(const RunConfig& cfg) {
    const std::string s = canonical_json(cfg);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace spdq::config
