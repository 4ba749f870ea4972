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

#include <filesystem>
#include <fstream>

#include "spdq/config.hpp"

using namespace spdq;
using namespace spdq::config;

namespace {

std::filesystem::path write_json(const char* name, const char* text) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << text;
    return path;
}

}  // namespace

TEST_CASE("defaults are valid and round trip through a file") {
    const RunConfig cfg = default_config();
    CHECK(cfg.hyper.alpha == 1.0);
    CHECK(cfg.hyper.beta == 1.0);
    CHECK(cfg.hyper.lambda == 0.01);
    CHECK(cfg.hyper.momentum == 0.9);
    CHECK(cfg.hyper.batch_size == 128);
    CHECK(cfg.hyper.codewords == 256);
    CHECK(cfg.enc.shared_dim == 256);
    CHECK(cfg.enc.private_dim == 48);

    const auto path = std::filesystem::temp_directory_path() / "spdq_cfg.json";
    save_run_config(cfg, path);
    const RunConfig loaded = load_run_config(path);
    CHECK(canonical_json(loaded) == canonical_json(cfg));
    CHECK(config_hash(loaded) == config_hash(cfg));
}

TEST_CASE("partial configs inherit defaults") {
    const auto path = write_json("spdq_cfg_partial.json", R"({"alpha": 2.5, "seed": 77})");
    const RunConfig cfg = load_run_config(path);
    CHECK(cfg.hyper.alpha == 2.5);
    CHECK(cfg.hyper.seed == 77);
    CHECK(cfg.hyper.beta == 1.0);
    CHECK(cfg.enc.image_hidden == std::vector<std::size_t>{256, 256});
}

TEST_CASE("unknown keys are rejected") {
    const auto path = write_json("spdq_cfg_unknown.json", R"({"alhpa": 2.5})");
    CHECK_THROWS_AS(load_run_config(path), ConfigError);
}

TEST_CASE("bad value types and invalid values are rejected") {
    CHECK_THROWS_AS(load_run_config(write_json("spdq_cfg_badtype.json", R"({"alpha": "big"})")),
                    ConfigError);
    CHECK_THROWS_AS(load_run_config(write_json("spdq_cfg_badval.json", R"({"batch_size": 7})")),
                    ConfigError);
    CHECK_THROWS_AS(load_run_config(write_json("spdq_cfg_notobj.json", R"([1, 2])")), ConfigError);
    CHECK_THROWS_AS(load_run_config(write_json("spdq_cfg_syntax.json", R"({)")), ConfigError);
    CHECK_THROWS_AS(load_run_config("/nonexistent/spdq.json"), MissingFileError);
}

TEST_CASE("hash changes with any field") {
    RunConfig a = default_config();
    RunConfig b = a;
    b.hyper.lambda = 0.02;
    CHECK(config_hash(a) != config_hash(b));
    RunConfig c = a;
    c.enc.text_hidden = {64};
    CHECK(config_hash(a) != config_hash(c));
}
