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

#include "spdq/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "spdq/linalg.hpp"
#include "spdq/random.hpp"

namespace spdq::data {

using nlohmann::json;

const char* split_name(SplitTag tag) {
    switch (tag) {
        case SplitTag::train: return "train";
        case SplitTag::validation: return "validation";
        case SplitTag::query: return "query";
    }
    return "?";
}

void validate_dataset(const Dataset& ds) {
    const std::size_t n = ds.labels.cols();
    if (ds.x_i.cols() != n || ds.x_t.cols() != n) {
        throw InvalidArgument("dataset: x_i, x_t and labels must share a column count (" +
                              std::to_string(ds.x_i.cols()) + ", " + std::to_string(ds.x_t.cols()) +
                              ", " + std::to_string(n) + ")");
    }
    if (!ds.tags.empty() && ds.tags.size() != n) {
        throw InvalidArgument("dataset: split tags must cover every column");
    }
    std::vector<std::size_t> empty_cols;
    for (std::size_t j = 0; j < n; ++j) {
        bool any = false;
        for (std::size_t i = 0; i < ds.labels.rows(); ++i) {
            const double v = ds.labels(i, j);
            if (v != 0.0 && v != 1.0) {
                throw InvalidArgument("dataset: label entry not in {0,1} at row " +
                                      std::to_string(i) + ", column " + std::to_string(j));
            }
            any = any || v == 1.0;
        }
        if (!any) empty_cols.push_back(j);
    }
    if (!empty_cols.empty()) {
        std::string msg = "dataset: columns with no label:";
        for (std::size_t k = 0; k < std::min<std::size_t>(empty_cols.size(), 10); ++k) {
            msg += ' ' + std::to_string(empty_cols[k]);
        }
        if (empty_cols.size() > 10) {
            msg += " ... (" + std::to_string(empty_cols.size()) + " total)";
        }
        throw InvalidArgument(msg);
    }
}

Dataset generate_synthetic(const SyntheticSpec& spec, SyntheticTrace* trace) {
    if (spec.num_classes < 2) throw InvalidArgument("generate_synthetic: need >= 2 classes");
    if (spec.n < 2 * spec.num_classes) {
        throw InvalidArgument("generate_synthetic: need n >= 2 * num_classes");
    }
    if (!(spec.separation > 0.0)) throw InvalidArgument("generate_synthetic: separation must be > 0");
    if (spec.noise < 0.0) throw InvalidArgument("generate_synthetic: negative noise");
    const std::size_t latent_dim =
        spec.latent_dim != 0 ? spec.latent_dim : std::max<std::size_t>(spec.num_classes, 8);
    if (latent_dim < spec.num_classes) {
        throw InvalidArgument("generate_synthetic: latent dim too small to place prototypes");
    }

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Orthogonal prototype directions scaled to the requested separation.
    Matrix proto_t = random_row_orthonormal(spec.num_classes, latent_dim, rng);
    Matrix prototypes = transpose(proto_t);  // latent_dim x K_c
    scale_inplace(prototypes, spec.separation);

    const Matrix map_i =
        random_gaussian(spec.image_dim, latent_dim, rng, 1.0 / std::sqrt(double(latent_dim)));
    const Matrix map_t =
        random_gaussian(spec.text_dim, latent_dim, rng, 1.0 / std::sqrt(double(latent_dim)));

    Matrix labels(spec.num_classes, spec.n);
    std::vector<std::vector<std::size_t>> point_classes(spec.n);
    if (spec.label_mode == LabelMode::single) {
        for (std::size_t nidx = 0; nidx < spec.n; ++nidx) {
            const std::size_t k = nidx % spec.num_classes;
            labels(k, nidx) = 1.0;
            point_classes[nidx] = {k};
        }
    } else {
        std::uniform_int_distribution<std::size_t> count_dist(1, 3);
        std::vector<std::size_t> order(spec.num_classes);
        for (std::size_t nidx = 0; nidx < spec.n; ++nidx) {
            const std::size_t how_many = std::min(count_dist(rng), spec.num_classes);
            std::iota(order.begin(), order.end(), 0);
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t c = 0; c < how_many; ++c) {
                labels(order[c], nidx) = 1.0;
                point_classes[nidx].push_back(order[c]);
            }
            std::sort(point_classes[nidx].begin(), point_classes[nidx].end());
        }
    }

    Matrix latents(latent_dim, spec.n);
    for (std::size_t nidx = 0; nidx < spec.n; ++nidx) {
        const auto& classes = point_classes[nidx];
        const double inv = 1.0 / static_cast<double>(classes.size());
        for (std::size_t i = 0; i < latent_dim; ++i) {
            double acc = 0.0;
            for (std::size_t k : classes) acc += prototypes(i, k);
            latents(i, nidx) = acc * inv;
        }
        if (spec.noise > 0.0) {
            for (std::size_t i = 0; i < latent_dim; ++i) {
                latents(i, nidx) += spec.noise * gauss(rng);
            }
        }
    }

    auto observe = [&](const Matrix& map, std::size_t dim) {
        Matrix x = matmul(map, latents);
        if (spec.noise > 0.0) {
            for (std::size_t j = 0; j < spec.n; ++j) {
                for (std::size_t i = 0; i < dim; ++i) x(i, j) += spec.noise * gauss(rng);
            }
        }
        for (double& v : x.values()) v = std::tanh(v);
        return x;
    };

    Dataset ds;
    ds.x_i = observe(map_i, spec.image_dim);
    ds.x_t = observe(map_t, spec.text_dim);
    ds.labels = std::move(labels);
    ds.tags.assign(spec.n, SplitTag::train);
    ds.seed = spec.seed;
    if (trace != nullptr) {
        trace->prototypes = std::move(prototypes);
        trace->latents = std::move(latents);
    }
    validate_dataset(ds);
    return ds;
}

void split(Dataset& ds, double train_frac, double validation_frac, double query_frac,
           std::uint64_t seed) {
    if (train_frac < 0.0 || validation_frac < 0.0 || query_frac < 0.0 ||
        std::fabs(train_frac + validation_frac + query_frac - 1.0) > 1e-9) {
        throw InvalidArgument("split: fractions must be non-negative and sum to 1");
    }
    const std::size_t n = ds.count();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    const std::size_t n_train = static_cast<std::size_t>(std::floor(train_frac * double(n) + 1e-9));
    const std::size_t n_val =
        static_cast<std::size_t>(std::floor(validation_frac * double(n) + 1e-9));
    ds.tags.assign(n, SplitTag::query);
    for (std::size_t i = 0; i < n_train; ++i) ds.tags[perm[i]] = SplitTag::train;
    for (std::size_t i = n_train; i < n_train + n_val; ++i) ds.tags[perm[i]] = SplitTag::validation;
}

std::vector<std::size_t> indices_of(const Dataset& ds, SplitTag tag) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ds.tags.size(); ++i) {
        if (ds.tags[i] == tag) out.push_back(i);
    }
    return out;
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& cols) {
    Dataset out;
    out.seed = ds.seed;
    auto gather = [&](const Matrix& m) {
        Matrix g(m.rows(), cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            for (std::size_t i = 0; i < m.rows(); ++i) g(i, j) = m(i, cols[j]);
        }
        return g;
    };
    out.x_i = gather(ds.x_i);
    out.x_t = gather(ds.x_t);
    out.labels = gather(ds.labels);
    out.tags.reserve(cols.size());
    for (std::size_t c : cols) out.tags.push_back(ds.tags.empty() ? SplitTag::train : ds.tags[c]);
    return out;
}

namespace {

json split_indices_json(const Dataset& ds) {
    json out = {{"train", json::array()},
                {"validation", json::array()},
                {"query", json::array()}};
    for (std::size_t i = 0; i < ds.tags.size(); ++i) {
        out[split_name(ds.tags[i])].push_back(i);
    }
    return out;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& dir, FileFormat format) {
    validate_dataset(ds);
    std::filesystem::create_directories(dir);
    const char* ext = format == FileFormat::binary ? ".bin" : ".csv";
    auto write = [&](const Matrix& m, const std::string& stem) {
        const auto path = dir / (stem + ext);
        if (format == FileFormat::binary) {
            write_matrix_binary(m, path);
        } else {
            write_matrix_csv(m, path);
        }
        return path.filename().string();
    };
    json manifest;
    manifest["kind"] = "spdq-dataset";
    manifest["version"] = 1;
    manifest["n"] = ds.count();
    manifest["classes"] = ds.num_classes();
    manifest["image_dim"] = ds.x_i.rows();
    manifest["text_dim"] = ds.x_t.rows();
    manifest["seed"] = ds.seed;
    manifest["files"] = {{"xi", write(ds.x_i, "xi")},
                         {"xt", write(ds.x_t, "xt")},
                         {"labels", write(ds.labels, "labels")}};
    manifest["splits"] = split_indices_json(ds);
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path)) {
        throw MissingFileError("no such file: " + manifest_path.string());
    }
    std::ifstream in(manifest_path);
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw ConfigError(manifest_path.string() + ": " + e.what());
    }
    if (!manifest.contains("kind") || manifest["kind"] != "spdq-dataset") {
        throw ConfigError(manifest_path.string() + ": not a dataset manifest");
    }
    Dataset ds;
    try {
        ds.x_i = read_matrix(dir / manifest.at("files").at("xi").get<std::string>());
        ds.x_t = read_matrix(dir / manifest.at("files").at("xt").get<std::string>());
        ds.labels = read_matrix(dir / manifest.at("files").at("labels").get<std::string>());
        ds.seed = manifest.value("seed", 0ull);
        const std::size_t n = ds.labels.cols();
        ds.tags.assign(n, SplitTag::train);
        std::vector<bool> seen(n, false);
        const json& splits = manifest.at("splits");
        for (SplitTag tag : {SplitTag::train, SplitTag::validation, SplitTag::query}) {
            for (const auto& idx : splits.at(split_name(tag))) {
                const std::size_t i = idx.get<std::size_t>();
                if (i >= n) throw ConfigError(manifest_path.string() + ": split index out of range");
                if (seen[i]) throw ConfigError(manifest_path.string() + ": split index repeated");
                seen[i] = true;
                ds.tags[i] = tag;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!seen[i]) throw ConfigError(manifest_path.string() + ": splits not exhaustive");
        }
    } catch (const json::exception& e) {
        throw ConfigError(manifest_path.string() + ": " + e.what());
    }
    validate_dataset(ds);
    return ds;
}

}  // namespace spdq::data
