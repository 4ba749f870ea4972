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

#include "cli_commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "spdq/data.hpp"
#include "spdq/linalg.hpp"
#include "spdq/random.hpp"
#include "spdq/trainer.hpp"

namespace spdq::cli {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw InvalidArgument(message);
}

std::ofstream open_csv(const std::filesystem::path& path, std::uint64_t config_hash,
                       const std::string& header) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(config_hash));
    out << "# config_hash=" << buf << '\n' << header << '\n';
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

data::SplitTag split_from_name(const std::string& name) {
    if (name == "train") return data::SplitTag::train;
    if (name == "validation") return data::SplitTag::validation;
    if (name == "query") return data::SplitTag::query;
    throw InvalidArgument("unknown split: " + name + " (use train|validation|query)");
}

json bank_to_json(const mmd::KernelBank& bank) {
    return json{{"bandwidths", bank.bandwidths}, {"weights", bank.weights}};
}

}  // namespace

void cmd_gen(const GenOptions& opt) {
    require(!opt.out.empty(), "gen: --out directory required");
    data::SyntheticSpec spec;
    spec.num_classes = opt.classes;
    spec.n = opt.n;
    spec.image_dim = opt.image_dim;
    spec.text_dim = opt.text_dim;
    spec.separation = opt.separation;
    spec.noise = opt.noise;
    spec.seed = opt.seed;
    if (opt.label_mode == "single") {
        spec.label_mode = data::LabelMode::single;
    } else if (opt.label_mode == "multi") {
        spec.label_mode = data::LabelMode::multi;
    } else {
        throw InvalidArgument("gen: label mode must be single or multi");
    }
    data::FileFormat format;
    if (opt.format == "binary") {
        format = data::FileFormat::binary;
    } else if (opt.format == "csv") {
        format = data::FileFormat::csv;
    } else {
        throw InvalidArgument("gen: format must be binary or csv");
    }
    data::Dataset ds = data::generate_synthetic(spec);
    data::split(ds, opt.train_frac, opt.validation_frac, opt.query_frac,
                mix_seed(opt.seed, 0x5711));
    data::save_dataset(ds, opt.out, format);
}

namespace {

config::RunConfig resolve_config(const std::string& config_path,
                                 const std::optional<std::uint64_t>& seed) {
    config::RunConfig cfg =
        config_path.empty() ? config::default_config() : config::load_run_config(config_path);
    if (seed.has_value()) cfg.hyper.seed = *seed;
    return cfg;
}

std::string resolve_data_dir(const std::string& flag, const config::RunConfig& cfg) {
    if (!flag.empty()) return flag;
    if (!cfg.data_dir.empty()) return cfg.data_dir;
    throw InvalidArgument("no dataset directory given (flag --data or config key \"data\")");
}

}  // namespace

void cmd_train(const TrainOptions& opt) {
    const config::RunConfig cfg = resolve_config(opt.config, opt.seed);
    const std::string data_dir = resolve_data_dir(opt.data, cfg);
    std::string out_dir = opt.out.empty() ? cfg.out_dir : opt.out;
    require(!out_dir.empty(), "train: --out directory required");

    const data::Dataset ds = data::load_dataset(data_dir);
    const train::TrainState state =
        train::train(ds, cfg.enc, cfg.hyper, [](const train::LossRecord& rec) {
            std::printf("outer=%zu o_l=%.6g o_q=%.6g o=%.6g\n", rec.outer, rec.o_l, rec.o_q,
                        rec.o);
            std::fflush(stdout);
        });

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    net::save_encoder(state.params, dir / "encoder.bin");
    quant::save_quant_model(state.qm, dir);
    const std::uint64_t hash = config::config_hash(cfg);
    train::write_loss_history_csv(state.history, dir / "loss_history.csv", hash);

    json manifest;
    manifest["kind"] = "spdq-model";
    manifest["version"] = 1;
    manifest["config"] = json::parse(config::canonical_json(cfg));
    char hash_buf[32];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016llx", static_cast<unsigned long long>(hash));
    manifest["config_hash"] = hash_buf;
    manifest["encoder_file"] = "encoder.bin";
    json shapes = json::array();
    for (const auto& [r, c] : net::layer_shapes(state.params)) shapes.push_back({r, c});
    manifest["layer_shapes"] = shapes;
    manifest["banks"] = {{"shared", bank_to_json(state.bank_shared)},
                         {"private", bank_to_json(state.bank_private)}};
    manifest["outer_iterations_run"] = state.outer_done;
    manifest["skipped_class_slices"] = state.skipped_class_slices;
    manifest["train_count"] = state.qm.codes.n;
    std::ofstream out(dir / "model.json");
    if (!out) throw IoError("cannot write " + (dir / "model.json").string());
    out << manifest.dump(2) << '\n';
}

ModelBundle load_model(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "model.json";
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
    if (!manifest.contains("kind") || manifest["kind"] != "spdq-model") {
        throw ConfigError(manifest_path.string() + ": not a model manifest");
    }
    ModelBundle bundle;
    const auto cfg_path = dir / ".config_echo.json";
    {
        std::ofstream echo(cfg_path);
        echo << manifest.at("config").dump() << '\n';
    }
    bundle.cfg = config::load_run_config(cfg_path);
    std::filesystem::remove(cfg_path);
    bundle.hash = config::config_hash(bundle.cfg);
    bundle.params = net::load_encoder(dir / manifest.value("encoder_file", "encoder.bin"));
    bundle.qm = quant::load_quant_model(dir);
    return bundle;
}

namespace {

search::SearchIndex build_index_for_split(const ModelBundle& model, const data::Dataset& ds,
                                          data::SplitTag split, net::Modality db_modality,
                                          bool global_ids) {
    const std::vector<std::size_t> idx = data::indices_of(ds, split);
    require(!idx.empty(), std::string("no columns tagged ") + data::split_name(split));

    search::SearchIndex index;
    index.dict = model.qm.d;
    index.db_modality = db_modality;
    if (global_ids) {
        index.ids.assign(idx.begin(), idx.end());
    }

    if (split == data::SplitTag::train && model.qm.codes.n == idx.size()) {
        // The training stage already assigned codes to exactly these points.
        index.codes = model.qm.codes;
        return index;
    }
    // Fresh split: assign codes against the label-space anchors of its points.
    const data::Dataset view = data::subset(ds, idx);
    const Matrix targets = matmul(model.qm.z, view.labels);
    index.codes = quant::random_codes(idx.size(), model.qm.m, model.qm.k_d,
                                      mix_seed(model.cfg.hyper.seed, 0x1d1));
    quant::icm_assign_all(targets, model.qm.d, index.codes, model.cfg.hyper.icm_sweeps,
                          model.cfg.hyper.icm_restarts, mix_seed(model.cfg.hyper.seed, 0x1d2));
    return index;
}

}  // namespace

void cmd_index(const IndexOptions& opt) {
    require(!opt.out.empty(), "index: --out directory required");
    const ModelBundle model = load_model(opt.model);
    const data::Dataset ds = data::load_dataset(resolve_data_dir(opt.data, model.cfg));
    const search::SearchIndex index =
        build_index_for_split(model, ds, split_from_name(opt.split),
                              net::modality_from_name(opt.modality), /*global_ids=*/true);
    search::save_index(index, opt.out);
}

void cmd_query(const QueryOptions& opt) {
    const ModelBundle model = load_model(opt.model);
    const search::SearchIndex index = search::load_index(opt.index);
    const Matrix features = read_matrix(opt.input);
    require(opt.column < features.cols(),
            "query: column " + std::to_string(opt.column) + " out of range");

    const net::Modality query_modality = opt.modality.empty()
                                             ? net::other(index.db_modality)
                                             : net::modality_from_name(opt.modality);
    const Matrix& c =
        query_modality == net::Modality::image ? model.qm.c_i : model.qm.c_t;
    Matrix x(features.rows(), 1);
    for (std::size_t i = 0; i < features.rows(); ++i) x(i, 0) = features(i, opt.column);
    const std::vector<double> rep = search::encode_query(model.params, x, query_modality, c);

    const std::size_t topn = std::min<std::size_t>(opt.topn, index.count());
    const auto ranked = search::rank(rep, index, topn);

    auto emit = [&](std::ostream& os) {
        for (const auto& entry : ranked) {
            os << entry.id << ',' << format_double(entry.score) << '\n';
        }
    };
    if (opt.out.empty()) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(model.hash));
        std::cout << "# config_hash=" << buf << "\nid,score\n";
        emit(std::cout);
    } else {
        std::ofstream out = open_csv(opt.out, model.hash, "id,score");
        emit(out);
        if (!out) throw IoError("write failed: " + opt.out);
    }
}

std::vector<DirectionMetrics> evaluate_both_directions(const ModelBundle& model,
                                                       const data::Dataset& ds, std::size_t r,
                                                       eval::ApNorm norm,
                                                       const std::vector<std::size_t>& grid) {
    const std::vector<std::size_t> query_idx = data::indices_of(ds, data::SplitTag::query);
    require(!query_idx.empty(), "eval: no columns tagged query");
    const data::Dataset queries = data::subset(ds, query_idx);
    const std::vector<std::size_t> db_idx = data::indices_of(ds, data::SplitTag::train);
    require(!db_idx.empty(), "eval: no columns tagged train");
    const data::Dataset db = data::subset(ds, db_idx);

    std::vector<std::size_t> usable_grid;
    for (std::size_t n : grid) {
        if (n >= 1 && n <= db.count()) usable_grid.push_back(n);
    }
    const std::size_t depth = std::min<std::size_t>(
        db.count(),
        std::max<std::size_t>(r, usable_grid.empty() ? 1 : usable_grid.back()));

    std::vector<DirectionMetrics> out;
    for (net::Modality query_modality : {net::Modality::image, net::Modality::text}) {
        const net::Modality db_modality = net::other(query_modality);
        search::SearchIndex index =
            build_index_for_split(model, ds, data::SplitTag::train, db_modality,
                                  /*global_ids=*/false);
        const Matrix& c =
            query_modality == net::Modality::image ? model.qm.c_i : model.qm.c_t;
        const Matrix& x = query_modality == net::Modality::image ? queries.x_i : queries.x_t;
        const Matrix reps = search::encode_queries(model.params, x, query_modality, c);

        std::vector<std::vector<std::size_t>> rankings(reps.cols());
        std::vector<double> rep(reps.rows());
        for (std::size_t q = 0; q < reps.cols(); ++q) {
            reps.col_copy(q, rep);
            const auto ranked = search::rank(rep, index, depth);
            rankings[q].reserve(ranked.size());
            for (const auto& entry : ranked) rankings[q].push_back(entry.id);
        }

        const eval::RelevanceJudge judge{&queries.labels, &db.labels};
        DirectionMetrics metrics;
        metrics.name =
            query_modality == net::Modality::image ? "image_to_text" : "text_to_image";
        metrics.map = eval::map_at_r(rankings, judge, std::min(r, depth), norm);
        for (std::size_t q : metrics.map.evaluated) {
            metrics.relevant_counts.push_back(judge.relevant_count(q));
        }
        if (!usable_grid.empty()) {
            metrics.curve = eval::topn_precision(rankings, judge, usable_grid);
        }
        out.push_back(std::move(metrics));
    }
    return out;
}

void cmd_eval(const EvalOptions& opt) {
    require(!opt.out.empty(), "eval: --out directory required");
    const ModelBundle model = load_model(opt.model);
    const data::Dataset ds = data::load_dataset(resolve_data_dir(opt.data, model.cfg));
    const eval::ApNorm norm = eval::ap_norm_from_name(opt.map_norm);
    const auto metrics = evaluate_both_directions(model, ds, opt.r, norm, opt.topn_grid);

    std::filesystem::create_directories(opt.out);
    const std::filesystem::path dir(opt.out);
    {
        std::ofstream out =
            open_csv(dir / "map_summary.csv", model.hash,
                     "direction,map,queries_evaluated,queries_excluded,r,norm");
        for (const auto& m : metrics) {
            out << m.name << ',' << format_double(m.map.map) << ',' << m.map.evaluated.size()
                << ',' << m.map.excluded.size() << ',' << opt.r << ','
                << eval::ap_norm_name(norm) << '\n';
        }
    }
    {
        std::ofstream out = open_csv(dir / "per_query_ap.csv", model.hash,
                                     "direction,query,ap,num_relevant");
        for (const auto& m : metrics) {
            for (std::size_t i = 0; i < m.map.evaluated.size(); ++i) {
                out << m.name << ',' << m.map.evaluated[i] << ','
                    << format_double(m.map.per_query_ap[i]) << ',' << m.relevant_counts[i]
                    << '\n';
            }
        }
    }
    {
        std::ofstream out =
            open_csv(dir / "topn_precision.csv", model.hash, "direction,n,precision");
        for (const auto& m : metrics) {
            for (const auto& point : m.curve) {
                out << m.name << ',' << point.n << ',' << format_double(point.precision) << '\n';
            }
        }
    }
}

void cmd_sweep(const SweepOptions& opt) {
    require(!opt.out.empty(), "sweep: --out csv path required");
    require(!opt.values.empty(), "sweep: --values required");
    const bool is_bits = opt.param == "bits";
    require(opt.param == "alpha" || opt.param == "beta" || opt.param == "lambda" || is_bits,
            "sweep: --param must be alpha|beta|lambda|bits");

    const config::RunConfig base = resolve_config(opt.config, opt.seed);
    const data::Dataset ds = data::load_dataset(resolve_data_dir(opt.data, base));
    const eval::ApNorm norm = eval::ap_norm_from_name(opt.map_norm);

    std::ofstream out = open_csv(
        opt.out, config::config_hash(base),
        "param,value,map_image_to_text,map_text_to_image,quant_error_per_point");
    for (double value : opt.values) {
        config::RunConfig cfg = base;
        if (opt.param == "alpha") {
            cfg.hyper.alpha = value;
        } else if (opt.param == "beta") {
            cfg.hyper.beta = value;
        } else if (opt.param == "lambda") {
            cfg.hyper.lambda = value;
        } else {
            const double bits_per_dictionary = std::log2(double(cfg.hyper.codewords));
            const double m = value / bits_per_dictionary;
            require(m >= 1.0 && m == std::floor(m),
                    "sweep: bits must be a positive multiple of log2(codewords)");
            cfg.hyper.dictionaries = static_cast<std::size_t>(m);
        }
        const train::TrainState state = train::train(ds, cfg.enc, cfg.hyper);

        ModelBundle bundle;
        bundle.cfg = cfg;
        bundle.hash = config::config_hash(cfg);
        bundle.params = state.params;
        bundle.qm = state.qm;
        const auto metrics = evaluate_both_directions(bundle, ds, opt.r, norm, {});

        const std::vector<std::size_t> train_idx = data::indices_of(ds, data::SplitTag::train);
        const data::Dataset tds = data::subset(ds, train_idx);
        const Matrix zl = matmul(state.qm.z, tds.labels);
        const double quant_err =
            frobenius_sq(sub(zl, quant::reconstruct(state.qm.d, state.qm.codes))) /
            double(tds.count());

        out << opt.param << ',' << format_double(value) << ','
            << format_double(metrics[0].map.map) << ',' << format_double(metrics[1].map.map)
            << ',' << format_double(quant_err) << '\n';
        std::printf("param=%s value=%g map_image_to_text=%.6g map_text_to_image=%.6g\n",
                    opt.param.c_str(), value, metrics[0].map.map, metrics[1].map.map);
        std::fflush(stdout);
    }
    if (!out) throw IoError("write failed: " + opt.out);
}

}  // namespace spdq::cli
