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

#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "cli_commands.hpp"
#include "spdq/parallel.hpp"

namespace spdq::cli {

namespace {

int exit_code_for(const std::string& category) {
    static const std::map<std::string, int> codes{
        {"missing_file", 2},      {"schema_violation", 3}, {"dimension_mismatch", 4},
        {"numerical_failure", 5}, {"invalid_argument", 6}, {"io_error", 7},
    };
    const auto it = codes.find(category);
    return it == codes.end() ? 1 : it->second;
}

}  // namespace

int run_cli(int argc, char** argv) {
    apply_thread_cap();

    CLI::App app{"shared-subspace cross-modal quantized retrieval"};
    app.require_subcommand(1);

    GenOptions gen;
    CLI::App* cmd_gen_app = app.add_subcommand("gen", "generate a synthetic paired dataset");
    cmd_gen_app->add_option("--classes", gen.classes, "number of classes");
    cmd_gen_app->add_option("--n", gen.n, "number of paired items");
    cmd_gen_app->add_option("--image-dim", gen.image_dim, "image feature dimension");
    cmd_gen_app->add_option("--text-dim", gen.text_dim, "text feature dimension");
    cmd_gen_app->add_option("--separation", gen.separation, "prototype separation");
    cmd_gen_app->add_option("--noise", gen.noise, "noise level");
    cmd_gen_app->add_option("--label-mode", gen.label_mode, "single|multi");
    cmd_gen_app->add_option("--train-frac", gen.train_frac, "train fraction");
    cmd_gen_app->add_option("--validation-frac", gen.validation_frac, "validation fraction");
    cmd_gen_app->add_option("--query-frac", gen.query_frac, "query fraction");
    cmd_gen_app->add_option("--seed", gen.seed, "generation seed");
    cmd_gen_app->add_option("--out", gen.out, "output dataset directory")->required();
    cmd_gen_app->add_option("--format", gen.format, "binary|csv");

    TrainOptions train_opt;
    std::uint64_t train_seed = 0;
    CLI::App* cmd_train_app = app.add_subcommand("train", "train encoders and quantizer");
    cmd_train_app->add_option("--config", train_opt.config, "run config json");
    cmd_train_app->add_option("--data", train_opt.data, "dataset directory");
    cmd_train_app->add_option("--out", train_opt.out, "model output directory");
    CLI::Option* train_seed_opt =
        cmd_train_app->add_option("--seed", train_seed, "seed override");

    IndexOptions index_opt;
    CLI::App* cmd_index_app = app.add_subcommand("index", "build a retrieval index");
    cmd_index_app->add_option("--model", index_opt.model, "model directory")->required();
    cmd_index_app->add_option("--data", index_opt.data, "dataset directory");
    cmd_index_app->add_option("--out", index_opt.out, "index output directory")->required();
    cmd_index_app->add_option("--modality", index_opt.modality, "database modality image|text");
    cmd_index_app->add_option("--split", index_opt.split, "split to index (default train)");

    QueryOptions query_opt;
    CLI::App* cmd_query_app = app.add_subcommand("query", "rank the database for one query");
    cmd_query_app->add_option("--model", query_opt.model, "model directory")->required();
    cmd_query_app->add_option("--index", query_opt.index, "index directory")->required();
    cmd_query_app->add_option("--input", query_opt.input, "query feature matrix file")->required();
    cmd_query_app->add_option("--out", query_opt.out, "output csv (stdout when omitted)");
    cmd_query_app->add_option("--modality", query_opt.modality,
                              "query modality (defaults opposite the index)");
    cmd_query_app->add_option("--column", query_opt.column, "query column in the input matrix");
    cmd_query_app->add_option("--topn", query_opt.topn, "results to emit");

    EvalOptions eval_opt;
    CLI::App* cmd_eval_app =
        app.add_subcommand("eval", "retrieval metrics for both directions");
    cmd_eval_app->add_option("--model", eval_opt.model, "model directory")->required();
    cmd_eval_app->add_option("--data", eval_opt.data, "dataset directory");
    cmd_eval_app->add_option("--out", eval_opt.out, "output directory")->required();
    cmd_eval_app->add_option("--r", eval_opt.r, "ranking cutoff for MAP");
    cmd_eval_app->add_option("--map-norm", eval_opt.map_norm, "total|min");
    cmd_eval_app->add_option("--topn-grid", eval_opt.topn_grid, "precision curve points");

    SweepOptions sweep_opt;
    std::uint64_t sweep_seed = 0;
    CLI::App* cmd_sweep_app =
        app.add_subcommand("sweep", "train and evaluate across one parameter axis");
    cmd_sweep_app->add_option("--param", sweep_opt.param, "alpha|beta|lambda|bits")->required();
    cmd_sweep_app->add_option("--values", sweep_opt.values, "comma separated values")
        ->required()
        ->delimiter(',');
    cmd_sweep_app->add_option("--config", sweep_opt.config, "run config json");
    cmd_sweep_app->add_option("--data", sweep_opt.data, "dataset directory");
    cmd_sweep_app->add_option("--out", sweep_opt.out, "output csv")->required();
    cmd_sweep_app->add_option("--map-norm", sweep_opt.map_norm, "total|min");
    cmd_sweep_app->add_option("--r", sweep_opt.r, "ranking cutoff for MAP");
    CLI::Option* sweep_seed_opt =
        cmd_sweep_app->add_option("--seed", sweep_seed, "seed override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (cmd_gen_app->parsed()) {
            cmd_gen(gen);
        } else if (cmd_train_app->parsed()) {
            if (train_seed_opt->count() > 0) train_opt.seed = train_seed;
            cmd_train(train_opt);
        } else if (cmd_index_app->parsed()) {
            cmd_index(index_opt);
        } else if (cmd_query_app->parsed()) {
            cmd_query(query_opt);
        } else if (cmd_eval_app->parsed()) {
            cmd_eval(eval_opt);
        } else if (cmd_sweep_app->parsed()) {
            if (sweep_seed_opt->count() > 0) sweep_opt.seed = sweep_seed;
            cmd_sweep(sweep_opt);
        }
    } catch (const Error& e) {
        std::cerr << "error category=" << e.category() << " message=\"" << e.what() << "\"\n";
        return exit_code_for(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error category=internal message=\"" << e.what() << "\"\n";
        return 1;
    }
    return 0;
}

}  // namespace spdq::cli
