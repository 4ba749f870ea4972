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

#include "spdq/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "spdq/linalg.hpp"
#include "spdq/random.hpp"

namespace spdq::train {

void Hyperparams::validate() const {
    if (alpha < 0.0 || beta < 0.0 || lambda < 0.0 || ridge < 0.0) {
        throw InvalidArgument("hyperparams: weights must be non-negative");
    }
    if (!(std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(lambda) &&
          std::isfinite(learning_rate) && std::isfinite(momentum) && std::isfinite(ridge))) {
        throw InvalidArgument("hyperparams: non-finite value");
    }
    if (learning_rate < 0.0) throw InvalidArgument("hyperparams: negative learning rate");
    if (momentum < 0.0 || momentum >= 1.0) {
        throw InvalidArgument("hyperparams: momentum must be in [0, 1)");
    }
    if (batch_size < 2 || batch_size % 2 != 0) {
        throw InvalidArgument("hyperparams: batch size must be even and >= 2");
    }
    if (dictionaries == 0) throw InvalidArgument("hyperparams: need at least one dictionary");
    if (codewords < 2 || (codewords & (codewords - 1)) != 0) {
        throw InvalidArgument("hyperparams: codewords must be a power of two >= 2");
    }
    if (icm_sweeps < 1) throw InvalidArgument("hyperparams: icm sweeps must be >= 1");
    if (icm_restarts < 1) throw InvalidArgument("hyperparams: icm restarts must be >= 1");
    if (epochs_per_outer == 0) throw InvalidArgument("hyperparams: epochs per outer must be >= 1");
    if (kernel_scales.empty()) throw InvalidArgument("hyperparams: kernel scales empty");
    for (double s : kernel_scales) {
        if (!(s > 0.0)) throw InvalidArgument("hyperparams: kernel scales must be positive");
    }
}

namespace {

std::size_t primary_class(const Matrix& labels, std::size_t col) {
    for (std::size_t k = 0; k < labels.rows(); ++k) {
        if (labels(k, col) == 1.0) return k;
    }
    throw InvalidArgument("batch: column " + std::to_string(col) + " has no label");
}

struct Pool {
    std::size_t class_index = 0;
    std::vector<std::size_t> cols;
    std::size_t cursor = 0;

    std::size_t remaining() const { return cols.size() - cursor; }
};

}  // namespace

Batch make_batch(const data::Dataset& ds, std::size_t batch_size, std::mt19937_64& rng) {
    if (ds.count() == 0) throw InvalidArgument("make_batch: empty dataset");
    if (batch_size < 2 || batch_size % 2 != 0) {
        throw InvalidArgument("make_batch: batch size must be even and >= 2");
    }

    std::vector<std::vector<std::size_t>> by_class(ds.num_classes());
    for (std::size_t col = 0; col < ds.count(); ++col) {
        by_class[primary_class(ds.labels, col)].push_back(col);
    }

    std::vector<Pool> pools;
    std::vector<std::size_t> singles;
    for (std::size_t k = 0; k < by_class.size(); ++k) {
        if (by_class[k].size() >= 2) {
            pools.push_back({k, by_class[k], 0});
        } else if (by_class[k].size() == 1) {
            singles.push_back(by_class[k][0]);
        }
    }
    for (Pool& p : pools) std::shuffle(p.cols.begin(), p.cols.end(), rng);
    std::shuffle(pools.begin(), pools.end(), rng);

    std::vector<std::size_t> chosen;
    std::vector<std::vector<std::size_t>> slice_positions(ds.num_classes());
    std::size_t singles_used = 0;
    while (chosen.size() < batch_size) {
        bool progressed = false;
        for (Pool& p : pools) {
            if (chosen.size() + 2 > batch_size) break;
            if (p.remaining() < 2) continue;
            for (int take = 0; take < 2; ++take) {
                slice_positions[p.class_index].push_back(chosen.size());
                chosen.push_back(p.cols[p.cursor++]);
            }
            progressed = true;
        }
        if (chosen.size() >= batch_size) break;
        if (!progressed) {
            if (singles_used < singles.size()) {
                chosen.push_back(singles[singles_used++]);
                continue;
            }
            if (pools.empty() && singles.empty()) {
                throw InvalidArgument("make_batch: no usable columns");
            }
            // Dataset smaller than the batch: rewind the pools and keep
            // drawing (items repeat across cycles).
            for (Pool& p : pools) {
                std::shuffle(p.cols.begin(), p.cols.end(), rng);
                p.cursor = 0;
            }
            singles_used = 0;
            if (pools.empty()) {
                chosen.push_back(singles[singles_used++]);
            }
        }
    }

    Batch batch;
    batch.source_cols = chosen;
    const data::Dataset view = data::subset(ds, chosen);
    batch.x_i = view.x_i;
    batch.x_t = view.x_t;
    batch.labels = view.labels;
    for (std::size_t k = 0; k < slice_positions.size(); ++k) {
        if (slice_positions[k].size() >= 2) {
            batch.slices.push_back({k, std::move(slice_positions[k])});
        }
    }
    return batch;
}

namespace {

net::Gradients zero_like(const net::EncoderParams& params) {
    net::Gradients g;
    auto zero_branch = [](const net::Branch& b) {
        net::BranchGrads out;
        auto zero_affine = [](const net::Affine& a) {
            return net::AffineGrad{Matrix(a.w.rows(), a.w.cols()),
                                   std::vector<double>(a.b.size(), 0.0)};
        };
        for (const net::Affine& h : b.hidden) out.hidden.push_back(zero_affine(h));
        out.shared_head = zero_affine(b.shared_head);
        out.private_head = zero_affine(b.private_head);
        out.classifier = zero_affine(b.classifier);
        return out;
    };
    g.image = zero_branch(params.image);
    g.text = zero_branch(params.text);
    return g;
}

void check_grad_finite(const net::Gradients& g) {
    auto check_branch = [](const net::BranchGrads& bg, const char* name) {
        auto check = [&](const net::AffineGrad& a, const std::string& layer) {
            if (!all_finite(a.dw) || !all_finite(a.db)) {
                double peak = max_abs(a.dw);
                throw NumericalError("sgd_step: non-finite gradient in " + std::string(name) +
                                     " " + layer + " (max |dw| = " + std::to_string(peak) +
                                     "); the learning rate is likely too high");
            }
        };
        for (std::size_t l = 0; l < bg.hidden.size(); ++l) {
            check(bg.hidden[l], "hidden[" + std::to_string(l) + "]");
        }
        check(bg.shared_head, "shared head");
        check(bg.private_head, "private head");
        check(bg.classifier, "classifier");
    };
    check_branch(g.image, "image branch");
    check_branch(g.text, "text branch");
}

}  // namespace

net::LossTerms sgd_step(TrainState& state, const Batch& batch, const Hyperparams& hyper) {
    net::BatchInputs inputs{&batch.x_i, &batch.x_t, &batch.labels, &batch.slices};
    net::QuantState quant{&state.qm.c_i, &state.qm.c_t, &state.qm.z};
    net::BackwardResult res = net::backward(state.params, inputs, &quant, hyper.alpha,
                                            hyper.lambda, state.bank_shared, state.bank_private);
    check_grad_finite(res.grads);
    state.skipped_class_slices += res.skipped_classes;

    const double lr = hyper.learning_rate;
    const double mu = hyper.momentum;
    auto apply_branch = [&](net::BranchGrads& vel, net::BranchGrads& grad, net::Branch& branch) {
        auto apply = [&](net::AffineGrad& v, net::AffineGrad& g, net::Affine& a) {
            for (std::size_t k = 0; k < v.dw.size(); ++k) {
                double& vk = v.dw.values()[k];
                vk = mu * vk + g.dw.values()[k];
                a.w.values()[k] -= lr * vk;
            }
            for (std::size_t k = 0; k < v.db.size(); ++k) {
                v.db[k] = mu * v.db[k] + g.db[k];
                a.b[k] -= lr * v.db[k];
            }
        };
        for (std::size_t l = 0; l < branch.hidden.size(); ++l) {
            apply(vel.hidden[l], grad.hidden[l], branch.hidden[l]);
        }
        apply(vel.shared_head, grad.shared_head, branch.shared_head);
        apply(vel.private_head, grad.private_head, branch.private_head);
        apply(vel.classifier, grad.classifier, branch.classifier);
    };
    apply_branch(state.velocity.image, res.grads.image, state.params.image);
    apply_branch(state.velocity.text, res.grads.text, state.params.text);
    return res.losses;
}

TrainState train(const data::Dataset& ds, const net::EncoderConfig& enc, const Hyperparams& hyper,
                 const ProgressFn& progress) {
    hyper.validate();
    data::validate_dataset(ds);
    if (ds.x_i.rows() != enc.image_input_dim || ds.x_t.rows() != enc.text_input_dim) {
        throw DimensionError("train: dataset feature dims (" + std::to_string(ds.x_i.rows()) +
                             ", " + std::to_string(ds.x_t.rows()) +
                             ") disagree with the encoder config");
    }
    const std::vector<std::size_t> train_idx = data::indices_of(ds, data::SplitTag::train);
    if (train_idx.empty()) throw InvalidArgument("train: no columns tagged train");
    const data::Dataset tds = data::subset(ds, train_idx);
    const std::size_t n = tds.count();
    const std::size_t num_classes = tds.num_classes();

    const std::size_t d_s = enc.shared_dim;
    const std::size_t d_z = hyper.label_dim == 0 ? d_s : hyper.label_dim;
    if (d_z > d_s) throw InvalidArgument("train: label dim must not exceed the shared dim");

    TrainState state;
    state.params = init_params(enc, num_classes, mix_seed(hyper.seed, 0xA1));
    state.velocity = zero_like(state.params);

    // Median-heuristic kernel banks from an initial forward pass, frozen for
    // the whole run.
    {
        const net::EncoderOutput oi = net::forward(state.params, tds.x_i, net::Modality::image);
        const net::EncoderOutput ot = net::forward(state.params, tds.x_t, net::Modality::text);
        auto pooled = [](const Matrix& a, const Matrix& b) {
            const std::size_t take = std::min<std::size_t>(a.cols(), 128);
            Matrix out(a.rows(), 2 * take);
            for (std::size_t j = 0; j < take; ++j) {
                const std::size_t src = j * a.cols() / take;
                for (std::size_t i = 0; i < a.rows(); ++i) {
                    out(i, j) = a(i, src);
                    out(i, take + j) = b(i, src);
                }
            }
            return out;
        };
        state.bank_shared = mmd::KernelBank::multi_scale(
            mmd::median_sq_dist(pooled(oi.s, ot.s)), hyper.kernel_scales);
        state.bank_private = mmd::KernelBank::multi_scale(
            mmd::median_sq_dist(pooled(oi.r, ot.r)), hyper.kernel_scales);
    }

    std::mt19937_64 rng_quant(mix_seed(hyper.seed, 0xB2));
    state.qm.m = hyper.dictionaries;
    state.qm.k_d = hyper.codewords;
    state.qm.c_i = random_row_orthonormal(d_z, d_s, rng_quant);
    state.qm.c_t = random_row_orthonormal(d_z, d_s, rng_quant);
    state.qm.z = random_gaussian(d_z, num_classes, rng_quant, 1.0 / std::sqrt(double(d_z)));
    state.qm.d = random_gaussian(d_z, hyper.dictionaries * hyper.codewords, rng_quant,
                                 1.0 / std::sqrt(double(d_z * hyper.dictionaries)));
    state.qm.codes = quant::random_codes(n, hyper.dictionaries, hyper.codewords,
                                         mix_seed(hyper.seed, 0xC3));

    std::mt19937_64 rng_batch(mix_seed(hyper.seed, 0xD4));
    const std::size_t batches_per_epoch = std::max<std::size_t>(1, n / hyper.batch_size);

    for (std::size_t outer = 1; outer <= hyper.outer_iters; ++outer) {
        double o_l_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t epoch = 0; epoch < hyper.epochs_per_outer; ++epoch) {
            for (std::size_t b = 0; b < batches_per_epoch; ++b) {
                const Batch batch = make_batch(tds, hyper.batch_size, rng_batch);
                const net::LossTerms losses = sgd_step(state, batch, hyper);
                o_l_sum += losses.l1 + hyper.alpha * losses.l2;
                ++steps;
            }
        }
        const double o_l = o_l_sum / static_cast<double>(steps);

        const net::EncoderOutput oi = net::forward(state.params, tds.x_i, net::Modality::image);
        const net::EncoderOutput ot = net::forward(state.params, tds.x_t, net::Modality::text);

        Matrix zl = matmul(state.qm.z, tds.labels);
        state.qm.c_i = quant::update_c(oi.s, zl);
        state.qm.c_t = quant::update_c(ot.s, zl);
        state.qm.z = quant::update_z(matmul(state.qm.c_i, oi.s), matmul(state.qm.c_t, ot.s),
                                     state.qm.d, state.qm.codes, tds.labels, hyper.beta,
                                     hyper.ridge);
        zl = matmul(state.qm.z, tds.labels);
        state.qm.d = quant::update_d(zl, state.qm.codes, hyper.ridge);
        quant::icm_assign_all(zl, state.qm.d, state.qm.codes, hyper.icm_sweeps,
                              hyper.icm_restarts, mix_seed(hyper.seed, 0xE5 + outer));

        const double o_q = quant::quant_objective(state.qm, oi.s, ot.s, tds.labels, hyper.beta);
        const double o = o_l + hyper.lambda * o_q;
        if (!std::isfinite(o)) throw NumericalError("train: objective diverged");
        state.history.push_back({outer, o_l, o_q, o});
        state.outer_done = outer;
        if (progress) progress(state.history.back());

        if (state.history.size() >= 4) {
            bool settled = true;
            const std::size_t last = state.history.size() - 1;
            for (std::size_t k = 0; k < 3; ++k) {
                const double prev = state.history[last - k - 1].o;
                const double cur = state.history[last - k].o;
                if (std::fabs(cur - prev) / std::max(1e-12, std::fabs(prev)) >= 1e-5) {
                    settled = false;
                    break;
                }
            }
            if (settled) break;
        }
    }
    return state;
}

void write_loss_history_csv(const std::vector<LossRecord>& history,
                            const std::filesystem::path& path, std::uint64_t config_hash) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    char buf[96];
    std::snprintf(buf, sizeof(buf), "# config_hash=%016llx",
                  static_cast<unsigned long long>(config_hash));
    out << buf << "\niteration,o_l,o_q,o\n";
    for (const LossRecord& rec : history) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g", rec.outer, rec.o_l, rec.o_q,
                      rec.o);
        out << buf << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace spdq::train
