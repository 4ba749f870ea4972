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

#include <cmath>
#include <functional>
#include <random>

#include "spdq/linalg.hpp"
#include "spdq/net.hpp"
#include "spdq/random.hpp"

using namespace spdq;
using namespace spdq::net;

namespace {

template <class Fn>
void for_each_affine_pair(EncoderParams& p, Gradients& g, Fn&& fn) {
    auto walk = [&](Branch& b, BranchGrads& bg) {
        for (std::size_t l = 0; l < b.hidden.size(); ++l) fn(b.hidden[l], bg.hidden[l]);
        fn(b.shared_head, bg.shared_head);
        fn(b.private_head, bg.private_head);
        fn(b.classifier, bg.classifier);
    };
    walk(p.image, g.image);
    walk(p.text, g.text);
}

struct ToyInstance {
    EncoderParams params;
    Matrix x_i, x_t, labels;
    std::vector<ClassSlice> slices;
    Matrix c_i, c_t, z;
    mmd::KernelBank bank_s = mmd::KernelBank::multi_scale(1.0);
    mmd::KernelBank bank_r = mmd::KernelBank::multi_scale(0.5);

    BatchInputs batch() const { return {&x_i, &x_t, &labels, &slices}; }
    QuantState quant() const { return {&c_i, &c_t, &z}; }
};

ToyInstance make_toy(std::uint64_t seed) {
    EncoderConfig cfg;
    cfg.image_input_dim = 6;
    cfg.text_input_dim = 5;
    cfg.image_hidden = {7};
    cfg.text_hidden = {7};
    cfg.shared_dim = 4;
    cfg.private_dim = 3;

    ToyInstance toy;
    toy.params = init_params(cfg, 3, seed);
    std::mt19937_64 rng(mix_seed(seed, 99));
    toy.x_i = random_gaussian(6, 8, rng);
    toy.x_t = random_gaussian(5, 8, rng);
    toy.labels = Matrix(3, 8);
    for (std::size_t j = 0; j < 4; ++j) toy.labels(0, j) = 1.0;
    for (std::size_t j = 4; j < 8; ++j) toy.labels(1, j) = 1.0;
    toy.labels(2, 1) = 1.0;  // one multi-label column
    toy.slices = {{0, {0, 1, 2, 3}}, {1, {4, 5, 6, 7}}};
    const std::size_t d_z = 3;
    toy.c_i = random_row_orthonormal(d_z, 4, rng);
    toy.c_t = random_row_orthonormal(d_z, 4, rng);
    toy.z = random_gaussian(d_z, 3, rng);
    return toy;
}

// Central finite differences over every weight and bias.
double max_grad_rel_error(ToyInstance& toy, double alpha, double lambda) {
    const QuantState qs = toy.quant();
    const QuantState* quant = lambda > 0.0 ? &qs : nullptr;
    const BatchInputs batch = toy.batch();
    const BackwardResult res =
        backward(toy.params, batch, quant, alpha, lambda, toy.bank_s, toy.bank_r);

    auto objective = [&]() {
        return batch_objective(toy.params, batch, quant, toy.bank_s, toy.bank_r)
            .total(alpha, lambda);
    };

    const double h = 1e-6;
    double worst = 0.0;
    Gradients grads = res.grads;
    for_each_affine_pair(toy.params, grads, [&](Affine& a, AffineGrad& g) {
        for (std::size_t k = 0; k < a.w.size() + a.b.size(); ++k) {
            double* slot = k < a.w.size() ? &a.w.values()[k] : &a.b[k - a.w.size()];
            const double analytic =
                k < a.w.size() ? g.dw.values()[k] : g.db[k - a.w.size()];
            const double orig = *slot;
            *slot = orig + h;
            const double up = objective();
            *slot = orig - h;
            const double down = objective();
            *slot = orig;
            const double fd = (up - down) / (2.0 * h);
            const double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-6});
            worst = std::max(worst, std::fabs(analytic - fd) / denom);
        }
    });
    return worst;
}

}  // namespace

TEST_CASE("forward with all-zero parameters emits zeros") {
    EncoderConfig cfg;
    cfg.image_input_dim = 4;
    cfg.text_input_dim = 4;
    cfg.image_hidden = {5};
    cfg.text_hidden = {5};
    cfg.shared_dim = 3;
    cfg.private_dim = 2;
    EncoderParams p = init_params(cfg, 2, 1);
    auto zero_branch = [](Branch& b) {
        for (Affine* a : {&b.shared_head, &b.private_head, &b.classifier}) {
            scale_inplace(a->w, 0.0);
        }
        for (Affine& h : b.hidden) scale_inplace(h.w, 0.0);
    };
    zero_branch(p.image);
    zero_branch(p.text);
    std::mt19937_64 rng(2);
    const EncoderOutput out = forward(p, random_gaussian(4, 3, rng), Modality::image);
    CHECK(max_abs(out.s) == 0.0);
    CHECK(max_abs(out.r) == 0.0);
    CHECK(max_abs(out.logits) == 0.0);
}

TEST_CASE("forward is deterministic and duplicated inputs give duplicated outputs") {
    ToyInstance toy = make_toy(5);
    Matrix x(6, 2);
    std::mt19937_64 rng(3);
    const Matrix col = random_gaussian(6, 1, rng);
    for (std::size_t i = 0; i < 6; ++i) {
        x(i, 0) = col(i, 0);
        x(i, 1) = col(i, 0);
    }
    const EncoderOutput a = forward(toy.params, x, Modality::image);
    const EncoderOutput b = forward(toy.params, x, Modality::image);
    CHECK(a.s == b.s);
    CHECK(a.logits == b.logits);
    for (std::size_t i = 0; i < a.s.rows(); ++i) CHECK(a.s(i, 0) == a.s(i, 1));
    for (std::size_t i = 0; i < a.r.rows(); ++i) CHECK(a.r(i, 0) == a.r(i, 1));
}

TEST_CASE("shared and private activations stay inside (-1, 1)") {
    ToyInstance toy = make_toy(8);
    std::mt19937_64 rng(4);
    const EncoderOutput out =
        forward(toy.params, random_gaussian(6, 16, rng), Modality::image);
    for (double v : out.s.values()) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);
    }
    for (double v : out.r.values()) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("forward rejects mismatched input dimensions") {
    ToyInstance toy = make_toy(6);
    CHECK_THROWS_AS(forward(toy.params, Matrix(9, 2), Modality::image), DimensionError);
}

TEST_CASE("class loss hand values and stability") {
    Matrix logits(1, 1), labels(1, 1, 1.0);
    CHECK(class_loss(logits, labels) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    logits(0, 0) = 40.0;
    CHECK(class_loss(logits, labels) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::isfinite(class_loss(logits, labels)));

    logits(0, 0) = -40.0;
    CHECK(class_loss(logits, labels) == doctest::Approx(40.0).epsilon(1e-9));

    Matrix bad(1, 1, 0.5);
    CHECK_THROWS_AS(class_loss(logits, bad), InvalidArgument);
    CHECK_THROWS_AS(class_loss(Matrix(2, 1), Matrix(1, 1)), DimensionError);
}

TEST_CASE("class loss gradient matches finite differences") {
    std::mt19937_64 rng(11);
    Matrix logits = random_gaussian(3, 5, rng);
    Matrix labels(3, 5);
    std::uniform_int_distribution<int> coin(0, 1);
    for (double& v : labels.values()) v = coin(rng);
    Matrix grad;
    class_loss(logits, labels, &grad);
    const double h = 1e-6;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        const double orig = logits.values()[k];
        logits.values()[k] = orig + h;
        const double up = class_loss(logits, labels);
        logits.values()[k] = orig - h;
        const double down = class_loss(logits, labels);
        logits.values()[k] = orig;
        const double fd = (up - down) / (2.0 * h);
        CHECK(grad.values()[k] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("pairing loss vanishes when the branches emit identical representations") {
    std::mt19937_64 rng(12);
    const Matrix s = random_gaussian(4, 8, rng);
    const Matrix r = random_gaussian(3, 8, rng);
    const std::vector<ClassSlice> slices{{0, {0, 1, 2, 3}}, {1, {4, 5, 6, 7}}};
    const mmd::KernelBank bank = mmd::KernelBank::multi_scale(1.0);
    const L1Result res = l1_loss(s, r, s, r, slices, bank, bank);
    CHECK(res.value == doctest::Approx(0.0));
    CHECK(max_abs(res.ds_i) == doctest::Approx(0.0));
}

TEST_CASE("pairing loss goes negative when private subspaces are far apart") {
    // Shared representations identical across branches; private ones form two
    // far clusters, so the private discrepancy term dominates with sign
    // flipped. The expected value comes from the quadratic oracle.
    std::mt19937_64 rng(13);
    const std::size_t per_class = 6;
    const std::size_t classes = 2;
    const std::size_t n = per_class * classes;
    const Matrix s = random_gaussian(4, n, rng);
    Matrix r_i = random_gaussian(3, n, rng);
    Matrix r_t = r_i;
    for (std::size_t j = 0; j < n; ++j) r_t(0, j) += 1e3;

    std::vector<ClassSlice> slices;
    for (std::size_t k = 0; k < classes; ++k) {
        ClassSlice slice{k, {}};
        for (std::size_t j = 0; j < per_class; ++j) slice.cols.push_back(k * per_class + j);
        slices.push_back(slice);
    }
    const mmd::KernelBank bank = mmd::KernelBank::multi_scale(2.0);
    const L1Result res = l1_loss(s, r_i, s, r_t, slices, bank, bank);
    CHECK(res.value < 0.0);

    double exact = 0.0;
    double oracle = 0.0;
    for (const ClassSlice& slice : slices) {
        Matrix ri_k(3, slice.cols.size()), rt_k(3, slice.cols.size());
        for (std::size_t j = 0; j < slice.cols.size(); ++j) {
            for (std::size_t i = 0; i < 3; ++i) {
                ri_k(i, j) = r_i(i, slice.cols[j]);
                rt_k(i, j) = r_t(i, slice.cols[j]);
            }
        }
        exact -= mmd::mmd_sq_linear(ri_k, rt_k, bank);
        oracle -= mmd::mmd_sq_biased(ri_k, rt_k, bank);
    }
    CHECK(res.value == doctest::Approx(exact).epsilon(1e-12));
    // The quadratic oracle sees ~2x the within-cluster kernel mass per class.
    CHECK(res.value == doctest::Approx(oracle).epsilon(0.5));
}

TEST_CASE("pairing loss skips classes with fewer than two aligned pairs") {
    std::mt19937_64 rng(14);
    const Matrix s = random_gaussian(4, 5, rng);
    const Matrix r = random_gaussian(3, 5, rng);
    const std::vector<ClassSlice> slices{{0, {0, 1, 2, 3}}, {1, {4}}};
    const mmd::KernelBank bank = mmd::KernelBank::multi_scale(1.0);
    const L1Result res = l1_loss(s, r, s, r, slices, bank, bank);
    CHECK(res.skipped_classes == 1);
}

TEST_CASE("backward with alpha = 0 and lambda = 0 reduces to the pairing path") {
    ToyInstance toy = make_toy(21);
    const BatchInputs batch = toy.batch();
    const BackwardResult res =
        backward(toy.params, batch, nullptr, 0.0, 0.0, toy.bank_s, toy.bank_r);
    CHECK(max_abs(res.grads.image.classifier.dw) == 0.0);
    CHECK(max_abs(res.grads.text.classifier.dw) == 0.0);
    CHECK(res.losses.l2 > 0.0);   // still reported
    CHECK(res.losses.align == 0.0);
    CHECK(max_grad_rel_error(toy, 0.0, 0.0) < 1e-4);
}

TEST_CASE("backward requires quantizer state when lambda > 0") {
    ToyInstance toy = make_toy(22);
    const BatchInputs batch = toy.batch();
    CHECK_THROWS_AS(backward(toy.params, batch, nullptr, 1.0, 0.5, toy.bank_s, toy.bank_r),
                    InvalidArgument);
}

TEST_CASE("full objective gradient matches finite differences across seeds") {
    for (std::uint64_t seed : {31, 32, 33, 34, 35, 36, 37, 38, 39, 40}) {
        CAPTURE(seed);
        ToyInstance toy = make_toy(seed);
        CHECK(max_grad_rel_error(toy, 1.3, 0.7) < 1e-4);
    }
}

TEST_CASE("isolated loss terms pass the gradient check") {
    ToyInstance toy = make_toy(55);
    CHECK(max_grad_rel_error(toy, 0.0, 0.0) < 1e-4);  // pairing only
    CHECK(max_grad_rel_error(toy, 2.0, 0.0) < 1e-4);  // plus classification
    CHECK(max_grad_rel_error(toy, 0.0, 1.5) < 1e-4);  // plus alignment
}

TEST_CASE("alignment term vanishes when the transform is identity and anchors equal s") {
    // d_z = d_s, C = I, one class per column, anchors copied straight from s.
    EncoderConfig cfg;
    cfg.image_input_dim = 6;
    cfg.text_input_dim = 5;
    cfg.image_hidden = {7};
    cfg.text_hidden = {7};
    cfg.shared_dim = 4;
    cfg.private_dim = 3;
    const std::size_t batch_n = 8;
    ToyInstance toy;
    toy.params = init_params(cfg, batch_n, 44);
    std::mt19937_64 rng(45);
    toy.x_i = random_gaussian(6, batch_n, rng);
    toy.x_t = random_gaussian(5, batch_n, rng);
    toy.labels = Matrix(batch_n, batch_n);
    for (std::size_t j = 0; j < batch_n; ++j) toy.labels(j, j) = 1.0;
    toy.slices = {{0, {0, 1, 2, 3}}, {1, {4, 5, 6, 7}}};
    toy.c_i = Matrix::identity(4);
    toy.c_t = Matrix::identity(4);
    const ForwardCache fc = forward_cached(toy.params.image, toy.x_i);
    toy.z = fc.s;

    const BatchInputs batch = toy.batch();
    const QuantState qs = toy.quant();
    const BackwardResult with_align =
        backward(toy.params, batch, &qs, 0.0, 5.0, toy.bank_s, toy.bank_r);
    // The image-branch alignment residual is zero by construction...
    const double img_align =
        frobenius_sq(sub(matmul(toy.c_i, fc.s), matmul(toy.z, toy.labels)));
    CHECK(img_align == doctest::Approx(0.0));
    // ... so image-branch gradients match the lambda = 0 run exactly.
    const BackwardResult without =
        backward(toy.params, batch, &qs, 0.0, 0.0, toy.bank_s, toy.bank_r);
    CHECK(max_abs(sub(with_align.grads.image.shared_head.dw,
                      without.grads.image.shared_head.dw)) < 1e-12);
}

TEST_CASE("a few plain gradient steps strictly decrease the representation loss") {
    ToyInstance toy = make_toy(66);
    const BatchInputs batch = toy.batch();
    auto o_l = [&]() {
        const LossTerms t = batch_objective(toy.params, batch, nullptr, toy.bank_s, toy.bank_r);
        return t.l1 + 1.0 * t.l2;
    };
    double lr = 0.5;
    bool decreased = false;
    for (int attempt = 0; attempt < 6 && !decreased; ++attempt, lr *= 0.25) {
        EncoderParams saved = toy.params;
        decreased = true;
        double prev = o_l();
        for (int step = 0; step < 50; ++step) {
            BackwardResult res =
                backward(toy.params, batch, nullptr, 1.0, 0.0, toy.bank_s, toy.bank_r);
            Gradients g = res.grads;
            for_each_affine_pair(toy.params, g, [&](Affine& a, AffineGrad& grad) {
                add_inplace(a.w, grad.dw, -lr);
                for (std::size_t k = 0; k < a.b.size(); ++k) a.b[k] -= lr * grad.db[k];
            });
            const double cur = o_l();
            if (!(cur < prev)) {
                decreased = false;
                break;
            }
            prev = cur;
        }
        if (!decreased) toy.params = saved;
    }
    CHECK(decreased);
}

TEST_CASE("encoder persistence round trips bit for bit") {
    ToyInstance toy = make_toy(77);
    const auto path = std::filesystem::temp_directory_path() / "spdq_net_test.encoder.bin";
    save_encoder(toy.params, path);
    const EncoderParams loaded = load_encoder(path);
    CHECK(loaded.shared_dim == toy.params.shared_dim);
    CHECK(loaded.private_dim == toy.params.private_dim);
    CHECK(loaded.num_classes == toy.params.num_classes);
    CHECK(loaded.image.hidden.size() == toy.params.image.hidden.size());
    CHECK(loaded.image.shared_head.w == toy.params.image.shared_head.w);
    CHECK(loaded.text.classifier.w == toy.params.text.classifier.w);
    CHECK(loaded.image.hidden[0].b == toy.params.image.hidden[0].b);
    CHECK(layer_shapes(loaded) == layer_shapes(toy.params));

    std::mt19937_64 rng(1);
    const Matrix x = random_gaussian(6, 3, rng);
    const EncoderOutput a = forward(toy.params, x, Modality::image);
    const EncoderOutput b = forward(loaded, x, Modality::image);
    CHECK(a.s == b.s);
    CHECK(a.logits == b.logits);
}
