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

#include "spdq/net.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "spdq/linalg.hpp"
#include "spdq/random.hpp"

namespace spdq::net {

const char* modality_name(Modality m) { return m == Modality::image ? "image" : "text"; }

Modality modality_from_name(const std::string& name) {
    if (name == "image") return Modality::image;
    if (name == "text") return Modality::text;
    throw InvalidArgument("unknown modality: " + name);
}

namespace {

Matrix apply_affine(const Affine& a, const Matrix& x) {
    if (a.w.cols() != x.rows()) {
        throw DimensionError("affine: weight cols " + std::to_string(a.w.cols()) +
                             " vs input rows " + std::to_string(x.rows()));
    }
    Matrix z = matmul(a.w, x);
    for (std::size_t i = 0; i < z.rows(); ++i) {
        double* row = z.row_ptr(i);
        const double bi = a.b[i];
        for (std::size_t j = 0; j < z.cols(); ++j) row[j] += bi;
    }
    return z;
}

Matrix tanh_of(const Matrix& z) {
    Matrix a = z;
    for (double& v : a.values()) v = std::tanh(v);
    return a;
}

// g_pre = (1 - a^2) .* g_post for a = tanh(pre)
Matrix tanh_backprop(const Matrix& activation, const Matrix& g) {
    Matrix out = g;
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double a = activation.values()[k];
        out.values()[k] *= (1.0 - a * a);
    }
    return out;
}

std::vector<double> row_sums(const Matrix& m) {
    std::vector<double> out(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row_ptr(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) acc += row[j];
        out[i] = acc;
    }
    return out;
}

Matrix vconcat(const Matrix& top, const Matrix& bottom) {
    Matrix out(top.rows() + bottom.rows(), top.cols());
    std::memcpy(out.values().data(), top.values().data(), top.size() * sizeof(double));
    std::memcpy(out.values().data() + top.size(), bottom.values().data(),
                bottom.size() * sizeof(double));
    return out;
}

Affine init_affine(std::size_t out_dim, std::size_t in_dim, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
    Affine a;
    a.w = random_uniform(out_dim, in_dim, rng, -limit, limit);
    a.b.assign(out_dim, 0.0);
    return a;
}

Branch init_branch(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                   std::size_t d_s, std::size_t d_p, std::size_t num_classes,
                   std::mt19937_64& rng) {
    Branch b;
    std::size_t in = input_dim;
    for (std::size_t width : hidden) {
        b.hidden.push_back(init_affine(width, in, rng));
        in = width;
    }
    b.shared_head = init_affine(d_s, in, rng);
    b.private_head = init_affine(d_p, in, rng);
    b.classifier = init_affine(num_classes, d_s + d_p, rng);
    return b;
}

}  // namespace

EncoderParams init_params(const EncoderConfig& cfg, std::size_t num_classes, std::uint64_t seed) {
    if (cfg.shared_dim == 0 || cfg.private_dim == 0 || num_classes == 0) {
        throw InvalidArgument("init_params: dimensions must be positive");
    }
    std::mt19937_64 rng(seed);
    EncoderParams p;
    p.shared_dim = cfg.shared_dim;
    p.private_dim = cfg.private_dim;
    p.num_classes = num_classes;
    p.image = init_branch(cfg.image_input_dim, cfg.image_hidden, cfg.shared_dim, cfg.private_dim,
                          num_classes, rng);
    p.text = init_branch(cfg.text_input_dim, cfg.text_hidden, cfg.shared_dim, cfg.private_dim,
                         num_classes, rng);
    return p;
}

ForwardCache forward_cached(const Branch& branch, const Matrix& x) {
    if (x.rows() != branch.input_dim()) {
        throw DimensionError("forward: input dim " + std::to_string(x.rows()) + ", expected " +
                             std::to_string(branch.input_dim()));
    }
    ForwardCache fc;
    fc.act.push_back(x);
    for (const Affine& layer : branch.hidden) {
        fc.act.push_back(tanh_of(apply_affine(layer, fc.act.back())));
    }
    fc.s = tanh_of(apply_affine(branch.shared_head, fc.act.back()));
    fc.r = tanh_of(apply_affine(branch.private_head, fc.act.back()));
    fc.h = vconcat(fc.s, fc.r);
    fc.logits = apply_affine(branch.classifier, fc.h);
    return fc;
}

EncoderOutput forward(const EncoderParams& params, const Matrix& x, Modality modality) {
    ForwardCache fc = forward_cached(params.branch(modality), x);
    return EncoderOutput{std::move(fc.s), std::move(fc.r), std::move(fc.logits)};
}

double class_loss(const Matrix& logits, const Matrix& labels, Matrix* grad) {
    if (logits.rows() != labels.rows() || logits.cols() != labels.cols()) {
        throw DimensionError("class_loss: logits/labels shape mismatch");
    }
    for (double l : labels.values()) {
        if (l != 0.0 && l != 1.0) throw InvalidArgument("class_loss: labels must be 0 or 1");
    }
    const double count = static_cast<double>(logits.size());
    if (grad != nullptr) *grad = Matrix(logits.rows(), logits.cols());
    double acc = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        const double z = logits.values()[k];
        const double l = labels.values()[k];
        acc += std::max(z, 0.0) - z * l + std::log1p(std::exp(-std::fabs(z)));
        if (grad != nullptr) {
            const double sig = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                                        : std::exp(z) / (1.0 + std::exp(z));
            grad->values()[k] = (sig - l) / count;
        }
    }
    return acc / count;
}

namespace {

Matrix gather_cols(const Matrix& m, const std::vector<std::size_t>& cols) {
    Matrix out(m.rows(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (std::size_t i = 0; i < m.rows(); ++i) out(i, j) = m(i, cols[j]);
    }
    return out;
}

void scatter_add_cols(Matrix& dst, const Matrix& src, const std::vector<std::size_t>& cols,
                      double scale) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (std::size_t i = 0; i < src.rows(); ++i) dst(i, cols[j]) += scale * src(i, j);
    }
}

}  // namespace

L1Result l1_loss(const Matrix& s_i, const Matrix& r_i, const Matrix& s_t, const Matrix& r_t,
                 const std::vector<ClassSlice>& slices, const mmd::KernelBank& bank_shared,
                 const mmd::KernelBank& bank_private) {
    if (s_i.cols() != s_t.cols() || r_i.cols() != r_t.cols() || s_i.cols() != r_i.cols()) {
        throw DimensionError("l1_loss: batch column counts mismatch");
    }
    L1Result out;
    out.ds_i = Matrix(s_i.rows(), s_i.cols());
    out.dr_i = Matrix(r_i.rows(), r_i.cols());
    out.ds_t = Matrix(s_t.rows(), s_t.cols());
    out.dr_t = Matrix(r_t.rows(), r_t.cols());
    for (const ClassSlice& slice : slices) {
        std::vector<std::size_t> cols = slice.cols;
        if (cols.size() % 2 != 0) cols.pop_back();
        if (cols.size() < 2) {
            ++out.skipped_classes;
            continue;
        }
        const Matrix si_k = gather_cols(s_i, cols);
        const Matrix st_k = gather_cols(s_t, cols);
        const Matrix ri_k = gather_cols(r_i, cols);
        const Matrix rt_k = gather_cols(r_t, cols);
        out.value += mmd::mmd_sq_linear(si_k, st_k, bank_shared) -
                     mmd::mmd_sq_linear(ri_k, rt_k, bank_private);
        const mmd::LinearMmdGrad gs = mmd::mmd_sq_linear_grad(si_k, st_k, bank_shared);
        const mmd::LinearMmdGrad gr = mmd::mmd_sq_linear_grad(ri_k, rt_k, bank_private);
        scatter_add_cols(out.ds_i, gs.dp, cols, 1.0);
        scatter_add_cols(out.ds_t, gs.dq, cols, 1.0);
        scatter_add_cols(out.dr_i, gr.dp, cols, -1.0);
        scatter_add_cols(out.dr_t, gr.dq, cols, -1.0);
    }
    return out;
}

namespace {

struct AlignTerm {
    double value = 0.0;
    Matrix ds;  // 2 C^T (C s - Z l) per column
};

AlignTerm alignment_term(const Matrix& c, const Matrix& z, const Matrix& s, const Matrix& labels,
                         bool want_grad) {
    Matrix residual = sub(matmul(c, s), matmul(z, labels));
    AlignTerm out;
    out.value = frobenius_sq(residual);
    if (want_grad) {
        out.ds = matmul_tn(c, residual);
        scale_inplace(out.ds, 2.0);
    }
    return out;
}

void check_batch(const BatchInputs& batch) {
    if (batch.x_i == nullptr || batch.x_t == nullptr || batch.labels == nullptr ||
        batch.slices == nullptr) {
        throw InvalidArgument("batch inputs incomplete");
    }
    if (batch.x_i->cols() != batch.x_t->cols() || batch.x_i->cols() != batch.labels->cols()) {
        throw DimensionError("batch: column counts of x_i, x_t, labels must match");
    }
}

void check_quant(const QuantState* quant) {
    if (quant == nullptr || quant->c_i == nullptr || quant->c_t == nullptr ||
        quant->z == nullptr) {
        throw InvalidArgument("quantizer state required when lambda > 0");
    }
}

struct BranchBack {
    BranchGrads grads;
    double l2 = 0.0;
    double align = 0.0;
};

// Backpropagates d(objective)/d(s,r) plus the classifier path through one
// branch. ds/dr must already include every non-classification contribution.
BranchBack backward_branch(const Branch& branch, const ForwardCache& fc, Matrix ds, Matrix dr,
                           const Matrix& labels, const Matrix* c, const Matrix* z, double alpha,
                           double lambda) {
    BranchBack out;

    Matrix g_logits;
    out.l2 = class_loss(fc.logits, labels, &g_logits);
    scale_inplace(g_logits, alpha);

    if (lambda > 0.0) {
        AlignTerm at = alignment_term(*c, *z, fc.s, labels, true);
        out.align = at.value;
        add_inplace(ds, at.ds, lambda);
    }

    out.grads.classifier.dw = matmul_nt(g_logits, fc.h);
    out.grads.classifier.db = row_sums(g_logits);
    const Matrix g_h = matmul_tn(branch.classifier.w, g_logits);
    const std::size_t d_s = fc.s.rows();
    for (std::size_t i = 0; i < g_h.rows(); ++i) {
        for (std::size_t j = 0; j < g_h.cols(); ++j) {
            if (i < d_s) {
                ds(i, j) += g_h(i, j);
            } else {
                dr(i - d_s, j) += g_h(i, j);
            }
        }
    }

    const Matrix g_zs = tanh_backprop(fc.s, ds);
    const Matrix g_zr = tanh_backprop(fc.r, dr);
    const Matrix& top = fc.act.back();
    out.grads.shared_head.dw = matmul_nt(g_zs, top);
    out.grads.shared_head.db = row_sums(g_zs);
    out.grads.private_head.dw = matmul_nt(g_zr, top);
    out.grads.private_head.db = row_sums(g_zr);

    Matrix g_act = add(matmul_tn(branch.shared_head.w, g_zs),
                       matmul_tn(branch.private_head.w, g_zr));
    out.grads.hidden.resize(branch.hidden.size());
    for (std::size_t l = branch.hidden.size(); l-- > 0;) {
        const Matrix g_z = tanh_backprop(fc.act[l + 1], g_act);
        out.grads.hidden[l].dw = matmul_nt(g_z, fc.act[l]);
        out.grads.hidden[l].db = row_sums(g_z);
        if (l > 0) g_act = matmul_tn(branch.hidden[l].w, g_z);
    }
    return out;
}

}  // namespace

LossTerms batch_objective(const EncoderParams& params, const BatchInputs& batch,
                          const QuantState* quant, const mmd::KernelBank& bank_shared,
                          const mmd::KernelBank& bank_private) {
    check_batch(batch);
    const ForwardCache fi = forward_cached(params.image, *batch.x_i);
    const ForwardCache ft = forward_cached(params.text, *batch.x_t);
    LossTerms terms;
    terms.l1 = l1_loss(fi.s, fi.r, ft.s, ft.r, *batch.slices, bank_shared, bank_private).value;
    terms.l2 = class_loss(fi.logits, *batch.labels) + class_loss(ft.logits, *batch.labels);
    if (quant != nullptr && quant->c_i != nullptr) {
        terms.align = alignment_term(*quant->c_i, *quant->z, fi.s, *batch.labels, false).value +
                      alignment_term(*quant->c_t, *quant->z, ft.s, *batch.labels, false).value;
    }
    return terms;
}

BackwardResult backward(const EncoderParams& params, const BatchInputs& batch,
                        const QuantState* quant, double alpha, double lambda,
                        const mmd::KernelBank& bank_shared, const mmd::KernelBank& bank_private) {
    check_batch(batch);
    if (lambda > 0.0) check_quant(quant);

    const ForwardCache fi = forward_cached(params.image, *batch.x_i);
    const ForwardCache ft = forward_cached(params.text, *batch.x_t);

    L1Result l1 = l1_loss(fi.s, fi.r, ft.s, ft.r, *batch.slices, bank_shared, bank_private);

    BackwardResult out;
    out.skipped_classes = l1.skipped_classes;
    out.losses.l1 = l1.value;

    const Matrix* c_i = lambda > 0.0 ? quant->c_i : nullptr;
    const Matrix* z = lambda > 0.0 ? quant->z : nullptr;
    BranchBack bi = backward_branch(params.image, fi, std::move(l1.ds_i), std::move(l1.dr_i),
                                    *batch.labels, c_i, z, alpha, lambda);
    const Matrix* c_t = lambda > 0.0 ? quant->c_t : nullptr;
    BranchBack bt = backward_branch(params.text, ft, std::move(l1.ds_t), std::move(l1.dr_t),
                                    *batch.labels, c_t, z, alpha, lambda);
    out.losses.l2 = bi.l2 + bt.l2;
    out.losses.align = bi.align + bt.align;
    out.grads.image = std::move(bi.grads);
    out.grads.text = std::move(bt.grads);
    return out;
}

namespace {

constexpr char kEncoderMagic[8] = {'S', 'P', 'D', 'Q', 'E', 'N', 'C', '1'};

void put_u64_le(std::ostream& os, std::uint64_t v) {
    std::array<unsigned char, 8> b;
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::uint64_t get_u64_le(std::istream& is) {
    std::array<unsigned char, 8> b{};
    is.read(reinterpret_cast<char*>(b.data()), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

Matrix bias_as_matrix(const std::vector<double>& b) {
    Matrix m(b.size(), 1);
    for (std::size_t i = 0; i < b.size(); ++i) m(i, 0) = b[i];
    return m;
}

std::vector<double> bias_from_matrix(const Matrix& m) {
    if (m.cols() != 1) throw IoError("encoder file: bias block must be n x 1");
    std::vector<double> b(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) b[i] = m(i, 0);
    return b;
}

void write_affine(std::ostream& os, const Affine& a) {
    write_matrix_block(os, a.w);
    write_matrix_block(os, bias_as_matrix(a.b));
}

Affine read_affine(std::istream& is) {
    Affine a;
    a.w = read_matrix_block(is);
    a.b = bias_from_matrix(read_matrix_block(is));
    if (a.b.size() != a.w.rows()) throw IoError("encoder file: bias length mismatch");
    return a;
}

void for_each_affine(const EncoderParams& p, auto&& fn) {
    for (const Branch* b : {&p.image, &p.text}) {
        for (const Affine& h : b->hidden) fn(h);
        fn(b->shared_head);
        fn(b->private_head);
        fn(b->classifier);
    }
}

}  // namespace

void save_encoder(const EncoderParams& params, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kEncoderMagic, 8);
    put_u64_le(out, params.image.hidden.size());
    put_u64_le(out, params.text.hidden.size());
    put_u64_le(out, params.shared_dim);
    put_u64_le(out, params.private_dim);
    put_u64_le(out, params.num_classes);
    for_each_affine(params, [&](const Affine& a) { write_affine(out, a); });
    if (!out) throw IoError("write failed: " + path.string());
}

EncoderParams load_encoder(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw MissingFileError("no such file: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kEncoderMagic, 8) != 0) {
        throw IoError(path.string() + ": bad encoder magic");
    }
    EncoderParams p;
    const std::uint64_t image_hidden = get_u64_le(in);
    const std::uint64_t text_hidden = get_u64_le(in);
    p.shared_dim = get_u64_le(in);
    p.private_dim = get_u64_le(in);
    p.num_classes = get_u64_le(in);
    if (!in) throw IoError(path.string() + ": truncated encoder header");
    auto read_branch = [&](std::uint64_t hidden_count) {
        Branch b;
        for (std::uint64_t l = 0; l < hidden_count; ++l) b.hidden.push_back(read_affine(in));
        b.shared_head = read_affine(in);
        b.private_head = read_affine(in);
        b.classifier = read_affine(in);
        return b;
    };
    p.image = read_branch(image_hidden);
    p.text = read_branch(text_hidden);
    for (const Branch* b : {&p.image, &p.text}) {
        if (b->shared_head.w.rows() != p.shared_dim ||
            b->private_head.w.rows() != p.private_dim ||
            b->classifier.w.rows() != p.num_classes ||
            b->classifier.w.cols() != p.shared_dim + p.private_dim) {
            throw IoError(path.string() + ": encoder blocks disagree with the header");
        }
    }
    return p;
}

std::vector<std::pair<std::size_t, std::size_t>> layer_shapes(const EncoderParams& params) {
    std::vector<std::pair<std::size_t, std::size_t>> shapes;
    for_each_affine(params, [&](const Affine& a) {
        shapes.emplace_back(a.w.rows(), a.w.cols());
        shapes.emplace_back(a.b.size(), 1);
    });
    return shapes;
}

}  // namespace spdq::net
