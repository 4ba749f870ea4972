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
#include <utility>
#include <vector>

#include "spdq/matrix.hpp"
#include "spdq/mmd.hpp"

namespace spdq::net {

enum class Modality { image, text };

const char* modality_name(Modality m);
Modality modality_from_name(const std::string& name);
inline Modality other(Modality m) { return m == Modality::image ? Modality::text : Modality::image; }

/// y = w x + b, applied per column.
struct Affine {
    Matrix w;
    std::vector<double> b;
};

/// One modality network: tanh hidden layers feeding a tanh shared head and a
/// tanh private head, plus a linear classifier on the concatenation [s; r].
struct Branch {
    std::vector<Affine> hidden;
    Affine shared_head;
    Affine private_head;
    Affine classifier;

    std::size_t input_dim() const {
        return hidden.empty() ? shared_head.w.cols() : hidden[0].w.cols();
    }
};

struct EncoderConfig {
    std::size_t image_input_dim = 128;
    std::size_t text_input_dim = 64;
    std::vector<std::size_t> image_hidden{256, 256};
    std::vector<std::size_t> text_hidden{256, 256};
    std::size_t shared_dim = 256;
    std::size_t private_dim = 48;
};

struct EncoderParams {
    Branch image;
    Branch text;
    std::size_t shared_dim = 0;
    std::size_t private_dim = 0;
    std::size_t num_classes = 0;

    const Branch& branch(Modality m) const { return m == Modality::image ? image : text; }
    Branch& branch(Modality m) { return m == Modality::image ? image : text; }
};

/// Symmetric uniform init with limit sqrt(6 / (fan_in + fan_out)); biases zero.
EncoderParams init_params(const EncoderConfig& cfg, std::size_t num_classes, std::uint64_t seed);

struct EncoderOutput {
    Matrix s;       // shared_dim x batch, entries in (-1, 1)
    Matrix r;       // private_dim x batch, entries in (-1, 1)
    Matrix logits;  // num_classes x batch
};

EncoderOutput forward(const EncoderParams& params, const Matrix& x, Modality modality);

/// Forward pass keeping every activation needed by the backward pass.
struct ForwardCache {
    std::vector<Matrix> act;  // act[0] is the input, act[l] the l-th hidden output
    Matrix s, r, h, logits;   // h = [s; r]
};

ForwardCache forward_cached(const Branch& branch, const Matrix& x);

/// Mean over batch and classes of the stabilized sigmoid cross entropy
/// -[l log sig(z) + (1-l) log(1 - sig(z))]. Labels must be exactly 0 or 1.
/// When grad is non-null it receives d(loss)/d(logits) = (sig(z) - l)/count.
double class_loss(const Matrix& logits, const Matrix& labels, Matrix* grad = nullptr);

/// Aligned batch positions of one class; image and text samples at the same
/// position form a pair, consecutive positions form the quad-tuples of the
/// linear estimator.
struct ClassSlice {
    std::size_t class_index = 0;
    std::vector<std::size_t> cols;
};

struct L1Result {
    double value = 0.0;
    Matrix ds_i, dr_i, ds_t, dr_t;
    std::size_t skipped_classes = 0;  // slices with fewer than 2 aligned pairs
};

/// Per-class shared-subspace discrepancy minus private-subspace discrepancy,
/// summed over classes, with gradients for every sample column.
L1Result l1_loss(const Matrix& s_i, const Matrix& r_i, const Matrix& s_t, const Matrix& r_t,
                 const std::vector<ClassSlice>& slices, const mmd::KernelBank& bank_shared,
                 const mmd::KernelBank& bank_private);

struct AffineGrad {
    Matrix dw;
    std::vector<double> db;
};

struct BranchGrads {
    std::vector<AffineGrad> hidden;
    AffineGrad shared_head;
    AffineGrad private_head;
    AffineGrad classifier;
};

struct Gradients {
    BranchGrads image;
    BranchGrads text;
};

/// Fixed quantizer state entering the alignment term; dictionaries and codes
/// do not appear because they are constant with respect to the networks.
struct QuantState {
    const Matrix* c_i = nullptr;
    const Matrix* c_t = nullptr;
    const Matrix* z = nullptr;
};

struct BatchInputs {
    const Matrix* x_i = nullptr;
    const Matrix* x_t = nullptr;
    const Matrix* labels = nullptr;
    const std::vector<ClassSlice>* slices = nullptr;
};

struct LossTerms {
    double l1 = 0.0;
    double l2 = 0.0;
    double align = 0.0;  // sum_n ||C_i s_in - Z l_n||^2 + ||C_t s_tn - Z l_n||^2

    double total(double alpha, double lambda) const { return l1 + alpha * l2 + lambda * align; }
};

/// Batch objective l1 + alpha*l2 + lambda*align without gradients; the
/// finite-difference tests probe exactly this function.
LossTerms batch_objective(const EncoderParams& params, const BatchInputs& batch,
                          const QuantState* quant, const mmd::KernelBank& bank_shared,
                          const mmd::KernelBank& bank_private);

struct BackwardResult {
    Gradients grads;
    LossTerms losses;
    std::size_t skipped_classes = 0;
};

/// Analytic gradients of the batch objective with respect to every weight and
/// bias of both branches. `quant` is required whenever lambda > 0.
BackwardResult backward(const EncoderParams& params, const BatchInputs& batch,
                        const QuantState* quant, double alpha, double lambda,
                        const mmd::KernelBank& bank_shared, const mmd::KernelBank& bank_private);

/// Single-file persistence: magic "SPDQENC1", five 64-bit little-endian
/// counts (image hidden layers, text hidden layers, shared_dim, private_dim,
/// num_classes), then consecutive binary matrix blocks in a fixed order (per
/// branch: hidden w/b pairs, shared w/b, private w/b, classifier w/b; image
/// branch first). Bias vectors are stored as n x 1 matrices.
void save_encoder(const EncoderParams& params, const std::filesystem::path& path);
EncoderParams load_encoder(const std::filesystem::path& path);

/// Shapes of every affine in serialization order, used by the manifest.
std::vector<std::pair<std::size_t, std::size_t>> layer_shapes(const EncoderParams& params);

}  // namespace spdq::net
