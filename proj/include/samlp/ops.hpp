// Copyright 2026 The samlp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <span>

#include "samlp/autograd.hpp"
#include "samlp/random.hpp"
#include "samlp/tensor.hpp"

namespace samlp {

/// Clamp applied inside every log of a probability.
inline constexpr double kLogClamp = 1e-12;
inline constexpr double kLayerNormEps = 1e-5;

namespace kernels {

Tensor matmul(const Tensor& a, const Tensor& b);
/// a^T * b
Tensor matmul_tn(const Tensor& a, const Tensor& b);
/// a * b^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor spmm(const SparseRows& a, const Tensor& w);
void add_row_inplace(Tensor& x, const Tensor& bias);
void relu_inplace(Tensor& x);
Tensor softmax_rows(const Tensor& x);

}  // namespace kernels

// Differentiable ops. Each returns a node on the inputs' tape.
namespace ops {

Var matmul(Var a, Var b);
/// Sparse-dense product; gradient flows into `w` only. `a` must outlive the
/// tape's backward pass.
Var spmm(const SparseRows& a, Var w);
Var add(Var a, Var b);
/// x + bias, bias (1 x cols) broadcast over rows.
Var add_row(Var x, Var bias);
/// x W + b for a weight (in x out) and bias (1 x out).
Var affine(Var x, Var weight, Var bias);
Var scale(Var x, double s);
/// 1 - x
Var one_minus(Var x);
/// Multiplies row i of `x` by alpha(i, 0).
Var mul_rowwise(Var x, Var alpha);
/// [a || b] along columns.
Var concat_cols(Var a, Var b);
Var gather_rows(Var x, std::span<const Index> rows);

Var relu(Var x);
Var sigmoid(Var x);
Var softmax_rows(Var x);
Var layer_norm(Var x, Var gamma, Var beta, double eps = kLayerNormEps);
/// Inverted dropout. Returns `x` unchanged when !training or p == 0.
Var dropout(Var x, double p, bool training, Rng& rng);

/// Mean over rows of -ln max(probs[i, label_i], clamp).
Var cross_entropy(Var probs, std::span<const Index> labels);
/// Mean over rows of sum_j t_ij (ln t_ij - ln s_ij); gradient into `student`.
Var kl_div(Var student, const Tensor& teacher);

/// cross_entropy(softmax_rows(logits), labels) computed with log-sum-exp.
Var cross_entropy_logits(Var logits, std::span<const Index> labels);
/// kl_div(softmax_rows(logits), teacher) computed with log-sum-exp.
Var kl_div_logits(Var logits, const Tensor& teacher);

}  // namespace ops
}  // namespace samlp
