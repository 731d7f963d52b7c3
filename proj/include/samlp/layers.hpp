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

#include <string>
#include <vector>

#include "samlp/autograd.hpp"
#include "samlp/random.hpp"
#include "samlp/tensor.hpp"

namespace samlp {

/// y = x W + b with W (in x out) and b (1 x out).
struct LinearLayer {
  LinearLayer() = default;
  /// Weights and bias drawn from U(-1/sqrt(in), 1/sqrt(in)).
  LinearLayer(std::size_t in_dim, std::size_t out_dim, Rng& rng);

  std::size_t in_dim() const { return weight.value.rows(); }
  std::size_t out_dim() const { return weight.value.cols(); }

  /// With trainable == false the weights enter the tape as constants.
  Var forward(Tape& tape, Var x, bool trainable = true);
  /// First layer applied to sparse rows: spmm(rows, W) + b.
  Var forward_sparse(Tape& tape, const SparseRows& rows, bool trainable = true);

  void collect(const std::string& prefix, std::vector<NamedParameter>& out);

  Parameter weight;
  Parameter bias;
};

struct LayerNormParams {
  LayerNormParams() = default;
  explicit LayerNormParams(std::size_t dim)
      : gamma(Tensor(1, dim, 1.0)), beta(Tensor(1, dim, 0.0)) {}

  Var forward(Tape& tape, Var x, bool trainable = true);
  void collect(const std::string& prefix, std::vector<NamedParameter>& out);

  Parameter gamma;
  Parameter beta;
};

/// Hidden-layer activation. The models default to ReLU.
enum class Activation { kRelu, kIdentity };

Var activate(Var x, Activation act);

/// Param leaf, or a constant view when frozen.
inline Var leaf(Tape& tape, Parameter& p, bool trainable) {
  return trainable ? tape.param(p) : tape.constant_ref(p.value);
}

}  // namespace samlp
