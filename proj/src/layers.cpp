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

#include "samlp/layers.hpp"

#include <cmath>

#include "samlp/ops.hpp"

namespace samlp {

LinearLayer::LinearLayer(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  std::uniform_real_distribution<double> u(-bound, bound);
  Tensor w(in_dim, out_dim);
  for (double& v : w.data()) v = u(rng);
  Tensor b(1, out_dim);
  for (double& v : b.data()) v = u(rng);
  weight = Parameter(std::move(w));
  bias = Parameter(std::move(b));
}

Var LinearLayer::forward(Tape& tape, Var x, bool trainable) {
  return ops::affine(x, leaf(tape, weight, trainable), leaf(tape, bias, trainable));
}

Var LinearLayer::forward_sparse(Tape& tape, const SparseRows& rows, bool trainable) {
  return ops::add_row(ops::spmm(rows, leaf(tape, weight, trainable)), leaf(tape, bias, trainable));
}

void LinearLayer::collect(const std::string& prefix, std::vector<NamedParameter>& out) {
  out.push_back({prefix + ".weight", &weight});
  out.push_back({prefix + ".bias", &bias});
}

Var LayerNormParams::forward(Tape& tape, Var x, bool trainable) {
  return ops::layer_norm(x, leaf(tape, gamma, trainable), leaf(tape, beta, trainable));
}

void LayerNormParams::collect(const std::string& prefix, std::vector<NamedParameter>& out) {
  out.push_back({prefix + ".gamma", &gamma});
  out.push_back({prefix + ".beta", &beta});
}

Var activate(Var x, Activation act) {
  switch (act) {
    case Activation::kRelu:
      return ops::relu(x);
    case Activation::kIdentity:
      return x;
  }
  return x;
}

}  // namespace samlp
