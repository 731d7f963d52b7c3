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

#include "samlp/adam.hpp"

#include <cmath>

#include "samlp/errors.hpp"

namespace samlp {

AdamState make_adam_state(std::span<Parameter* const> params, AdamConfig config) {
  AdamState state;
  state.config = config;
  for (const Parameter* p : params) {
    state.first_moment.emplace_back(p->value.rows(), p->value.cols());
    state.second_moment.emplace_back(p->value.rows(), p->value.cols());
  }
  return state;
}

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  if (params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " params but state for " +
                         std::to_string(state.first_moment.size()));
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    if (!p.grad.same_shape(p.value) || !m.same_shape(p.value) || !v.same_shape(p.value)) {
      throw DimensionError("adam_step: parameter " + std::to_string(i) + " shape " +
                           p.value.shape_str() + " does not match its grad/moments");
    }
    auto w = p.value.data();
    const auto g = p.grad.data();
    auto md = m.data();
    auto vd = v.data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      md[k] = c.beta1 * md[k] + (1.0 - c.beta1) * g[k];
      vd[k] = c.beta2 * vd[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double mhat = md[k] / bc1;
      const double vhat = vd[k] / bc2;
      if (c.weight_decay != 0.0) w[k] -= c.lr * c.weight_decay * w[k];
      w[k] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

}  // namespace samlp
