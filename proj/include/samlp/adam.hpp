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
#include <vector>

#include "samlp/tensor.hpp"

namespace samlp {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Decoupled: each step shrinks parameters by lr * weight_decay.
  double weight_decay = 0.0;
};

struct AdamState {
  AdamConfig config;
  long step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

/// Moments sized to match `params`.
AdamState make_adam_state(std::span<Parameter* const> params, AdamConfig config);

/// One bias-corrected Adam update using each parameter's accumulated grad.
/// Throws DimensionError if the state does not match the parameter list.
void adam_step(std::span<Parameter* const> params, AdamState& state);

/// Convenience owner of a parameter list plus its Adam state.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Parameter*> params, AdamConfig config)
      : params_(std::move(params)), state_(make_adam_state(params_, config)) {}

  void zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
  }
  void step() { adam_step(params_, state_); }
  const AdamState& state() const { return state_; }

 private:
  std::vector<Parameter*> params_;
  AdamState state_;
};

}  // namespace samlp
