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

#include "samlp/autograd.hpp"

#include "samlp/errors.hpp"

namespace samlp {

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Tensor value) {
  Node n;
  n.own = std::move(value);
  return push(std::move(n));
}

Var Tape::constant_ref(const Tensor& value) {
  Node n;
  n.ref = &value;
  return push(std::move(n));
}

Var Tape::param(Parameter& p) {
  Node n;
  n.ref = &p.value;
  if (grad_enabled_) {
    n.param = &p;
    n.requires_grad = true;
    if (!p.grad.same_shape(p.value)) p.grad = Tensor(p.value.rows(), p.value.cols());
  }
  return push(std::move(n));
}

const Tensor& Tape::value(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.ref != nullptr ? *n.ref : n.own;
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.param != nullptr ? n.param->grad : n.grad;
}

bool Tape::requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

Tensor& Tape::grad_slot(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.param != nullptr) return n.param->grad;
  if (n.grad.empty() && !(n.ref ? n.ref->empty() : n.own.empty())) {
    const Tensor& v = n.ref != nullptr ? *n.ref : n.own;
    n.grad = Tensor(v.rows(), v.cols());
  }
  return n.grad;
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  Node n;
  n.own = std::move(value);
  if (grad_enabled_) {
    for (const Var& in : inputs) {
      if (in.tape != this) throw Error("tape: op input recorded on a different tape");
      n.requires_grad = n.requires_grad || nodes_[in.id].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(fn);
  }
  return push(std::move(n));
}

void Tape::backward(Var loss) {
  if (!grad_enabled_) throw Error("tape: backward() on a tape with grad disabled");
  const Tensor& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw DimensionError("backward() needs a 1x1 loss, got " + lv.shape_str());
  }
  if (!nodes_[loss.id].requires_grad) return;
  grad_slot(loss.id)(0, 0) += 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad);
  }
}

}  // namespace samlp
