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

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>

#include "samlp/tensor.hpp"

namespace samlp {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Reverse-mode tape for one forward pass. Ops append nodes in execution
/// order; backward() replays their closures in reverse. Values stay at stable
/// addresses for the tape's lifetime. A tape built with grad disabled records
/// values only, which is what inference uses.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const noexcept { return grad_enabled_; }

  Var constant(Tensor value);
  /// Non-owning leaf; `value` must outlive the tape.
  Var constant_ref(const Tensor& value);
  /// Learnable leaf; backward() accumulates into `p.grad`. When grad is
  /// disabled this is equivalent to constant_ref(p.value).
  Var param(Parameter& p);

  const Tensor& value(Var v) const;
  /// Gradient accumulated for `v` by the last backward(); empty if none reached it.
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1x1.
  void backward(Var loss);

  /// Appends an op result. `fn` is dropped when no input requires grad.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  /// Zero-initialized on first access; the param's own grad for param leaves.
  Tensor& grad_slot(std::uint32_t id);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor own;
    const Tensor* ref = nullptr;
    Parameter* param = nullptr;
    bool requires_grad = false;
    BackwardFn backward;
    Tensor grad;
  };

  Var push(Node node);

  bool grad_enabled_;
  std::deque<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->value(*this); }

}  // namespace samlp
