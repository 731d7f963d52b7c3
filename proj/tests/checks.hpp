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

// Gradient and oracle suites shared by the unit tests and the acceptance run.

#include <string>
#include <vector>

#include "samlp/distill.hpp"
#include "samlp/ops.hpp"
#include "samlp/student.hpp"
#include "samlp/teacher.hpp"
#include "test_util.hpp"

namespace samlp::test {

struct CheckResult {
  std::string name;
  double error = 0.0;
};

inline constexpr double kOpGradTol = 1e-4;
inline constexpr double kModelGradTol = 1e-3;
inline constexpr double kOracleTol = 1e-10;
inline constexpr double kMixOracleTol = 1e-12;

/// Fixed random bilinear read-out u^T y v, so every output entry gets a
/// distinct nonzero weight.
struct Readout {
  Tensor u, v;
  Readout(std::size_t rows, std::size_t cols, Rng& rng)
      : u(random_tensor(1, rows, rng)), v(random_tensor(cols, 1, rng)) {}
  Var operator()(Var y) const {
    Tape& t = *y.tape;
    return ops::matmul(ops::matmul(t.constant_ref(u), y), t.constant_ref(v));
  }
};

inline std::vector<CheckResult> op_gradchecks() {
  Rng rng = make_rng(11, 0);
  std::vector<CheckResult> out;
  auto run = [&](const std::string& name, const LossFn& f, std::vector<Parameter*> ps) {
    out.push_back({name, gradcheck(f, ps)});
  };
  const std::size_t n = 5, k = 4, m = 3;
  Parameter a(random_tensor(n, k, rng)), b(random_tensor(k, m, rng)), c(random_tensor(n, k, rng));
  Parameter bias(random_tensor(1, k, rng)), col(random_tensor(n, 1, rng));
  Parameter gamma(random_tensor(1, k, rng)), beta(random_tensor(1, k, rng));
  const Readout r_nm(n, m, rng), r_nk(n, k, rng), r_n2k(n, 2 * k, rng);
  const SparseRows sp = random_sparse(n, n, 0.5, rng);
  const std::vector<Index> pick{3, 0, 3, 1};
  const Readout r_pick(pick.size(), k, rng);
  const std::vector<Index> labels{0, 2, 1, 3, 2};
  const Tensor teacher = random_probs(n, k, rng);
  const Tensor teacher2 = random_probs(n, k, rng);

  run("matmul", [&](Tape& t) { return r_nm(ops::matmul(t.param(a), t.param(b))); }, {&a, &b});
  run("spmm", [&](Tape& t) { return r_nk(ops::spmm(sp, t.param(a))); }, {&a});
  run("add", [&](Tape& t) { return r_nk(ops::add(t.param(a), t.param(c))); }, {&a, &c});
  run("add_row", [&](Tape& t) { return r_nk(ops::add_row(t.param(a), t.param(bias))); },
      {&a, &bias});
  run("affine",
      [&](Tape& t) { return r_nm(ops::affine(t.param(c), t.param(b), t.constant(Tensor(1, m, 0.3)))); },
      {&c, &b});
  run("scale", [&](Tape& t) { return r_nk(ops::scale(t.param(a), -1.7)); }, {&a});
  run("one_minus", [&](Tape& t) { return r_nk(ops::one_minus(t.param(a))); }, {&a});
  run("mul_rowwise", [&](Tape& t) { return r_nk(ops::mul_rowwise(t.param(a), t.param(col))); },
      {&a, &col});
  run("concat_cols", [&](Tape& t) { return r_n2k(ops::concat_cols(t.param(a), t.param(c))); },
      {&a, &c});
  run("gather_rows", [&](Tape& t) { return r_pick(ops::gather_rows(t.param(a), pick)); }, {&a});
  run("relu", [&](Tape& t) { return r_nk(ops::relu(t.param(a))); }, {&a});
  run("sigmoid", [&](Tape& t) { return r_nk(ops::sigmoid(t.param(a))); }, {&a});
  run("softmax_rows", [&](Tape& t) { return r_nk(ops::softmax_rows(t.param(a))); }, {&a});
  run("layer_norm",
      [&](Tape& t) { return r_nk(ops::layer_norm(t.param(a), t.param(gamma), t.param(beta))); },
      {&a, &gamma, &beta});
  run("dropout",
      [&](Tape& t) {
        Rng d = make_rng(5, 5);
        return r_nk(ops::dropout(t.param(a), 0.4, true, d));
      },
      {&a});
  run("cross_entropy",
      [&](Tape& t) { return ops::cross_entropy(ops::softmax_rows(t.param(a)), labels); }, {&a});
  run("kl_div", [&](Tape& t) { return ops::kl_div(ops::softmax_rows(t.param(a)), teacher); },
      {&a});
  run("cross_entropy_logits",
      [&](Tape& t) { return ops::cross_entropy_logits(t.param(a), labels); }, {&a});
  run("kl_div_logits", [&](Tape& t) { return ops::kl_div_logits(t.param(a), teacher); }, {&a});
  run("distill_loss",
      [&](Tape& t) {
        return distill_loss(ops::softmax_rows(t.param(a)), ops::softmax_rows(t.param(c)),
                            teacher, teacher2, 0.3);
      },
      {&a, &c});
  run("distill_loss_logits",
      [&](Tape& t) { return distill_loss_logits(t.param(a), t.param(c), teacher, teacher2, 0.3); },
      {&a, &c});
  return out;
}

inline std::vector<CheckResult> model_gradchecks() {
  Rng rng = make_rng(12, 0);
  std::vector<CheckResult> out;
  const std::size_t n = 6, d = 4, c = 3, h = 5;
  const Tensor x = random_tensor(n, d, rng);
  const SparseRows adj = random_sparse(n, n, 0.4, rng, true);
  const SparseRows mean = [&] {
    std::vector<std::vector<std::pair<Index, double>>> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto cols = adj.row_cols(i);
      for (Index j : cols) rows[i].push_back({j, 1.0 / static_cast<double>(cols.size())});
    }
    return SparseRows::from_row_lists(n, rows);
  }();
  const std::vector<Index> labels{0, 1, 2, 0, 1, 2};
  const Tensor teacher = random_probs(n, c, rng);

  {
    Rng init = make_rng(1, 1);
    SageParams sage(SageConfig{.in_dim = d, .hidden = h, .num_classes = c, .num_layers = 2,
                               .dropout = 0.3, .residual = false},
                    init);
    auto loss = [&](Tape& t) {
      Rng dr = make_rng(2, 2);
      return ops::cross_entropy_logits(sage_forward(sage, t, t.constant_ref(x), mean, true, dr),
                                       labels);
    };
    out.push_back({"sage", gradcheck(loss, raw(sage.parameters()))});
  }
  {
    Rng init = make_rng(1, 3);
    SaMlp s(StudentConfig{.in_dim = d, .struct_cols = n, .hidden = h, .num_classes = c,
                          .dropout = 0.2},
            init);
    s.add_latent_encoder(init);
    auto explicit_loss = [&](Tape& t) {
      Rng dr = make_rng(3, 3);
      StudentOptions o{.training = true, .rng = &dr};
      const auto tr = samlp_forward(s, t, t.constant_ref(x), StructureSource::explicit_rows(adj), o);
      return ops::add(ops::cross_entropy_logits(tr.logits, labels),
                      ops::kl_div_logits(tr.logits, teacher));
    };
    out.push_back({"samlp_explicit", gradcheck(explicit_loss, raw(s.base_parameters()))});
    auto latent_loss = [&](Tape& t) {
      Rng dr = make_rng(4, 4);
      StudentOptions o{.training = true, .rng = &dr};
      const auto tr = samlp_forward(s, t, t.constant_ref(x), StructureSource::latent(), o);
      return ops::kl_div_logits(tr.logits, teacher);
    };
    out.push_back({"samlp_latent", gradcheck(latent_loss, raw(s.parameters()))});
  }
  {
    Rng init = make_rng(1, 1);
    FeatureMlp mlp(d, h, c, init, 0.2);
    std::vector<NamedParameter> ps;
    mlp.collect("mlp", ps);
    auto loss = [&](Tape& t) {
      Rng dr = make_rng(5, 5);
      return ops::cross_entropy_logits(glnn_forward(mlp, t, t.constant_ref(x), 0.2, true, dr),
                                       labels);
    };
    out.push_back({"mlp", gradcheck(loss, raw(ps))});
  }
  return out;
}

/// Library kernels against the naive loops above.
inline std::vector<CheckResult> oracle_checks() {
  Rng rng = make_rng(13, 0);
  std::vector<CheckResult> out;
  const Tensor a = random_tensor(37, 19, rng), b = random_tensor(19, 23, rng);
  const Tensor at = random_tensor(19, 37, rng), bt = random_tensor(23, 19, rng);
  out.push_back({"matmul", max_abs_diff(kernels::matmul(a, b), naive_matmul(a, b))});
  out.push_back(
      {"matmul_tn", max_abs_diff(kernels::matmul_tn(at, b), naive_matmul(transpose(at), b))});
  out.push_back(
      {"matmul_nt", max_abs_diff(kernels::matmul_nt(a, bt), naive_matmul(a, transpose(bt)))});

  const SparseRows sp = random_sparse(29, 37, 0.2, rng);
  out.push_back({"spmm", max_abs_diff(kernels::spmm(sp, a), naive_matmul(sp.densify(), a))});

  const Tensor logits = random_tensor(31, 6, rng, 3.0);
  const Tensor sm = kernels::softmax_rows(logits);
  out.push_back({"softmax", max_abs_diff(sm, naive_softmax(logits))});

  std::vector<Index> labels(31);
  std::uniform_int_distribution<Index> cls(0, 5);
  for (auto& y : labels) y = cls(rng);
  const Tensor teacher = random_probs(31, 6, rng);
  {
    Tape t(false);
    const double ce = ops::cross_entropy(t.constant_ref(sm), labels).value()(0, 0);
    const double ce_l = ops::cross_entropy_logits(t.constant_ref(logits), labels).value()(0, 0);
    const double kl = ops::kl_div(t.constant_ref(sm), teacher).value()(0, 0);
    const double kl_l = ops::kl_div_logits(t.constant_ref(logits), teacher).value()(0, 0);
    const double ce_ref = naive_ce(naive_softmax(logits), labels);
    const double kl_ref = naive_kl(naive_softmax(logits), teacher);
    out.push_back({"cross_entropy", std::abs(ce - ce_ref)});
    out.push_back({"cross_entropy_logits", std::abs(ce_l - ce_ref)});
    out.push_back({"kl_div", std::abs(kl - kl_ref)});
    out.push_back({"kl_div_logits", std::abs(kl_l - kl_ref)});
  }
  return out;
}

/// Sparse mixing against densified mixing: row i of the mixed structure must
/// equal lambda * A[i] + (1 - lambda) * A[perm[i]] for every lambda tried.
inline std::vector<CheckResult> mix_oracle_checks() {
  Rng rng = make_rng(14, 0);
  std::vector<CheckResult> out;
  const std::size_t n = 17, cols = 40, d = 5, c = 3;
  const SparseRows rows = random_sparse(n, cols, 0.15, rng);
  const Tensor x = random_tensor(n, d, rng);
  const Tensor t = random_probs(n, c, rng);
  const Tensor dense = rows.densify();
  for (double lambda : {0.0, 0.13, 0.5, 0.87, 1.0}) {
    const auto perm = random_permutation(n, rng);
    const MixedBatch mb = mix_batch(x, rows, t, lambda, perm);
    Tensor ref_a(n, cols), ref_x(n, d), ref_t(n, c);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < cols; ++j)
        ref_a(i, j) = lambda * dense(i, j) + (1 - lambda) * dense(perm[i], j);
      for (std::size_t j = 0; j < d; ++j) ref_x(i, j) = lambda * x(i, j) + (1 - lambda) * x(perm[i], j);
      for (std::size_t j = 0; j < c; ++j) ref_t(i, j) = lambda * t(i, j) + (1 - lambda) * t(perm[i], j);
    }
    const double err = std::max({max_abs_diff(mb.rows_mixed.densify(), ref_a),
                                 max_abs_diff(mb.x_mixed, ref_x), max_abs_diff(mb.teacher_mixed, ref_t)});
    out.push_back({"mix lambda=" + std::to_string(lambda), err});
  }
  return out;
}

}  // namespace samlp::test
