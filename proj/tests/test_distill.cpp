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

#include <doctest.h>

#include <sstream>

#include "checks.hpp"
#include "samlp/distill.hpp"
#include "samlp/errors.hpp"
#include "samlp/eval.hpp"

using namespace samlp;
using namespace samlp::test;

namespace {

struct Setup {
  Graph g;
  SplitAssignment split;
  explicit Setup(double homophily = 0.85, std::size_t n = 240) {
    SyntheticGraphConfig gc;
    gc.n = n;
    gc.homophily = homophily;
    gc.feature_signal = 0.5;
    gc.seed = 31;
    g = generate_synthetic(gc);
    split = make_split(g, {}, 0);
  }
  ScenarioPlan plan(const char* s, double r = 0.0) const { return build_scenario(g, split, s, r, 0); }
  TeacherOutput teacher(const ScenarioPlan& p) const {
    TeacherTrainConfig tc;
    tc.epochs = 40;
    return train_teacher(p, tc).output;
  }
  SaMlp student(const ScenarioPlan& p) const {
    Rng init = make_rng(0, 3);
    return SaMlp(StudentConfig{.in_dim = g.feature_dim(), .struct_cols = p.struct_cols(),
                               .hidden = 16, .num_classes = g.num_classes},
                 init);
  }
};

DistillConfig quick(std::size_t epochs = 15) {
  DistillConfig c;
  c.epochs = epochs;
  c.batch_size = 64;
  return c;
}

}  // namespace

TEST_CASE("mixing with lambda 1 and 0 returns the batch and its permutation") {
  Rng rng = make_rng(1);
  const Tensor x = random_tensor(6, 3, rng);
  const SparseRows rows = random_sparse(6, 10, 0.3, rng);
  const Tensor t = random_probs(6, 4, rng);
  const auto perm = random_permutation(6, rng);
  const MixedBatch one = mix_batch(x, rows, t, 1.0, perm);
  CHECK(one.x_mixed == x);
  CHECK(one.rows_mixed == rows);
  CHECK(one.teacher_mixed == t);
  const MixedBatch zero = mix_batch(x, rows, t, 0.0, perm);
  CHECK(zero.x_mixed == x.gather_rows(perm));
  CHECK(zero.rows_mixed == rows.select_rows(perm));
  CHECK(zero.teacher_mixed == t.gather_rows(perm));
}

TEST_CASE("mixed structure rows match densified mixing") {
  for (const auto& r : mix_oracle_checks()) {
    INFO(r.name);
    CHECK(r.error < kMixOracleTol);
  }
}

TEST_CASE("mixing validates its inputs") {
  Rng rng = make_rng(2);
  const Tensor x = random_tensor(3, 2, rng);
  const SparseRows rows(3, 4);
  const Tensor t = random_probs(3, 2, rng);
  CHECK_THROWS_AS(mix_batch(x, rows, t, 0.5, {0, 0, 1}), ConfigError);
  CHECK_THROWS_AS(mix_batch(x, rows, t, 0.5, {0, 1}), DimensionError);
  CHECK_THROWS_AS(mix_batch(x, rows, t, 1.5, {0, 1, 2}), ConfigError);
}

TEST_CASE("sampled lambda follows Beta(eta, eta)") {
  Rng rng = make_rng(3);
  const Tensor x(2, 1);
  const SparseRows rows(2, 1);
  const Tensor t(2, 1, 1.0);
  double sum = 0;
  std::size_t extreme = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double l = sample_mix(x, rows, t, 0.2, rng).lambda;
    sum += l;
    extreme += l < 0.1 || l > 0.9;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.02);
  // Beta(0.2, 0.2) puts most mass near the ends (about 0.64 outside [0.1, 0.9]).
  CHECK(static_cast<double>(extreme) / n > 0.55);
}

TEST_CASE("delta blends the plain and mixed KL terms") {
  Rng rng = make_rng(4);
  const Tensor s = random_probs(5, 3, rng), sm = random_probs(5, 3, rng);
  const Tensor t = random_probs(5, 3, rng), tm = random_probs(5, 3, rng);
  const double plain = naive_kl(s, t), mixed = naive_kl(sm, tm);
  for (double delta : {0.0, 0.3, 0.5, 1.0}) {
    Tape tape(false);
    const double v =
        distill_loss(tape.constant_ref(s), tape.constant_ref(sm), t, tm, delta).value()(0, 0);
    CHECK(v == doctest::Approx(delta * plain + (1 - delta) * mixed).epsilon(1e-12));
  }
  Tape tape(false);
  // delta = 1 is exactly plain KD, whatever the mixed branch holds.
  CHECK(distill_loss(tape.constant_ref(s), tape.constant_ref(sm), t, tm, 1.0).value()(0, 0) ==
        ops::kl_div(tape.constant_ref(s), t).value()(0, 0));
  const Tensor zs = random_tensor(5, 3, rng), zm = random_tensor(5, 3, rng);
  CHECK(distill_loss_logits(tape.constant_ref(zs), tape.constant_ref(zm), t, tm, 1.0).value()(0, 0) ==
        ops::kl_div_logits(tape.constant_ref(zs), t).value()(0, 0));
}

TEST_CASE("config validation") {
  DistillConfig c;
  CHECK_NOTHROW(c.validate());
  c.delta = 1.2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.eta = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("lambda = 1 makes every delta equal plain KD") {
  Rng rng = make_rng(5);
  const Tensor x = random_tensor(6, 3, rng);
  const SparseRows rows = random_sparse(6, 8, 0.3, rng);
  const Tensor t = random_probs(6, 4, rng);
  const Tensor z = random_tensor(6, 4, rng);
  const MixedBatch mb = mix_batch(x, rows, t, 1.0, random_permutation(6, rng));
  Tape tape(false);
  const Var s = tape.constant_ref(z);
  // The mixed forward sees identical inputs, so its logits are identical too.
  const double plain = distill_loss_logits(s, s, t, t, 1.0).value()(0, 0);
  for (double delta : {0.0, 0.25, 0.5, 0.75}) {
    CHECK(distill_loss_logits(s, s, t, mb.teacher_mixed, delta).value()(0, 0) == plain);
  }
}

TEST_CASE("delta = 1 training ignores eta") {
  Setup s;
  const auto plan = s.plan("trans");
  const auto t = s.teacher(plan);
  SaMlp c = s.student(plan), e = s.student(plan), f = s.student(plan);
  DistillConfig cc = quick(5), ce = quick(5), cf = quick(5);
  cc.delta = ce.delta = 1.0;
  ce.eta = 3.0;
  train_student_trans(c, &t, plan, cc);
  train_student_trans(e, &t, plan, ce);
  CHECK(hash_parameters(c.parameters()) == hash_parameters(e.parameters()));
  // With mixing switched on the run differs.
  cf.delta = 0.0;
  train_student_trans(f, &t, plan, cf);
  CHECK(hash_parameters(c.parameters()) != hash_parameters(f.parameters()));
}

TEST_CASE("with loss_weight 1 the fit labels do not matter") {
  Setup s;
  const auto plan = s.plan("trans");
  const auto t = s.teacher(plan);
  ScenarioPlan scrambled = plan;
  for (NodeId v : plan.fit_nodes) {
    auto& y = scrambled.train_graph.labels[plan.global_to_local[v]];
    y = (y + 1) % static_cast<Index>(s.g.num_classes);
  }
  DistillConfig c = quick(6);
  c.loss_weight = 1.0;
  SaMlp a = s.student(plan), b = s.student(plan);
  const auto ra = train_student_trans(a, &t, plan, c);
  const auto rb = train_student_trans(b, &t, scrambled, c);
  CHECK(hash_parameters(a.parameters()) == hash_parameters(b.parameters()));
  for (std::size_t i = 0; i < ra.log.size(); ++i) CHECK(ra.log[i].kd_loss == rb.log[i].kd_loss);
}

TEST_CASE("student training is deterministic and logs every epoch") {
  Setup s;
  const auto plan = s.plan("trans");
  const auto t = s.teacher(plan);
  SaMlp a = s.student(plan), b = s.student(plan);
  const auto ra = train_student_trans(a, &t, plan, quick(8));
  train_student_trans(b, &t, plan, quick(8));
  CHECK(hash_parameters(a.parameters()) == hash_parameters(b.parameters()));
  CHECK(ra.log.size() == 8);
  std::stringstream ss;
  write_metrics_csv(ss, ra);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "epoch,ce_loss,kd_loss,kd_mix_loss,val_acc");
}

TEST_CASE("distilled SA-MLP learns a homophilous graph") {
  Setup s(0.9, 400);
  const auto plan = s.plan("trans");
  const auto t = s.teacher(plan);
  SaMlp m = s.student(plan);
  train_student_trans(m, &t, plan, quick(60));
  const auto in = student_inputs(s.g, plan, plan.test_nodes);
  const double acc =
      evaluate(student_predict(m, in, StudentPath::kExplicit), s.g.labels, plan.test_nodes,
               s.g.num_classes).accuracy;
  CHECK(acc > 0.7);
}

TEST_CASE("inductive training never reads held-out nodes") {
  Setup s;
  const auto plan = s.plan("ind_with_connection");
  const auto t = s.teacher(plan);
  NodeAccessGuard guard(plan);
  SaMlp m = s.student(plan);
  train_student_ind(m, &t, plan, quick(4), &guard);
  train_stage2(m, t, plan, quick(4), &guard);
  Rng init = make_rng(1);
  FeatureMlp mlp(s.g.feature_dim(), 8, s.g.num_classes, init);
  train_mlp(mlp, &t, plan, quick(4), &guard);
  CHECK(guard.total_touches() > 0);
  for (NodeId v = 0; v < s.g.num_nodes(); ++v) {
    if (plan.forbidden[v]) CHECK_FALSE(guard.touched()[v]);
  }
}

TEST_CASE("soft labels for held-out nodes abort inductive training") {
  Setup s;
  const auto trans = s.plan("trans");
  const auto ind = s.plan("ind_with_connection");
  const auto leaky = s.teacher(trans);
  SaMlp m = s.student(ind);
  CHECK_THROWS_AS(train_student_ind(m, &leaky, ind, quick(1)), LeakageError);
  CHECK_THROWS_AS(train_stage2(m, leaky, ind, quick(1)), LeakageError);
  // A scenario mismatch is a configuration error, not a leak.
  SaMlp w = s.student(trans);
  CHECK_THROWS_AS(train_student_ind(w, nullptr, trans, quick(1)), ConfigError);

  // Missing coverage is rejected as well.
  TeacherOutput partial = s.teacher(ind);
  partial.nodes.pop_back();
  partial.probs = partial.probs.gather_rows([&] {
    std::vector<Index> keep(partial.nodes.size());
    for (Index i = 0; i < keep.size(); ++i) keep[i] = i;
    return keep;
  }());
  CHECK_THROWS_AS(train_student_ind(m, &partial, ind, quick(1)), ConfigError);
}

TEST_CASE("stage 2 leaves the stage-1 weights untouched") {
  Setup s;
  const auto plan = s.plan("ind_with_connection");
  const auto t = s.teacher(plan);
  SaMlp m = s.student(plan);
  train_student_ind(m, &t, plan, quick(5));
  const auto before = hash_parameters(m.base_parameters());
  CHECK_FALSE(m.latent_encoder.has_value());
  train_stage2(m, t, plan, quick(5));
  REQUIRE(m.latent_encoder.has_value());
  const auto latent_before = [&] {
    Rng init = make_rng(0, 0x1a7e);
    LinearLayer l(s.g.feature_dim(), 16, init);
    std::vector<NamedParameter> ps;
    l.collect("latent", ps);
    return hash_parameters(ps);
  }();
  CHECK(hash_parameters(m.base_parameters()) == before);
  CHECK(hash_parameters(m.latent_parameters()) != latent_before);
}

TEST_CASE("routing sends empty rows to the latent path") {
  Setup s;
  const auto plan = s.plan("mixed_ind", 0.5);
  Rng init = make_rng(5);
  SaMlp m = s.student(plan);
  m.add_latent_encoder(init);
  const auto in = student_inputs(s.g, plan, plan.test_nodes);
  const Tensor routed = route_mixed_inference(m, in.x, in.rows);
  const Tensor expl = samlp_predict(m, in.x, StructureSource::explicit_rows(in.rows));
  const Tensor lat = samlp_predict(m, in.x, StructureSource::latent());
  std::size_t empty = 0;
  for (std::size_t i = 0; i < in.rows.n_rows(); ++i) {
    const Tensor& ref = in.rows.row_empty(i) ? lat : expl;
    empty += in.rows.row_empty(i);
    for (std::size_t j = 0; j < routed.cols(); ++j) CHECK(routed(i, j) == ref(i, j));
  }
  CHECK(empty > 0);
  CHECK(empty < in.rows.n_rows());
  SaMlp no_latent = s.student(plan);
  CHECK_THROWS_AS(route_mixed_inference(no_latent, in.x, in.rows), ConfigError);
}

TEST_CASE("without feature signal the MLP baseline is at chance") {
  SyntheticGraphConfig gc;
  gc.n = 1200;
  gc.c = 4;
  gc.feature_signal = 0.0;
  gc.seed = 13;
  const Graph g = generate_synthetic(gc);
  const auto split = make_split(g, {}, 0);
  const auto plan = build_scenario(g, split, "trans", 0.0, 0);
  Rng init = make_rng(0, 1);
  FeatureMlp m(g.feature_dim(), 32, g.num_classes, init);
  train_mlp(m, nullptr, plan, quick(30));
  const double acc = evaluate(mlp_predict(m, g.features.gather_rows(plan.test_nodes)), g.labels,
                              plan.test_nodes, g.num_classes).accuracy;
  CHECK(std::abs(acc - 0.25) <= 0.05);
}
