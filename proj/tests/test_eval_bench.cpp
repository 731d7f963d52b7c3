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

#include "samlp/bench.hpp"
#include "samlp/errors.hpp"
#include "samlp/eval.hpp"
#include "samlp/experiment.hpp"
#include "test_util.hpp"

using namespace samlp;
using namespace samlp::test;

TEST_CASE("one-hot predictions score 1 and uniform ones follow the tie rule") {
  const std::vector<Index> labels{0, 1, 0, 0, 1};
  const std::vector<NodeId> nodes{0, 1, 2, 3, 4};
  Tensor onehot(5, 2);
  for (std::size_t i = 0; i < 5; ++i) onehot(i, labels[i]) = 1.0;
  CHECK(evaluate(onehot, labels, nodes, 2).accuracy == 1.0);
  const EvalReport u = evaluate(Tensor(5, 2, 0.5), labels, nodes, 2);
  CHECK(u.accuracy == doctest::Approx(3.0 / 5.0));
  CHECK(u.per_class_accuracy == std::vector<double>{1.0, 0.0});
  CHECK_THROWS_AS(evaluate(Tensor(0, 2), labels, {}, 2), ConfigError);
  CHECK_THROWS_AS(evaluate(Tensor(4, 2), labels, nodes, 2), DimensionError);
}

TEST_CASE("accuracy agrees with a scalar loop") {
  Rng rng = make_rng(41);
  const std::size_t n = 300, c = 5;
  std::vector<Index> labels(n);
  std::uniform_int_distribution<Index> cls(0, c - 1);
  for (auto& y : labels) y = cls(rng);
  std::vector<NodeId> nodes;
  for (NodeId v = 0; v < n; v += 3) nodes.push_back(v);
  const Tensor probs = random_probs(nodes.size(), c, rng);
  std::size_t hits = 0;
  std::vector<std::size_t> count(c, 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j)
      if (probs(i, j) > probs(i, best)) best = j;
    hits += best == labels[nodes[i]];
    ++count[labels[nodes[i]]];
  }
  const EvalReport r = evaluate(probs, labels, nodes, c);
  CHECK(r.accuracy == static_cast<double>(hits) / static_cast<double>(nodes.size()));
  CHECK(r.per_class_count == count);
  std::size_t total = 0;
  for (auto k : r.per_class_count) total += k;
  CHECK(total == r.n_eval);
}

TEST_CASE("aggregate uses the mean and sample deviation per group") {
  std::vector<EvalReport> rs;
  for (double a : {0.5, 0.7, 0.9}) rs.push_back({"trans", 0.0, "mlp", 0, a});
  rs.push_back({"trans", 0.0, "samlp", 0, 0.4});
  const auto agg = aggregate(rs);
  REQUIRE(agg.size() == 2);
  CHECK(agg[0].model == "mlp");
  CHECK(agg[0].n_seeds == 3);
  CHECK(agg[0].mean == doctest::Approx((0.5 + 0.7 + 0.9) / 3));
  CHECK(agg[0].std == doctest::Approx(0.2));
  CHECK(agg[1].std == 0.0);
  std::stringstream ss;
  write_reports_csv(ss, rs, agg);
  CHECK(ss.str().find("trans,0.000000,mlp,mean,0.700000,0.200000,3,") != std::string::npos);
}

TEST_CASE("alpha histogram bins and gate extremes") {
  const std::vector<double> a{0.0, 0.049, 0.05, 0.5, 1.0};
  const AlphaHistogram h = alpha_histogram(a);
  CHECK(h.edges.size() == 21);
  CHECK(h.total() == a.size());
  CHECK(h.counts[0] == 2);
  CHECK(h.counts[1] == 1);
  CHECK(h.counts[10] == 1);
  CHECK(h.counts[19] == 1);
  CHECK_THROWS_AS(alpha_histogram(std::vector<double>{1.2}), NumericError);

  SyntheticGraphConfig gc;
  gc.n = 100;
  const Graph g = generate_synthetic(gc);
  const auto plan = build_scenario(g, make_split(g, {}, 0), "trans", 0.0, 0);
  Rng init = make_rng(1);
  SaMlp s(StudentConfig{.in_dim = g.feature_dim(), .struct_cols = plan.struct_cols(), .hidden = 8,
                        .num_classes = g.num_classes},
          init);
  s.gate.bias.value.fill(-10.0);
  s.gate.weight.value.fill(0.0);
  const AlphaHistogram low = export_alpha(s, g, plan, {});
  CHECK(low.counts[0] == plan.test_nodes.size());
  CHECK(low.total() == plan.test_nodes.size());
}

TEST_CASE("latency harness reports ordered statistics") {
  LatencyConfig cfg{.warmup = 1, .reps = 31};
  int calls = 0;
  const LatencyReport r = time_inference(
      "dummy", 4,
      [&] {
        ++calls;
        return Tensor(4, 2, 1.0);
      },
      cfg);
  CHECK(calls == 32);
  CHECK(r.median_ms > 0);
  CHECK(r.p95_ms >= r.median_ms);
  CHECK(r.nodes_per_second > 0);
  // A call that drops queries or produces NaN is rejected.
  CHECK_THROWS_AS(time_inference("bad", 4, [] { return Tensor(3, 2); }, cfg), NumericError);
  CHECK_THROWS_AS(time_inference("nan", 1, [] { return Tensor(1, 1, std::nan("")); }, cfg),
                  NumericError);
  CHECK_THROWS_AS(time_inference("none", 1, [] { return Tensor(1, 1); }, {.reps = 0}),
                  ConfigError);
}

TEST_CASE("model benchmarks run on the same queries") {
  SyntheticGraphConfig gc;
  gc.n = 200;
  const Graph g = generate_synthetic(gc);
  Rng init = make_rng(2);
  SageParams t(SageConfig{.in_dim = g.feature_dim(), .hidden = 8, .num_classes = g.num_classes},
               init);
  SaMlp s(StudentConfig{.in_dim = g.feature_dim(), .struct_cols = g.num_nodes(), .hidden = 8,
                        .num_classes = g.num_classes},
          init);
  s.add_latent_encoder(init);
  const std::vector<NodeId> q{1, 5, 9};
  const LatencyConfig cfg{.warmup = 1, .reps = 5};
  std::vector<LatencyReport> rs{bench_teacher(t, g, g.adjacency, q, cfg),
                                bench_student(s, g, g.adjacency, q, StudentPath::kExplicit, cfg, "s"),
                                bench_student(s, g, g.adjacency, q, StudentPath::kLatent, cfg, "l"),
                                bench_mlp(s.feature, g, q, cfg)};
  for (const auto& r : rs) CHECK(r.batch_size == 3);
  std::stringstream ss;
  write_latency_csv(ss, rs);
  CHECK(ss.str().rfind("# protocol: 1 warmup calls, 5 timed calls", 0) == 0);
}

TEST_CASE("experiment config is parsed strictly") {
  std::stringstream ok(R"({"generator": {"n": 100, "homophily": 0.3},
    "scenarios": ["trans", "mixed_ind"], "isolated_ratios": [0, 0.5],
    "models": ["teacher", "samlp_kd"], "seeds": [1, 2],
    "teacher": {"epochs": 5}, "student": {"epochs": 7, "delta": 0.4}})");
  const ExperimentConfig c = parse_experiment_config(ok);
  CHECK(c.generator->n == 100);
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2});
  CHECK(c.teacher.epochs == 5);
  CHECK(c.distill.epochs == 7);
  CHECK(c.distill.delta == 0.4);
  for (const char* bad : {R"({"seedz": [1]})", R"({"models": ["gat"]})",
                          R"({"scenarios": ["nope"]})", R"({"student": {"delta": 2}})", "[1,"}) {
    std::stringstream in(bad);
    CHECK_THROWS_AS(parse_experiment_config(in), ConfigError);
  }
}

TEST_CASE("a small experiment covers every requested report") {
  ExperimentConfig c;
  c.generator = SyntheticGraphConfig{.n = 120, .seed = 2};
  c.scenarios = {"trans", "ind_without_connection"};
  c.models = {"teacher", "mlp", "samlp_kd", "samlp_kd2"};
  c.seeds = {0, 1};
  c.teacher.epochs = 5;
  c.distill.epochs = 3;
  const ExperimentResult r = run_experiment(c);
  // trans: teacher, mlp, samlp_kd; ind: the same plus samlp_kd2 and its latent variant.
  CHECK(r.reports.size() == 2 * (3 + 5));
  const auto& row = r.find("ind_without_connection", "samlp_kd2");
  CHECK(row.n_seeds == 2);
  double hand = 0;
  for (const auto& e : r.reports)
    if (e.scenario == "ind_without_connection" && e.model == "samlp_kd2") hand += e.accuracy / 2;
  CHECK(row.mean == doctest::Approx(hand).epsilon(1e-12));
  CHECK_THROWS(r.find("trans", "samlp_kd2"));
}
