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

#include <set>
#include <sstream>

#include "samlp/checkpoint.hpp"
#include "samlp/errors.hpp"
#include "samlp/graph.hpp"
#include "samlp/scenario.hpp"
#include "test_util.hpp"

using namespace samlp;
using namespace samlp::test;

namespace {

Graph small_graph() {
  SyntheticGraphConfig c;
  c.n = 120;
  c.d = 6;
  c.c = 3;
  c.avg_degree = 6;
  c.homophily = 0.7;
  c.seed = 3;
  return generate_synthetic(c);
}

}  // namespace

TEST_CASE("build symmetrizes, drops loops and duplicates") {
  const std::vector<Edge> edges{{0, 1}, {1, 0}, {2, 2}, {1, 2}};
  const Graph g = Graph::build(Tensor(3, 2), {0, 1, 0}, 2, edges);
  CHECK(g.num_edges() == 2);
  CHECK(g.adjacency.at(1, 0) == 1.0);
  CHECK(g.adjacency.at(2, 2) == 0.0);
  CHECK(g.degree == std::vector<Index>{1, 2, 1});
  CHECK_THROWS_AS(Graph::build(Tensor(3, 2), {0, 5, 0}, 2, edges), ConfigError);
}

TEST_CASE("graph text round trip") {
  const Graph g = small_graph();
  std::stringstream ss;
  write_graph(ss, g);
  const Graph h = parse_graph(ss);
  CHECK(h.features == g.features);
  CHECK(h.adjacency == g.adjacency);
  CHECK(h.labels == g.labels);
}

TEST_CASE("graph parser reports the failing line") {
  std::stringstream ss("# header\n2 1 2\n0 0.5\n1 oops\n");
  try {
    parse_graph(ss);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  std::stringstream bad_edge("2 1 2\n0 0.5\n1 0.1\n0 7\n");
  CHECK_THROWS_AS(parse_graph(bad_edge), ConfigError);
}

TEST_CASE("generator hits the requested degree and homophily") {
  SyntheticGraphConfig c;
  c.n = 2000;
  c.avg_degree = 10;
  for (double h : {0.2, 0.8}) {
    c.homophily = h;
    const Graph g = generate_synthetic(c);
    const double deg = 2.0 * static_cast<double>(g.num_edges()) / 2000.0;
    CHECK(deg == doctest::Approx(10.0).epsilon(0.05));
    CHECK(edge_homophily(g) == doctest::Approx(h).epsilon(0.1));
  }
  // Same seed, same graph.
  CHECK(generate_synthetic(c).adjacency == generate_synthetic(c).adjacency);
}

TEST_CASE("split is stratified, complete and seeded") {
  const Graph g = small_graph();
  const SplitAssignment s = make_split(g, {}, 9);
  CHECK(s.roles.size() == g.num_nodes());
  CHECK(s.count(Role::kTrain) + s.count(Role::kVal) + s.count(Role::kTest) == g.num_nodes());
  for (Index k = 0; k < g.num_classes; ++k) {
    std::size_t n = 0, tr = 0;
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      if (g.labels[v] != k) continue;
      ++n;
      tr += s.roles[v] == Role::kTrain;
    }
    CHECK(tr == static_cast<std::size_t>(std::lround(0.48 * static_cast<double>(n))));
  }
  CHECK(make_split(g, {}, 9).roles == s.roles);
  CHECK(make_split(g, {}, 10).roles != s.roles);

  std::stringstream ss;
  write_split(ss, s);
  CHECK(parse_split(ss, g.num_nodes()).roles == s.roles);
  std::stringstream partial("0 train\n");
  CHECK_THROWS_AS(parse_split(partial, 2), ConfigError);
}

TEST_CASE("transductive plan sees the whole graph") {
  const Graph g = small_graph();
  const auto split = make_split(g, {}, 1);
  const ScenarioPlan p = build_scenario(g, split, "trans", 0.0, 1);
  CHECK(p.struct_cols() == g.num_nodes());
  CHECK(p.kd_nodes.size() == g.num_nodes());
  CHECK(p.eval_rows == g.adjacency);
  CHECK(p.fit_nodes == split.nodes(Role::kTrain));
  CHECK(p.select_nodes == split.nodes(Role::kVal));
  for (bool f : p.forbidden) CHECK_FALSE(f);
}

TEST_CASE("inductive plans hide val and test nodes") {
  const Graph g = small_graph();
  const auto split = make_split(g, {}, 2);
  const auto train = split.nodes(Role::kTrain);
  const ScenarioPlan wc = build_scenario(g, split, "ind_with_connection", 0.0, 2);
  const ScenarioPlan wo = build_scenario(g, split, "ind_without_connection", 0.0, 2);

  CHECK(wc.struct_cols() == train.size());
  CHECK(wc.local_to_global == train);
  CHECK(wc.kd_nodes == train);
  // Fit and select partition V_L; about a fifth is held back for selection.
  std::set<NodeId> fs(wc.fit_nodes.begin(), wc.fit_nodes.end());
  for (NodeId v : wc.select_nodes) CHECK(fs.insert(v).second);
  CHECK(fs.size() == train.size());
  CHECK(wc.select_nodes.size() == static_cast<std::size_t>(std::lround(
                                      kInductiveSelectFraction * static_cast<double>(train.size()))));

  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    CHECK(wc.forbidden[v] == (split.roles[v] != Role::kTrain));
    CHECK(wc.visible(v) == (split.roles[v] == Role::kTrain));
  }
  // A test row under w/c lists exactly its train neighbours; w/o c it is empty.
  for (NodeId v : wc.test_nodes) {
    std::size_t expect = 0;
    for (Index u : g.adjacency.row_cols(v)) expect += split.roles[u] == Role::kTrain;
    CHECK(wc.eval_rows.row_nnz(v) == expect);
    for (Index col : wc.eval_rows.row_cols(v)) CHECK(split.roles[wc.local_to_global[col]] == Role::kTrain);
    CHECK(wo.eval_rows.row_empty(v));
  }
  // The training graph keeps only train-train edges.
  for (std::size_t i = 0; i < wc.train_graph.num_nodes(); ++i) {
    for (Index j : wc.train_graph.adjacency.row_cols(i)) {
      CHECK(g.adjacency.at(wc.local_to_global[i], wc.local_to_global[j]) == 1.0);
    }
  }
}

TEST_CASE("mixed_ind isolates the requested share of test nodes") {
  const Graph g = small_graph();
  const auto split = make_split(g, {}, 3);
  const auto wc = build_scenario(g, split, "ind_with_connection", 0.0, 3);
  for (double r : {0.0, 0.25, 0.5, 1.0}) {
    const auto p = build_scenario(g, split, Scenario::kMixedInductive, r, 3);
    std::size_t isolated = 0;
    for (NodeId v : p.test_nodes) {
      if (p.eval_rows.row_empty(v) && !wc.eval_rows.row_empty(v)) ++isolated;
      // Non-isolated rows are untouched.
      if (!p.eval_rows.row_empty(v)) {
        CHECK(std::ranges::equal(p.eval_rows.row_cols(v), wc.eval_rows.row_cols(v)));
      }
    }
    const auto n_test = static_cast<double>(p.test_nodes.size());
    CHECK(static_cast<double>(isolated) <= r * n_test + 1.0);
    if (r == 1.0) {
      for (NodeId v : p.test_nodes) CHECK(p.eval_rows.row_empty(v));
    }
  }
  CHECK_THROWS_AS(build_scenario(g, split, Scenario::kMixedInductive, 1.5, 3), ConfigError);
  CHECK_THROWS_AS(parse_scenario("bogus"), ConfigError);
}

TEST_CASE("access guard rejects forbidden nodes") {
  const Graph g = small_graph();
  const auto split = make_split(g, {}, 4);
  const auto p = build_scenario(g, split, "ind_with_connection", 0.0, 4);
  NodeAccessGuard guard(p);
  guard.touch(p.fit_nodes);
  CHECK(guard.total_touches() == p.fit_nodes.size());
  CHECK_THROWS_AS(guard.touch(p.test_nodes.front()), LeakageError);
  const auto val = split.nodes(Role::kVal);
  CHECK_THROWS_AS(guard.touch(val.front()), LeakageError);

  const auto t = build_scenario(g, split, "trans", 0.0, 4);
  NodeAccessGuard open(t);
  CHECK_NOTHROW(open.touch(t.test_nodes));
}

TEST_CASE("checkpoint round trip and corruption") {
  Rng rng = make_rng(6);
  Checkpoint ck;
  ck.kind = "samlp";
  ck.meta["hidden"] = 8;
  ck.tensors.push_back({"a", random_tensor(3, 4, rng)});
  ck.tensors.push_back({"b", Tensor(0, 0)});
  std::stringstream ss;
  write_checkpoint(ss, ck);
  const std::string blob = ss.str();
  std::stringstream in(blob);
  const Checkpoint back = read_checkpoint(in);
  CHECK(back.kind == "samlp");
  CHECK(back.meta_at("hidden") == 8);
  CHECK(back.tensors == ck.tensors);
  CHECK_THROWS_AS(back.meta_at("missing"), ConfigError);

  std::stringstream truncated(blob.substr(0, blob.size() - 5));
  CHECK_THROWS_AS(read_checkpoint(truncated), ConfigError);
  std::string bad = blob;
  bad[0] = 'X';
  std::stringstream magic(bad);
  CHECK_THROWS_AS(read_checkpoint(magic), ConfigError);

  Parameter p(Tensor(3, 4));
  std::vector<NamedParameter> ps{{"a", &p}};
  restore_tensors(ps, {ck.tensors[0]});
  CHECK(p.value == ck.tensors[0].second);
  std::vector<std::pair<std::string, Tensor>> wrong{{"a", Tensor(2, 2)}};
  CHECK_THROWS_AS(restore_tensors(ps, wrong), ConfigError);
}

TEST_CASE("homophily 1 keeps every edge inside a class") {
  SyntheticGraphConfig c;
  c.n = 300;
  c.homophily = 1.0;
  const Graph g = generate_synthetic(c);
  CHECK(edge_homophily(g) == 1.0);
}

TEST_CASE("homophily 1/c gives chance-level edge homophily") {
  SyntheticGraphConfig c;
  c.n = 400;  // about 2000 edges at degree 10
  c.c = 4;
  c.homophily = 0.25;
  c.seed = 12;
  const Graph g = generate_synthetic(c);
  CHECK(g.num_edges() >= 1900);
  CHECK(std::abs(edge_homophily(g) - 0.25) <= 0.05);
}

TEST_CASE("generator rejects out-of-range parameters") {
  SyntheticGraphConfig c;
  c.homophily = 1.5;
  CHECK_THROWS_AS(generate_synthetic(c), ConfigError);
  c = {};
  c.n = 10;
  c.avg_degree = 10;
  CHECK_THROWS_AS(generate_synthetic(c), ConfigError);
}

TEST_CASE("mixed_ind at ratio 0.5 empties exactly half of ten connected test rows") {
  // 20 train nodes (0..19), 5 val (20..24), 10 test (25..34); every test node
  // links to two train nodes.
  std::vector<Edge> edges;
  std::vector<Index> labels;
  for (NodeId v = 0; v < 35; ++v) labels.push_back(v % 2);
  for (NodeId t = 25; t < 35; ++t) {
    edges.push_back({t, t - 25});
    edges.push_back({t, t - 15});
  }
  for (NodeId v = 20; v < 25; ++v) edges.push_back({v, 0});
  const Graph g = Graph::build(Tensor(35, 2), labels, 2, edges);
  std::stringstream ss;
  for (NodeId v = 0; v < 35; ++v) ss << v << (v < 20 ? " train\n" : v < 25 ? " val\n" : " test\n");
  const SplitAssignment split = parse_split(ss, 35);
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const auto p = build_scenario(g, split, Scenario::kMixedInductive, 0.5, seed);
    REQUIRE(p.test_nodes.size() == 10);
    std::size_t empty = 0;
    for (NodeId v : p.test_nodes) empty += p.eval_rows.row_empty(v);
    CHECK(empty == 5);
  }
}
