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

#include "samlp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "samlp/errors.hpp"
#include "samlp/random.hpp"

namespace samlp {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kTrain:
      return "train";
    case Role::kVal:
      return "val";
    case Role::kTest:
      return "test";
  }
  return "?";
}

std::vector<NodeId> SplitAssignment::nodes(Role role) const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i] == role) out.push_back(static_cast<NodeId>(i));
  }
  return out;
}

std::size_t SplitAssignment::count(Role role) const {
  return static_cast<std::size_t>(std::count(roles.begin(), roles.end(), role));
}

SplitAssignment make_split(const Graph& g, SplitFractions f, std::uint64_t seed) {
  if (!(f.train > 0.0 && f.val > 0.0 && f.test > 0.0)) {
    throw ConfigError("split: train, val and test fractions must all be positive");
  }
  if (std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw ConfigError("split: fractions must sum to 1");
  }
  std::vector<std::vector<NodeId>> by_class(g.num_classes);
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    by_class[g.labels[i]].push_back(static_cast<NodeId>(i));
  }
  Rng rng = make_rng(seed, 0x5b117);
  SplitAssignment split;
  split.roles.assign(g.num_nodes(), Role::kTest);
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& members = by_class[k];
    const std::size_t n = members.size();
    if (n == 0) continue;
    if (n < 3) {
      throw ConfigError("split: class " + std::to_string(k) + " has " + std::to_string(n) +
                        " nodes; stratification needs at least 3");
    }
    const auto perm = random_permutation(n, rng);
    auto n_train = std::max<long long>(1, std::llround(f.train * static_cast<double>(n)));
    auto n_val = std::max<long long>(1, std::llround(f.val * static_cast<double>(n)));
    while (n_train + n_val > static_cast<long long>(n) - 1) {
      if (n_train >= n_val) {
        --n_train;
      } else {
        --n_val;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const NodeId node = members[perm[i]];
      const auto pos = static_cast<long long>(i);
      split.roles[node] = pos < n_train ? Role::kTrain
                          : pos < n_train + n_val ? Role::kVal
                                                  : Role::kTest;
    }
  }
  return split;
}

SplitAssignment parse_split(std::istream& in, std::size_t num_nodes) {
  SplitAssignment split;
  split.roles.assign(num_nodes, Role::kTest);
  std::vector<bool> seen(num_nodes, false);
  std::string line;
  std::size_t line_no = 0;
  std::size_t assigned = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    long long node = -1;
    std::string role;
    if (!(ss >> node >> role)) throw ParseError("expected 'node_index role'", line_no);
    if (node < 0 || static_cast<std::size_t>(node) >= num_nodes) {
      throw ParseError("node index " + std::to_string(node) + " out of range", line_no);
    }
    Role r;
    if (role == "train") {
      r = Role::kTrain;
    } else if (role == "val") {
      r = Role::kVal;
    } else if (role == "test") {
      r = Role::kTest;
    } else {
      throw ParseError("unknown role '" + role + "'", line_no);
    }
    if (seen[static_cast<std::size_t>(node)]) {
      throw ParseError("node " + std::to_string(node) + " assigned twice", line_no);
    }
    seen[static_cast<std::size_t>(node)] = true;
    split.roles[static_cast<std::size_t>(node)] = r;
    ++assigned;
  }
  if (assigned != num_nodes) {
    throw ConfigError("split file assigns " + std::to_string(assigned) + " of " +
                      std::to_string(num_nodes) + " nodes");
  }
  return split;
}

SplitAssignment load_split(const std::filesystem::path& path, std::size_t num_nodes) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open split file " + path.string());
  return parse_split(in, num_nodes);
}

void write_split(std::ostream& out, const SplitAssignment& split) {
  for (std::size_t i = 0; i < split.roles.size(); ++i) {
    out << i << ' ' << to_string(split.roles[i]) << '\n';
  }
}

void save_split(const SplitAssignment& split, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write split file " + path.string());
  write_split(out, split);
}

Scenario parse_scenario(std::string_view tag) {
  if (tag == "trans") return Scenario::kTransductive;
  if (tag == "ind_with_connection") return Scenario::kInductiveWithConnection;
  if (tag == "ind_without_connection") return Scenario::kInductiveWithoutConnection;
  if (tag == "mixed_ind") return Scenario::kMixedInductive;
  throw ConfigError("unknown scenario tag '" + std::string(tag) +
                    "' (expected trans, ind_with_connection, ind_without_connection, mixed_ind)");
}

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::kTransductive:
      return "trans";
    case Scenario::kInductiveWithConnection:
      return "ind_with_connection";
    case Scenario::kInductiveWithoutConnection:
      return "ind_without_connection";
    case Scenario::kMixedInductive:
      return "mixed_ind";
  }
  return "?";
}

bool is_inductive(Scenario s) { return s != Scenario::kTransductive; }

namespace {

ScenarioPlan transductive_plan(const Graph& g, const SplitAssignment& split) {
  ScenarioPlan plan;
  plan.scenario = Scenario::kTransductive;
  plan.train_graph = g;
  const std::size_t n = g.num_nodes();
  plan.local_to_global.resize(n);
  plan.global_to_local.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    plan.local_to_global[i] = static_cast<NodeId>(i);
    plan.global_to_local[i] = static_cast<Index>(i);
  }
  plan.eval_rows = g.adjacency;
  plan.eval_adjacency = g.adjacency;
  plan.kd_nodes = plan.local_to_global;
  plan.fit_nodes = split.nodes(Role::kTrain);
  plan.select_nodes = split.nodes(Role::kVal);
  plan.test_nodes = split.nodes(Role::kTest);
  plan.forbidden.assign(n, false);
  return plan;
}

}  // namespace

ScenarioPlan build_scenario(const Graph& g, const SplitAssignment& split, Scenario scenario,
                            double isolated_ratio, std::uint64_t seed) {
  if (split.roles.size() != g.num_nodes()) {
    throw ConfigError("scenario: split covers " + std::to_string(split.roles.size()) +
                      " nodes, graph has " + std::to_string(g.num_nodes()));
  }
  if (split.count(Role::kTrain) == 0 || split.count(Role::kTest) == 0) {
    throw ConfigError("scenario: split needs train and test nodes");
  }
  if (scenario == Scenario::kTransductive) return transductive_plan(g, split);
  if (scenario == Scenario::kMixedInductive && !(isolated_ratio >= 0.0 && isolated_ratio <= 1.0)) {
    throw ConfigError("scenario: isolated_ratio must lie in [0, 1]");
  }

  const std::size_t n = g.num_nodes();
  ScenarioPlan plan;
  plan.scenario = scenario;
  plan.isolated_ratio = scenario == Scenario::kMixedInductive ? isolated_ratio
                        : scenario == Scenario::kInductiveWithoutConnection ? 1.0
                                                                            : 0.0;
  plan.local_to_global = split.nodes(Role::kTrain);
  plan.global_to_local.assign(n, ScenarioPlan::kNotVisible);
  for (std::size_t i = 0; i < plan.local_to_global.size(); ++i) {
    plan.global_to_local[plan.local_to_global[i]] = static_cast<Index>(i);
  }
  plan.train_graph = induced_subgraph(g, plan.local_to_global);
  plan.forbidden.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) plan.forbidden[i] = split.roles[i] != Role::kTrain;
  plan.test_nodes = split.nodes(Role::kTest);

  // Hold back part of V_L for checkpoint selection.
  Rng rng = make_rng(seed, 0x5e1ec7);
  const std::size_t n_train = plan.local_to_global.size();
  const auto perm = random_permutation(n_train, rng);
  const auto n_select = static_cast<std::size_t>(std::max<long long>(
      1, std::llround(kInductiveSelectFraction * static_cast<double>(n_train))));
  std::vector<bool> is_select(n_train, false);
  for (std::size_t i = 0; i < n_select && i < n_train; ++i) is_select[perm[i]] = true;
  for (std::size_t i = 0; i < n_train; ++i) {
    (is_select[i] ? plan.select_nodes : plan.fit_nodes).push_back(plan.local_to_global[i]);
  }
  plan.kd_nodes = plan.local_to_global;

  // Test nodes that lose every connection at evaluation time.
  std::vector<bool> isolated(n, false);
  if (scenario == Scenario::kInductiveWithoutConnection) {
    for (std::size_t i = 0; i < n; ++i) isolated[i] = plan.forbidden[i];
  } else if (scenario == Scenario::kMixedInductive) {
    Rng iso_rng = make_rng(seed, 0x150);
    const auto order = random_permutation(plan.test_nodes.size(), iso_rng);
    const auto k = static_cast<std::size_t>(
        std::llround(isolated_ratio * static_cast<double>(plan.test_nodes.size())));
    for (std::size_t i = 0; i < k; ++i) isolated[plan.test_nodes[order[i]]] = true;
  }

  std::vector<std::vector<Index>> rows(n);
  std::vector<std::vector<Index>> ind_adj(n);
  for (std::size_t u = 0; u < n; ++u) {
    if (isolated[u]) continue;
    const bool u_seen = plan.visible(static_cast<NodeId>(u));
    for (Index v : g.adjacency.row_cols(u)) {
      const bool v_seen = plan.visible(v);
      // G_ind keeps V_L-V_L and V_L-V_U edges, never V_U-V_U.
      if (!u_seen && !v_seen) continue;
      if (isolated[v]) continue;
      ind_adj[u].push_back(v);
      if (v_seen) rows[u].push_back(plan.global_to_local[v]);
    }
  }
  plan.eval_rows = SparseRows::from_binary_lists(n_train, rows);
  plan.eval_adjacency = SparseRows::from_binary_lists(n, ind_adj);
  return plan;
}

ScenarioPlan build_scenario(const Graph& g, const SplitAssignment& split,
                            std::string_view scenario_tag, double isolated_ratio,
                            std::uint64_t seed) {
  return build_scenario(g, split, parse_scenario(scenario_tag), isolated_ratio, seed);
}

NodeAccessGuard::NodeAccessGuard(const ScenarioPlan& plan)
    : plan_(&plan), touched_(plan.num_nodes(), false) {}

void NodeAccessGuard::touch(NodeId global) {
  if (global >= touched_.size()) {
    throw ConfigError("training touched node " + std::to_string(global) + " outside the graph");
  }
  if (plan_->forbidden[global]) {
    throw LeakageError("training read held-out node " + std::to_string(global) + " under " +
                       std::string(to_string(plan_->scenario)));
  }
  touched_[global] = true;
  ++total_;
}

void NodeAccessGuard::touch(std::span<const NodeId> globals) {
  for (NodeId g : globals) touch(g);
}

void NodeAccessGuard::touch_local(std::span<const Index> locals) {
  for (Index l : locals) touch(plan_->local_to_global.at(l));
}

void NodeAccessGuard::touch_local_rows(const SparseRows& rows, std::span<const Index> locals) {
  for (Index l : locals) touch_local(rows.row_cols(l));
}

}  // namespace samlp
