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
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "samlp/graph.hpp"

namespace samlp {

enum class Role : std::uint8_t { kTrain, kVal, kTest };

std::string_view to_string(Role role);

struct SplitFractions {
  double train = 0.48;
  double val = 0.32;
  double test = 0.20;
};

/// Role of every node; covers all nodes exactly once.
struct SplitAssignment {
  std::vector<Role> roles;

  std::vector<NodeId> nodes(Role role) const;
  std::size_t count(Role role) const;
};

/// Stratified per class: each class gets round(f * n_class) train and val
/// nodes (at least one of each) and the remainder as test. Classes with fewer
/// than 3 nodes cannot be stratified.
SplitAssignment make_split(const Graph& g, SplitFractions fractions, std::uint64_t seed);

/// `node_index role` per line, role in {train, val, test}.
SplitAssignment parse_split(std::istream& in, std::size_t num_nodes);
SplitAssignment load_split(const std::filesystem::path& path, std::size_t num_nodes);
void write_split(std::ostream& out, const SplitAssignment& split);
void save_split(const SplitAssignment& split, const std::filesystem::path& path);

enum class Scenario {
  kTransductive,
  kInductiveWithConnection,
  kInductiveWithoutConnection,
  kMixedInductive,
};

/// Tags: trans, ind_with_connection, ind_without_connection, mixed_ind.
Scenario parse_scenario(std::string_view tag);
std::string_view to_string(Scenario s);
bool is_inductive(Scenario s);

/// Fraction of the labeled nodes held back from CE in inductive scenarios and
/// used for checkpoint selection instead of the (unseen) validation nodes.
inline constexpr double kInductiveSelectFraction = 0.2;

/// What a model may see while training and what it receives at evaluation.
///
/// Transductive: the training graph is the full graph and every node is a
/// distillation target. Inductive: the training graph is the subgraph induced
/// by the train nodes (V_L, renumbered 0..|V_L|-1 in ascending global order);
/// validation and test nodes are invisible. Structure rows handed to the
/// student always index training-graph columns, so a test row under
/// ind_with_connection lists only its train-node neighbours.
struct ScenarioPlan {
  Scenario scenario = Scenario::kTransductive;
  double isolated_ratio = 0.0;

  Graph train_graph;
  /// Global id of each training-graph node.
  std::vector<NodeId> local_to_global;
  /// Training-graph id of each global node, or kNotVisible.
  std::vector<Index> global_to_local;

  /// Student structure input at evaluation: N rows (global ids) over
  /// struct_cols() columns.
  SparseRows eval_rows;
  /// Graph the teacher message-passes over at evaluation (N x N, global ids):
  /// G for trans, G_ind for inductive scenarios.
  SparseRows eval_adjacency;

  /// Global ids. kd: distillation targets; fit: CE-supervised; select:
  /// checkpoint selection; test: reported accuracy.
  std::vector<NodeId> kd_nodes;
  std::vector<NodeId> fit_nodes;
  std::vector<NodeId> select_nodes;
  std::vector<NodeId> test_nodes;
  /// Nodes whose data must never be read by training (val + test when inductive).
  std::vector<bool> forbidden;

  static constexpr Index kNotVisible = 0xFFFFFFFFu;

  std::size_t num_nodes() const { return global_to_local.size(); }
  std::size_t struct_cols() const { return train_graph.num_nodes(); }
  bool visible(NodeId global) const { return global_to_local[global] != kNotVisible; }
};

ScenarioPlan build_scenario(const Graph& g, const SplitAssignment& split, Scenario scenario,
                            double isolated_ratio, std::uint64_t seed);
ScenarioPlan build_scenario(const Graph& g, const SplitAssignment& split,
                            std::string_view scenario_tag, double isolated_ratio,
                            std::uint64_t seed);

/// Access log for training runs. Every node whose features, structure row,
/// label or soft label a trainer reads passes through touch(); reading a
/// forbidden node throws LeakageError.
class NodeAccessGuard {
 public:
  explicit NodeAccessGuard(const ScenarioPlan& plan);

  void touch(NodeId global);
  void touch(std::span<const NodeId> globals);
  /// Translates training-graph ids first.
  void touch_local(std::span<const Index> locals);
  void touch_local_rows(const SparseRows& rows, std::span<const Index> locals);

  std::size_t total_touches() const { return total_; }
  const std::vector<bool>& touched() const { return touched_; }
  /// Global id of a visible training-graph node.
  NodeId global_of(Index local) const { return plan_->local_to_global[local]; }

 private:
  const ScenarioPlan* plan_;
  std::vector<bool> touched_;
  std::size_t total_ = 0;
};

}  // namespace samlp
