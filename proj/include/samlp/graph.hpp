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
#include <utility>
#include <vector>

#include "samlp/tensor.hpp"

namespace samlp {

using NodeId = Index;
using Edge = std::pair<NodeId, NodeId>;

/// Undirected attributed graph with binary, symmetric, loop-free adjacency.
struct Graph {
  Tensor features;             // N x d
  SparseRows adjacency;        // N x N
  std::vector<Index> labels;   // class per node, < num_classes
  std::size_t num_classes = 0;
  std::vector<Index> degree;

  std::size_t num_nodes() const { return labels.size(); }
  std::size_t feature_dim() const { return features.cols(); }
  /// Undirected edge count.
  std::size_t num_edges() const { return adjacency.nnz() / 2; }

  /// Symmetrizes `edges`, drops self-loops and duplicates, and validates.
  static Graph build(Tensor features, std::vector<Index> labels, std::size_t num_classes,
                     std::span<const Edge> edges);

  /// Throws ConfigError on any broken invariant.
  void validate() const;
};

/// Text format:
///   line 1:        N d c
///   next N lines:  label f_1 ... f_d
///   rest:          u v   (0-based, one edge per line)
/// Blank lines and lines starting with '#' are ignored.
Graph parse_graph(std::istream& in);
Graph load_graph(const std::filesystem::path& path);
/// Writes each undirected edge once with u < v; doubles use round-trip precision.
void write_graph(std::ostream& out, const Graph& g);
void save_graph(const Graph& g, const std::filesystem::path& path);

struct SyntheticGraphConfig {
  std::size_t n = 800;
  std::size_t d = 16;
  std::size_t c = 4;
  double avg_degree = 10.0;
  double homophily = 0.5;
  double feature_signal = 0.3;
  std::uint64_t seed = 0;
};

/// Stochastic-block-style generator. Classes are uniform; each edge starts at a
/// uniform node and its other endpoint is same-class with probability
/// `homophily`, otherwise uniform over the remaining classes, until the
/// expected average degree is reached. Features are signal * mu_class + N(0, I)
/// with mu_class ~ N(0, I).
Graph generate_synthetic(const SyntheticGraphConfig& config);

/// Fraction of undirected edges whose endpoints share a label.
double edge_homophily(const Graph& g);

/// Subgraph on `nodes` (reindexed 0..k-1 in the given order), keeping only
/// edges with both endpoints inside.
Graph induced_subgraph(const Graph& g, std::span<const NodeId> nodes);

/// Same pattern with each row's weights set to 1 / row_nnz (mean aggregation).
SparseRows row_normalized(const SparseRows& a);

}  // namespace samlp
