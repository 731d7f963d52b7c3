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

#include "samlp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_set>

#include "samlp/errors.hpp"
#include "samlp/random.hpp"

namespace samlp {

Graph Graph::build(Tensor features, std::vector<Index> labels, std::size_t num_classes,
                   std::span<const Edge> edges) {
  const std::size_t n = labels.size();
  if (features.rows() != n) {
    throw ConfigError("graph: " + std::to_string(features.rows()) + " feature rows for " +
                      std::to_string(n) + " nodes");
  }
  std::vector<std::vector<Index>> rows(n);
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) {
      throw ConfigError("graph: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                        ") references a node outside [0, " + std::to_string(n) + ")");
    }
    if (u == v) continue;
    rows[u].push_back(v);
    rows[v].push_back(u);
  }
  Graph g;
  g.features = std::move(features);
  g.labels = std::move(labels);
  g.num_classes = num_classes;
  g.adjacency = SparseRows::from_binary_lists(n, rows);
  g.degree.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.degree[i] = static_cast<Index>(g.adjacency.row_nnz(i));
  g.validate();
  return g;
}

void Graph::validate() const {
  const std::size_t n = num_nodes();
  if (features.rows() != n) throw ConfigError("graph: feature rows do not match node count");
  if (adjacency.n_rows() != n || adjacency.n_cols() != n) {
    throw ConfigError("graph: adjacency is not N x N");
  }
  adjacency.validate();
  if (!features.all_finite()) throw ConfigError("graph: non-finite feature value");
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= num_classes) {
      throw ConfigError("graph: node " + std::to_string(i) + " has label " +
                        std::to_string(labels[i]) + " >= " + std::to_string(num_classes));
    }
    for (Index j : adjacency.row_cols(i)) {
      if (j == i) throw ConfigError("graph: self-loop at node " + std::to_string(i));
      if (adjacency.at(j, static_cast<Index>(i)) == 0.0) {
        throw ConfigError("graph: adjacency not symmetric at (" + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
      }
    }
    for (double w : adjacency.row_weights(i)) {
      if (w != 1.0) throw ConfigError("graph: adjacency must be binary");
    }
  }
  if (degree.size() != n) throw ConfigError("graph: degree cache size mismatch");
}

namespace {

bool skip_line(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

template <typename T>
T read_field(std::istringstream& ss, const char* what, std::size_t line_no) {
  T v{};
  if (!(ss >> v)) throw ParseError(std::string("expected ") + what, line_no);
  return v;
}

void expect_end(std::istringstream& ss, std::size_t line_no) {
  std::string extra;
  if (ss >> extra) throw ParseError("unexpected trailing token '" + extra + "'", line_no);
}

}  // namespace

Graph parse_graph(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!skip_line(line)) return true;
    }
    return false;
  };

  if (!next_line()) throw ParseError("missing header 'N d c'", line_no + 1);
  std::istringstream header(line);
  const auto n = read_field<long long>(header, "node count N", line_no);
  const auto d = read_field<long long>(header, "feature width d", line_no);
  const auto c = read_field<long long>(header, "class count c", line_no);
  expect_end(header, line_no);
  if (n <= 0 || d <= 0 || c <= 0) throw ParseError("N, d and c must be positive", line_no);

  Tensor features(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
  std::vector<Index> labels(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    if (!next_line()) {
      throw ParseError("expected " + std::to_string(n) + " node records, found " +
                           std::to_string(i),
                       line_no + 1);
    }
    std::istringstream ss(line);
    const auto label = read_field<long long>(ss, "label", line_no);
    if (label < 0 || label >= c) {
      throw ParseError("label " + std::to_string(label) + " out of range [0, " +
                           std::to_string(c) + ")",
                       line_no);
    }
    labels[static_cast<std::size_t>(i)] = static_cast<Index>(label);
    for (long long j = 0; j < d; ++j) {
      const double f = read_field<double>(ss, "feature value", line_no);
      if (!std::isfinite(f)) throw ParseError("non-finite feature value", line_no);
      features(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = f;
    }
    expect_end(ss, line_no);
  }

  std::vector<Edge> edges;
  while (next_line()) {
    std::istringstream ss(line);
    const auto u = read_field<long long>(ss, "edge endpoint u", line_no);
    const auto v = read_field<long long>(ss, "edge endpoint v", line_no);
    expect_end(ss, line_no);
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw ParseError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                           ") index out of range [0, " + std::to_string(n) + ")",
                       line_no);
    }
    edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
  }
  return Graph::build(std::move(features), std::move(labels), static_cast<std::size_t>(c), edges);
}

Graph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open graph file " + path.string());
  return parse_graph(in);
}

void write_graph(std::ostream& out, const Graph& g) {
  out << g.num_nodes() << ' ' << g.feature_dim() << ' ' << g.num_classes << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    out << g.labels[i];
    for (double f : g.features.row(i)) out << ' ' << f;
    out << '\n';
  }
  for (std::size_t u = 0; u < g.num_nodes(); ++u) {
    for (Index v : g.adjacency.row_cols(u)) {
      if (u < v) out << u << ' ' << v << '\n';
    }
  }
}

void save_graph(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write graph file " + path.string());
  write_graph(out, g);
}

Graph generate_synthetic(const SyntheticGraphConfig& cfg) {
  if (cfg.n < 2 || cfg.d == 0 || cfg.c < 2) {
    throw ConfigError("generator: need n >= 2, d >= 1, c >= 2");
  }
  if (!(cfg.homophily >= 0.0 && cfg.homophily <= 1.0)) {
    throw ConfigError("generator: homophily must lie in [0, 1]");
  }
  if (!(cfg.avg_degree >= 0.0 && cfg.avg_degree < static_cast<double>(cfg.n))) {
    throw ConfigError("generator: avg_degree must lie in [0, n)");
  }
  if (!(cfg.feature_signal >= 0.0) || !std::isfinite(cfg.feature_signal)) {
    throw ConfigError("generator: feature_signal must be finite and >= 0");
  }

  Rng rng = make_rng(cfg.seed, 0x5eed);
  const std::size_t n = cfg.n, c = cfg.c, d = cfg.d;

  std::uniform_int_distribution<Index> pick_class(0, static_cast<Index>(c - 1));
  std::vector<Index> labels(n);
  std::vector<std::vector<NodeId>> members(c);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = pick_class(rng);
    members[labels[i]].push_back(static_cast<NodeId>(i));
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor means(c, d);
  for (double& v : means.data()) v = normal(rng);
  Tensor features(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      features(i, j) = cfg.feature_signal * means(labels[i], j) + normal(rng);
    }
  }

  const auto target = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * cfg.avg_degree / 2.0));
  std::unordered_set<std::uint64_t> seen;
  std::vector<Edge> edges;
  edges.reserve(target);
  std::uniform_int_distribution<NodeId> pick_node(0, static_cast<NodeId>(n - 1));
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const std::size_t max_attempts = 200 * target + 1000;
  std::size_t attempts = 0;
  std::vector<Index> other_classes;
  while (edges.size() < target) {
    if (++attempts > max_attempts) {
      throw ConfigError("generator: cannot place " + std::to_string(target) +
                        " distinct edges with the requested homophily");
    }
    const NodeId u = pick_node(rng);
    const Index cu = labels[u];
    NodeId v;
    if (coin(rng) < cfg.homophily) {
      const auto& same = members[cu];
      if (same.size() < 2) continue;
      std::uniform_int_distribution<std::size_t> pick(0, same.size() - 1);
      v = same[pick(rng)];
      if (v == u) continue;
    } else {
      other_classes.clear();
      for (Index k = 0; k < c; ++k) {
        if (k != cu && !members[k].empty()) other_classes.push_back(k);
      }
      if (other_classes.empty()) continue;
      std::uniform_int_distribution<std::size_t> pick_k(0, other_classes.size() - 1);
      const auto& pool = members[other_classes[pick_k(rng)]];
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      v = pool[pick(rng)];
    }
    const NodeId a = std::min(u, v), b = std::max(u, v);
    const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | b;
    if (!seen.insert(key).second) continue;
    edges.emplace_back(a, b);
  }
  return Graph::build(std::move(features), std::move(labels), c, edges);
}

double edge_homophily(const Graph& g) {
  std::size_t same = 0, total = 0;
  for (std::size_t u = 0; u < g.num_nodes(); ++u) {
    for (Index v : g.adjacency.row_cols(u)) {
      if (u >= v) continue;
      ++total;
      if (g.labels[u] == g.labels[v]) ++same;
    }
  }
  if (total == 0) throw ConfigError("edge_homophily: graph has no edges");
  return static_cast<double>(same) / static_cast<double>(total);
}

Graph induced_subgraph(const Graph& g, std::span<const NodeId> nodes) {
  constexpr Index kAbsent = std::numeric_limits<Index>::max();
  std::vector<Index> local(g.num_nodes(), kAbsent);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] >= g.num_nodes()) throw ConfigError("induced_subgraph: node out of range");
    local[nodes[i]] = static_cast<Index>(i);
  }
  std::vector<Edge> edges;
  std::vector<Index> labels(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    labels[i] = g.labels[nodes[i]];
    for (Index j : g.adjacency.row_cols(nodes[i])) {
      if (local[j] != kAbsent && local[j] > i) edges.emplace_back(static_cast<Index>(i), local[j]);
    }
  }
  return Graph::build(g.features.gather_rows(nodes), std::move(labels), g.num_classes, edges);
}

SparseRows row_normalized(const SparseRows& a) {
  std::vector<double> weights(a.weights().size());
  for (std::size_t r = 0; r < a.n_rows(); ++r) {
    const std::size_t k = a.row_nnz(r);
    if (k == 0) continue;
    const double w = 1.0 / static_cast<double>(k);
    for (std::size_t p = a.row_ptr()[r]; p < a.row_ptr()[r + 1]; ++p) weights[p] = w;
  }
  return SparseRows(a.n_rows(), a.n_cols(), a.row_ptr(), a.col_idx(), std::move(weights));
}

}  // namespace samlp
