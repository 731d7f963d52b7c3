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

#include "samlp/teacher.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "samlp/adam.hpp"
#include "samlp/errors.hpp"
#include "samlp/ops.hpp"

namespace samlp {

SageParams::SageParams(const SageConfig& cfg, Rng& rng) : config(cfg) {
  if (cfg.num_layers == 0) throw ConfigError("teacher: num_layers must be at least 1");
  if (cfg.in_dim == 0 || cfg.num_classes == 0 || cfg.hidden == 0) {
    throw ConfigError("teacher: in_dim, hidden and num_classes must be positive");
  }
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) {
    throw ConfigError("teacher: dropout must lie in [0, 1)");
  }
  for (std::size_t k = 0; k < cfg.num_layers; ++k) {
    const bool last = k + 1 == cfg.num_layers;
    const std::size_t in = k == 0 ? cfg.in_dim : cfg.hidden;
    const std::size_t out = last ? cfg.num_classes : cfg.hidden;
    SageLayer layer;
    layer.self = LinearLayer(in, out, rng);
    layer.neighbor = LinearLayer(in, out, rng);
    if (!last) layer.norm = LayerNormParams(out);
    layers.push_back(std::move(layer));
  }
}

std::vector<NamedParameter> SageParams::parameters() {
  std::vector<NamedParameter> out;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const std::string p = "layers." + std::to_string(k);
    layers[k].self.collect(p + ".self", out);
    layers[k].neighbor.collect(p + ".neighbor", out);
    if (k + 1 < layers.size()) layers[k].norm.collect(p + ".norm", out);
  }
  return out;
}

namespace {

// `h_self` holds the target rows, `h_src` the rows `mean` aggregates over.
Var sage_layer(SageLayer& layer, const SageConfig& cfg, bool last, Tape& tape, Var h_src,
               Var h_self, const SparseRows& mean, bool training, Rng& rng) {
  Var z = ops::add(layer.self.forward(tape, h_self),
                   layer.neighbor.forward(tape, ops::spmm(mean, h_src)));
  if (last) return z;
  Var h = ops::dropout(activate(layer.norm.forward(tape, z), cfg.activation), cfg.dropout,
                       training, rng);
  if (cfg.residual && h_self.cols() == h.cols()) h = ops::add(h, h_self);
  return h;
}

}  // namespace

Var sage_forward(SageParams& params, Tape& tape, Var features, const SparseRows& mean_adj,
                 bool training, Rng& rng) {
  if (mean_adj.n_rows() != features.rows() || mean_adj.n_cols() != features.rows()) {
    throw DimensionError("sage_forward: adjacency does not match " + features.value().shape_str());
  }
  Var h = features;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    h = sage_layer(params.layers[k], params.config, k + 1 == params.layers.size(), tape, h, h,
                   mean_adj, training, rng);
  }
  return h;
}

Tensor sage_infer(SageParams& params, const Tensor& features, const SparseRows& adjacency,
                  std::span<const NodeId> queries) {
  const std::size_t n = features.rows();
  if (adjacency.n_rows() != n || adjacency.n_cols() != n) {
    throw DimensionError("sage_infer: adjacency does not match features");
  }
  const std::size_t k_layers = params.layers.size();
  constexpr Index kUnset = std::numeric_limits<Index>::max();

  // frontier holds S_K (the queries) followed by each further hop, so S_k is
  // a prefix of S_{k-1} and a single position map serves every layer.
  std::vector<Index> pos(n, kUnset);
  std::vector<NodeId> frontier;
  for (NodeId q : queries) {
    if (q >= n) throw DimensionError("sage_infer: query node out of range");
    if (pos[q] == kUnset) {
      pos[q] = static_cast<Index>(frontier.size());
      frontier.push_back(q);
    }
  }
  std::vector<std::size_t> level_size(k_layers + 1);
  level_size[k_layers] = frontier.size();
  std::size_t begin = 0;
  for (std::size_t k = k_layers; k > 0; --k) {
    const std::size_t end = frontier.size();
    for (std::size_t i = begin; i < end; ++i) {
      for (Index u : adjacency.row_cols(frontier[i])) {
        if (pos[u] == kUnset) {
          pos[u] = static_cast<Index>(frontier.size());
          frontier.push_back(u);
        }
      }
    }
    begin = end;
    level_size[k - 1] = frontier.size();
  }

  Tape tape(false);
  Rng unused(0);
  Var h = tape.constant(features.gather_rows(frontier));
  std::vector<SparseRows> means(k_layers);
  for (std::size_t layer = 1; layer <= k_layers; ++layer) {
    const std::size_t n_src = level_size[layer - 1];
    const std::size_t n_dst = level_size[layer];
    std::vector<std::size_t> row_ptr{0};
    std::vector<Index> cols;
    std::vector<double> weights;
    row_ptr.reserve(n_dst + 1);
    for (std::size_t t = 0; t < n_dst; ++t) {
      const auto nbrs = adjacency.row_cols(frontier[t]);
      const std::size_t start = cols.size();
      for (Index u : nbrs) cols.push_back(pos[u]);
      std::sort(cols.begin() + static_cast<std::ptrdiff_t>(start), cols.end());
      weights.insert(weights.end(), nbrs.size(), nbrs.empty() ? 0.0 : 1.0 / nbrs.size());
      row_ptr.push_back(cols.size());
    }
    means[layer - 1] = SparseRows(n_dst, n_src, std::move(row_ptr), std::move(cols),
                                  std::move(weights));
    std::vector<Index> self_rows(n_dst);
    for (std::size_t t = 0; t < n_dst; ++t) self_rows[t] = static_cast<Index>(t);
    Var h_self = n_dst == n_src ? h : ops::gather_rows(h, self_rows);
    h = sage_layer(params.layers[layer - 1], params.config, layer == k_layers, tape, h, h_self,
                   means[layer - 1], false, unused);
  }

  Tensor out(queries.size(), h.cols());
  const Tensor& hv = h.value();
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto src = hv.row(pos[queries[i]]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

namespace {

std::vector<Index> to_local(const ScenarioPlan& plan, std::span<const NodeId> globals) {
  std::vector<Index> out;
  out.reserve(globals.size());
  for (NodeId g : globals) {
    if (!plan.visible(g)) throw ConfigError("node " + std::to_string(g) + " is not visible");
    out.push_back(plan.global_to_local[g]);
  }
  return out;
}

std::vector<Index> labels_of(const Graph& g, std::span<const Index> nodes) {
  std::vector<Index> out;
  out.reserve(nodes.size());
  for (Index v : nodes) out.push_back(g.labels[v]);
  return out;
}

Tensor scaled_softmax(Tensor logits, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (temperature != 1.0) {
    for (double& v : logits.data()) v /= temperature;
  }
  return kernels::softmax_rows(logits);
}

}  // namespace

TrainedTeacher train_teacher(const ScenarioPlan& plan, const TeacherTrainConfig& config,
                             NodeAccessGuard* guard) {
  const Graph& g = plan.train_graph;
  const std::size_t n = g.num_nodes();
  if (guard) {
    // Full-batch message passing reads every training-graph node.
    for (std::size_t v = 0; v < n; ++v) guard->touch(plan.local_to_global[v]);
  }
  SageConfig model = config.model;
  model.in_dim = g.feature_dim();
  model.num_classes = g.num_classes;

  TrainedTeacher result;
  Rng init_rng = make_rng(config.seed, 0x7eac4e1);
  Rng drop_rng = make_rng(config.seed, 0xd50);
  result.params = SageParams(model, init_rng);
  SageParams& params = result.params;

  const SparseRows mean = row_normalized(g.adjacency);
  const auto fit = to_local(plan, plan.fit_nodes);
  const auto fit_labels = labels_of(g, fit);
  const auto select = to_local(plan, plan.select_nodes);
  const auto select_labels = labels_of(g, select);
  if (fit.empty()) throw ConfigError("teacher: no labelled nodes to fit");

  auto named = params.parameters();
  std::vector<Parameter*> ptrs;
  for (auto& p : named) ptrs.push_back(p.param);
  AdamOptimizer opt(ptrs, AdamConfig{.lr = config.lr, .weight_decay = config.weight_decay});

  auto best = snapshot_tensors(named);
  result.best_select_acc = -1.0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Tape tape;
    Var logits = sage_forward(params, tape, tape.constant_ref(g.features), mean, true, drop_rng);
    Var loss = ops::cross_entropy_logits(ops::gather_rows(logits, fit), fit_labels);
    const double loss_value = loss.value()(0, 0);
    if (!std::isfinite(loss_value)) {
      throw NumericError("teacher loss is not finite at epoch " + std::to_string(epoch));
    }
    opt.zero_grad();
    tape.backward(loss);
    opt.step();

    Tape eval_tape(false);
    Var eval_logits =
        sage_forward(params, eval_tape, eval_tape.constant_ref(g.features), mean, false, drop_rng);
    const double acc = accuracy(eval_logits.value().gather_rows(select), select_labels);
    result.log.push_back({epoch, loss_value, acc});
    if (acc > result.best_select_acc) {
      result.best_select_acc = acc;
      result.best_epoch = epoch;
      best = snapshot_tensors(named);
    }
  }
  restore_tensors(named, best);

  Tape tape(false);
  Var logits = sage_forward(params, tape, tape.constant_ref(g.features), mean, false, drop_rng);
  const auto kd = to_local(plan, plan.kd_nodes);
  result.output.nodes = plan.kd_nodes;
  result.output.temperature = config.temperature;
  result.output.probs = scaled_softmax(logits.value().gather_rows(kd), config.temperature);
  return result;
}

Tensor teacher_predict(SageParams& params, const Graph& g, const ScenarioPlan& plan,
                       std::span<const NodeId> nodes) {
  return kernels::softmax_rows(sage_infer(params, g.features, plan.eval_adjacency, nodes));
}

Checkpoint teacher_checkpoint(SageParams& params) {
  Checkpoint ckpt;
  ckpt.kind = "sage";
  const auto& c = params.config;
  ckpt.meta = {{"in_dim", static_cast<double>(c.in_dim)},
               {"hidden", static_cast<double>(c.hidden)},
               {"num_classes", static_cast<double>(c.num_classes)},
               {"num_layers", static_cast<double>(c.num_layers)},
               {"dropout", c.dropout},
               {"residual", c.residual ? 1.0 : 0.0},
               {"activation", c.activation == Activation::kRelu ? 0.0 : 1.0}};
  ckpt.tensors = snapshot_tensors(params.parameters());
  return ckpt;
}

SageParams teacher_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "sage") throw ConfigError("checkpoint holds a '" + ckpt.kind + "' model");
  SageConfig c;
  c.in_dim = static_cast<std::size_t>(ckpt.meta_at("in_dim"));
  c.hidden = static_cast<std::size_t>(ckpt.meta_at("hidden"));
  c.num_classes = static_cast<std::size_t>(ckpt.meta_at("num_classes"));
  c.num_layers = static_cast<std::size_t>(ckpt.meta_at("num_layers"));
  c.dropout = ckpt.meta_at("dropout");
  c.residual = ckpt.meta_at("residual") != 0.0;
  c.activation = ckpt.meta_at("activation") == 0.0 ? Activation::kRelu : Activation::kIdentity;
  Rng rng(0);
  SageParams params(c, rng);
  restore_tensors(params.parameters(), ckpt.tensors);
  return params;
}

void write_teacher_output(std::ostream& out, const TeacherOutput& t) {
  if (t.nodes.size() != t.probs.rows()) {
    throw DimensionError("teacher output: node list and probability rows differ");
  }
  out << t.nodes.size() << ' ' << t.probs.cols() << ' '
      << std::setprecision(std::numeric_limits<double>::max_digits10) << t.temperature << '\n';
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    out << t.nodes[i];
    for (double p : t.probs.row(i)) out << ' ' << p;
    out << '\n';
  }
}

TeacherOutput parse_teacher_output(std::istream& in) {
  TeacherOutput t;
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first != std::string::npos && line[first] != '#') return true;
    }
    return false;
  };
  if (!next_line()) throw ConfigError("teacher output: empty file");
  std::size_t rows = 0;
  std::size_t cols = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> rows >> cols >> t.temperature)) {
      throw ParseError("expected header 'nodes classes temperature'", line_no);
    }
  }
  t.probs = Tensor(rows, cols);
  t.nodes.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!next_line()) throw ParseError("expected " + std::to_string(rows) + " rows", line_no);
    std::istringstream ss(line);
    long long node = -1;
    if (!(ss >> node) || node < 0) throw ParseError("bad node index", line_no);
    t.nodes.push_back(static_cast<NodeId>(node));
    for (std::size_t j = 0; j < cols; ++j) {
      if (!(ss >> t.probs(i, j))) throw ParseError("expected " + std::to_string(cols) + " probabilities", line_no);
    }
  }
  return t;
}

void save_teacher_output(const TeacherOutput& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write teacher output " + path.string());
  write_teacher_output(out, t);
}

TeacherOutput load_teacher_output(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open teacher output " + path.string());
  return parse_teacher_output(in);
}

}  // namespace samlp
