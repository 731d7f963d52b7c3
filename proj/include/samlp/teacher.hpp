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
#include <vector>

#include "samlp/checkpoint.hpp"
#include "samlp/layers.hpp"
#include "samlp/scenario.hpp"

namespace samlp {

struct SageConfig {
  std::size_t in_dim = 0;
  std::size_t hidden = 64;
  std::size_t num_classes = 0;
  std::size_t num_layers = 2;
  double dropout = 0.5;
  // Identity skip on hidden layers whose input and output widths agree.
  bool residual = false;
  Activation activation = Activation::kRelu;
};

/// One mean-aggregator layer: W_self h_v + W_nbr mean_{u in N(v)} h_u.
struct SageLayer {
  LinearLayer self;
  LinearLayer neighbor;
  LayerNormParams norm;  // unused on the output layer
};

struct SageParams {
  SageParams() = default;
  SageParams(const SageConfig& config, Rng& rng);

  SageConfig config;
  std::vector<SageLayer> layers;

  std::vector<NamedParameter> parameters();
};

/// Logits for every row of `features` over the graph whose mean-normalized
/// adjacency is `mean_adj` (see row_normalized).
Var sage_forward(SageParams& params, Tape& tape, Var features, const SparseRows& mean_adj,
                 bool training, Rng& rng);

/// Logits for `queries` only. Gathers the K-hop neighbourhood of the batch over
/// `adjacency` and propagates through it; nothing is cached between calls.
Tensor sage_infer(SageParams& params, const Tensor& features, const SparseRows& adjacency,
                  std::span<const NodeId> queries);

struct TeacherTrainConfig {
  SageConfig model;  // in_dim and num_classes are filled from the graph
  double lr = 0.01;
  double weight_decay = 5e-4;
  std::size_t epochs = 200;
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

/// Soft labels for distillation, one row per node in `nodes` (global ids).
struct TeacherOutput {
  std::vector<NodeId> nodes;
  Tensor probs;
  double temperature = 1.0;
};

struct TeacherEpoch {
  std::size_t epoch = 0;
  double loss = 0.0;
  double select_acc = 0.0;
};

struct TrainedTeacher {
  SageParams params;
  TeacherOutput output;
  std::vector<TeacherEpoch> log;
  std::size_t best_epoch = 0;
  double best_select_acc = 0.0;
};

/// Full-batch CE on the plan's fit nodes over its training graph, keeping the
/// parameters with the best selection accuracy. Emits soft labels for the
/// plan's kd nodes. Throws NumericError if the loss stops being finite.
TrainedTeacher train_teacher(const ScenarioPlan& plan, const TeacherTrainConfig& config,
                             NodeAccessGuard* guard = nullptr);

/// Class probabilities for `nodes` at evaluation time (the plan's eval graph).
Tensor teacher_predict(SageParams& params, const Graph& g, const ScenarioPlan& plan,
                       std::span<const NodeId> nodes);

Checkpoint teacher_checkpoint(SageParams& params);
SageParams teacher_from_checkpoint(const Checkpoint& ckpt);

/// Text format: header `nodes C temperature`, then `node p_1 ... p_C` per line.
void write_teacher_output(std::ostream& out, const TeacherOutput& t);
TeacherOutput parse_teacher_output(std::istream& in);
void save_teacher_output(const TeacherOutput& t, const std::filesystem::path& path);
TeacherOutput load_teacher_output(const std::filesystem::path& path);

}  // namespace samlp
