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

#include <optional>
#include <string>
#include <vector>

#include "samlp/checkpoint.hpp"
#include "samlp/layers.hpp"

namespace samlp {

struct StudentConfig {
  std::size_t in_dim = 0;
  /// Width of the structure rows (the training graph's node count).
  std::size_t struct_cols = 0;
  std::size_t hidden = 64;
  std::size_t num_classes = 0;
  double dropout = 0.2;
};

/// LN -> ReLU -> dropout -> Linear(h, h) -> LN -> ReLU -> dropout -> Linear(h, C)
struct Decoder {
  Decoder() = default;
  Decoder(std::size_t hidden, std::size_t num_classes, Rng& rng);

  Var forward(Tape& tape, Var h, double dropout, bool training, Rng& rng, bool trainable = true);
  void collect(const std::string& prefix, std::vector<NamedParameter>& out);

  LayerNormParams norm_in;
  LinearLayer hidden;
  LayerNormParams norm_hidden;
  LinearLayer out;
};

/// Feature-only MLP: encoder Linear(d, h) followed by a decoder. This is the
/// plain MLP / GLNN student and also the feature path of SaMlp.
struct FeatureMlp {
  FeatureMlp() = default;
  FeatureMlp(std::size_t in_dim, std::size_t hidden, std::size_t num_classes, Rng& rng,
             double dropout = 0.2);

  LinearLayer encoder;
  Decoder decoder;
  double dropout = 0.2;

  void collect(const std::string& prefix, std::vector<NamedParameter>& out);
};

/// Logits of a FeatureMlp.
Var glnn_forward(FeatureMlp& mlp, Tape& tape, Var x, double dropout, bool training, Rng& rng);

struct SaMlp {
  SaMlp() = default;
  SaMlp(const StudentConfig& config, Rng& rng);

  StudentConfig config;
  FeatureMlp feature;
  LinearLayer struct_encoder;   // struct_cols -> hidden, applied to sparse rows
  Decoder struct_decoder;
  LinearLayer gate;             // 2 * hidden -> 1, bias starts at 0
  std::optional<LinearLayer> latent_encoder;  // d -> hidden, added for stage 2

  void add_latent_encoder(Rng& rng);

  /// Every parameter, latent encoder last when present.
  std::vector<NamedParameter> parameters();
  /// Everything except the latent encoder.
  std::vector<NamedParameter> base_parameters();
  std::vector<NamedParameter> latent_parameters();
};

/// Where H_A comes from.
struct StructureSource {
  enum class Kind { kExplicit, kLatent, kZero };
  Kind kind = Kind::kZero;
  const SparseRows* rows = nullptr;

  static StructureSource explicit_rows(const SparseRows& rows) { return {Kind::kExplicit, &rows}; }
  /// H_A = latent_encoder(x).
  static StructureSource latent() { return {Kind::kLatent, nullptr}; }
  /// An all-zero structure input, so H_A is the encoder bias.
  static StructureSource zero() { return {Kind::kZero, nullptr}; }
};

/// Pins alpha for ablations; kLearned uses the gate.
enum class GateMode { kLearned, kPinZero, kPinOne };

struct StudentOptions {
  bool training = false;
  Rng* rng = nullptr;  // required when training
  GateMode gate = GateMode::kLearned;
  /// Weights outside the latent encoder enter the tape as constants.
  bool freeze_base = false;
};

struct StudentTrace {
  Var h_x, h_a;
  Var z_x, z_a;
  Var alpha;   // rows x 1
  Var logits;  // (1 - alpha) z_x + alpha z_a
  Var probs;   // softmax of logits
};

/// H_X = feature encoder(x); H_A from `source`.
std::pair<Var, Var> samlp_encode(SaMlp& model, Tape& tape, Var x, const StructureSource& source,
                                 const StudentOptions& opts);
/// Decoders plus gated fusion of the two logit blocks.
StudentTrace samlp_decode_fuse(SaMlp& model, Tape& tape, Var h_x, Var h_a,
                               const StudentOptions& opts);
StudentTrace samlp_forward(SaMlp& model, Tape& tape, Var x, const StructureSource& source,
                           const StudentOptions& opts);

/// Probabilities without gradient bookkeeping.
Tensor samlp_predict(SaMlp& model, const Tensor& x, const StructureSource& source);
Tensor mlp_predict(FeatureMlp& mlp, const Tensor& x);
/// Gate value per row.
Tensor samlp_alpha(SaMlp& model, const Tensor& x, const StructureSource& source);

Checkpoint samlp_checkpoint(SaMlp& model);
SaMlp samlp_from_checkpoint(const Checkpoint& ckpt);
Checkpoint mlp_checkpoint(FeatureMlp& mlp);
FeatureMlp mlp_from_checkpoint(const Checkpoint& ckpt);

}  // namespace samlp
