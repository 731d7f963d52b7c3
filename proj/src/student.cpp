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

#include "samlp/student.hpp"

#include "samlp/errors.hpp"
#include "samlp/ops.hpp"

namespace samlp {

Decoder::Decoder(std::size_t h, std::size_t num_classes, Rng& rng)
    : norm_in(h), hidden(h, h, rng), norm_hidden(h), out(h, num_classes, rng) {}

Var Decoder::forward(Tape& tape, Var h, double dropout, bool training, Rng& rng,
                     bool trainable) {
  Var z = ops::relu(norm_in.forward(tape, h, trainable));
  z = ops::dropout(z, dropout, training, rng);
  z = ops::relu(norm_hidden.forward(tape, hidden.forward(tape, z, trainable), trainable));
  z = ops::dropout(z, dropout, training, rng);
  return out.forward(tape, z, trainable);
}

void Decoder::collect(const std::string& prefix, std::vector<NamedParameter>& out_params) {
  norm_in.collect(prefix + ".norm_in", out_params);
  hidden.collect(prefix + ".hidden", out_params);
  norm_hidden.collect(prefix + ".norm_hidden", out_params);
  out.collect(prefix + ".out", out_params);
}

FeatureMlp::FeatureMlp(std::size_t in_dim, std::size_t h, std::size_t num_classes, Rng& rng,
                       double p)
    : encoder(in_dim, h, rng), decoder(h, num_classes, rng), dropout(p) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("mlp: dropout must lie in [0, 1)");
}

void FeatureMlp::collect(const std::string& prefix, std::vector<NamedParameter>& out) {
  encoder.collect(prefix + ".encoder", out);
  decoder.collect(prefix + ".decoder", out);
}

Var glnn_forward(FeatureMlp& mlp, Tape& tape, Var x, double dropout, bool training, Rng& rng) {
  return mlp.decoder.forward(tape, mlp.encoder.forward(tape, x), dropout, training, rng);
}

SaMlp::SaMlp(const StudentConfig& cfg, Rng& rng) : config(cfg) {
  if (cfg.in_dim == 0 || cfg.struct_cols == 0 || cfg.hidden == 0 || cfg.num_classes == 0) {
    throw ConfigError("student: in_dim, struct_cols, hidden and num_classes must be positive");
  }
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) {
    throw ConfigError("student: dropout must lie in [0, 1)");
  }
  feature = FeatureMlp(cfg.in_dim, cfg.hidden, cfg.num_classes, rng, cfg.dropout);
  struct_encoder = LinearLayer(cfg.struct_cols, cfg.hidden, rng);
  struct_decoder = Decoder(cfg.hidden, cfg.num_classes, rng);
  gate = LinearLayer(2 * cfg.hidden, 1, rng);
  gate.bias.value.fill(0.0);
}

void SaMlp::add_latent_encoder(Rng& rng) {
  latent_encoder = LinearLayer(config.in_dim, config.hidden, rng);
}

std::vector<NamedParameter> SaMlp::base_parameters() {
  std::vector<NamedParameter> out;
  feature.collect("feature", out);
  struct_encoder.collect("struct_encoder", out);
  struct_decoder.collect("struct_decoder", out);
  gate.collect("gate", out);
  return out;
}

std::vector<NamedParameter> SaMlp::latent_parameters() {
  std::vector<NamedParameter> out;
  if (latent_encoder) latent_encoder->collect("latent_encoder", out);
  return out;
}

std::vector<NamedParameter> SaMlp::parameters() {
  auto out = base_parameters();
  for (auto& p : latent_parameters()) out.push_back(p);
  return out;
}

std::pair<Var, Var> samlp_encode(SaMlp& model, Tape& tape, Var x, const StructureSource& source,
                                 const StudentOptions& opts) {
  if (x.cols() != model.config.in_dim) {
    throw DimensionError("student: features " + x.value().shape_str() + ", expected " +
                         std::to_string(model.config.in_dim) + " columns");
  }
  const bool base = !opts.freeze_base;
  Var h_x = model.feature.encoder.forward(tape, x, base);
  Var h_a;
  switch (source.kind) {
    case StructureSource::Kind::kExplicit: {
      const SparseRows& rows = *source.rows;
      if (rows.n_rows() != x.rows() || rows.n_cols() != model.config.struct_cols) {
        throw DimensionError("student: structure rows " + std::to_string(rows.n_rows()) + "x" +
                             std::to_string(rows.n_cols()) + " for " +
                             std::to_string(x.rows()) + " nodes and " +
                             std::to_string(model.config.struct_cols) + " columns");
      }
      h_a = model.struct_encoder.forward_sparse(tape, rows, base);
      break;
    }
    case StructureSource::Kind::kLatent:
      if (!model.latent_encoder) throw ConfigError("student has no latent structure encoder");
      h_a = model.latent_encoder->forward(tape, x);
      break;
    case StructureSource::Kind::kZero:
      h_a = ops::add_row(tape.constant(Tensor(x.rows(), model.config.hidden)),
                         leaf(tape, model.struct_encoder.bias, base));
      break;
  }
  return {h_x, h_a};
}

StudentTrace samlp_decode_fuse(SaMlp& model, Tape& tape, Var h_x, Var h_a,
                               const StudentOptions& opts) {
  if (opts.training && opts.rng == nullptr) throw ConfigError("student: training needs an rng");
  Rng fallback(0);
  Rng& rng = opts.rng ? *opts.rng : fallback;
  const bool base = !opts.freeze_base;
  const double p = model.config.dropout;
  StudentTrace t;
  t.h_x = h_x;
  t.h_a = h_a;
  t.z_x = model.feature.decoder.forward(tape, h_x, p, opts.training, rng, base);
  t.z_a = model.struct_decoder.forward(tape, h_a, p, opts.training, rng, base);
  switch (opts.gate) {
    case GateMode::kLearned:
      t.alpha = ops::sigmoid(model.gate.forward(tape, ops::concat_cols(h_a, h_x), base));
      break;
    case GateMode::kPinZero:
      t.alpha = tape.constant(Tensor(h_x.rows(), 1, 0.0));
      break;
    case GateMode::kPinOne:
      t.alpha = tape.constant(Tensor(h_x.rows(), 1, 1.0));
      break;
  }
  t.logits = ops::add(ops::mul_rowwise(t.z_x, ops::one_minus(t.alpha)),
                      ops::mul_rowwise(t.z_a, t.alpha));
  t.probs = ops::softmax_rows(t.logits);
  return t;
}

StudentTrace samlp_forward(SaMlp& model, Tape& tape, Var x, const StructureSource& source,
                           const StudentOptions& opts) {
  auto [h_x, h_a] = samlp_encode(model, tape, x, source, opts);
  return samlp_decode_fuse(model, tape, h_x, h_a, opts);
}

Tensor samlp_predict(SaMlp& model, const Tensor& x, const StructureSource& source) {
  Tape tape(false);
  const auto t = samlp_forward(model, tape, tape.constant_ref(x), source, {});
  return kernels::softmax_rows(t.logits.value());
}

Tensor mlp_predict(FeatureMlp& mlp, const Tensor& x) {
  Tape tape(false);
  Rng unused(0);
  return kernels::softmax_rows(glnn_forward(mlp, tape, tape.constant_ref(x), 0.0, false, unused).value());
}

Tensor samlp_alpha(SaMlp& model, const Tensor& x, const StructureSource& source) {
  Tape tape(false);
  return samlp_forward(model, tape, tape.constant_ref(x), source, {}).alpha.value();
}

Checkpoint samlp_checkpoint(SaMlp& model) {
  Checkpoint ckpt;
  ckpt.kind = "samlp";
  const auto& c = model.config;
  ckpt.meta = {{"in_dim", static_cast<double>(c.in_dim)},
               {"struct_cols", static_cast<double>(c.struct_cols)},
               {"hidden", static_cast<double>(c.hidden)},
               {"num_classes", static_cast<double>(c.num_classes)},
               {"dropout", c.dropout},
               {"latent", model.latent_encoder ? 1.0 : 0.0}};
  ckpt.tensors = snapshot_tensors(model.parameters());
  return ckpt;
}

SaMlp samlp_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "samlp") throw ConfigError("checkpoint holds a '" + ckpt.kind + "' model");
  StudentConfig c;
  c.in_dim = static_cast<std::size_t>(ckpt.meta_at("in_dim"));
  c.struct_cols = static_cast<std::size_t>(ckpt.meta_at("struct_cols"));
  c.hidden = static_cast<std::size_t>(ckpt.meta_at("hidden"));
  c.num_classes = static_cast<std::size_t>(ckpt.meta_at("num_classes"));
  c.dropout = ckpt.meta_at("dropout");
  Rng rng(0);
  SaMlp model(c, rng);
  if (ckpt.meta_at("latent") != 0.0) model.add_latent_encoder(rng);
  restore_tensors(model.parameters(), ckpt.tensors);
  return model;
}

Checkpoint mlp_checkpoint(FeatureMlp& mlp) {
  Checkpoint ckpt;
  ckpt.kind = "mlp";
  ckpt.meta = {{"in_dim", static_cast<double>(mlp.encoder.in_dim())},
               {"hidden", static_cast<double>(mlp.encoder.out_dim())},
               {"num_classes", static_cast<double>(mlp.decoder.out.out_dim())},
               {"dropout", mlp.dropout}};
  std::vector<NamedParameter> params;
  mlp.collect("feature", params);
  ckpt.tensors = snapshot_tensors(params);
  return ckpt;
}

FeatureMlp mlp_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "mlp") throw ConfigError("checkpoint holds a '" + ckpt.kind + "' model");
  Rng rng(0);
  FeatureMlp mlp(static_cast<std::size_t>(ckpt.meta_at("in_dim")),
                 static_cast<std::size_t>(ckpt.meta_at("hidden")),
                 static_cast<std::size_t>(ckpt.meta_at("num_classes")), rng,
                 ckpt.meta_at("dropout"));
  std::vector<NamedParameter> params;
  mlp.collect("feature", params);
  restore_tensors(params, ckpt.tensors);
  return mlp;
}

}  // namespace samlp
