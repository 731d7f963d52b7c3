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

#include "samlp/distill.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <ostream>

#include "samlp/adam.hpp"
#include "samlp/errors.hpp"
#include "samlp/ops.hpp"

namespace samlp {

MixedBatch mix_batch(const Tensor& x, const SparseRows& rows, const Tensor& teacher,
                     double lambda, std::vector<Index> permutation) {
  const std::size_t n = x.rows();
  if (rows.n_rows() != n || teacher.rows() != n || permutation.size() != n) {
    throw DimensionError("mix_batch: features, rows, teacher and permutation must align");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("mix_batch: lambda outside [0, 1]");
  std::vector<bool> seen(n, false);
  for (Index p : permutation) {
    if (p >= n || seen[p]) throw ConfigError("mix_batch: not a permutation");
    seen[p] = true;
  }
  const double mu = 1.0 - lambda;

  MixedBatch m;
  m.lambda = lambda;
  auto mix_dense = [&](const Tensor& a) {
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < n; ++i) {
      const auto own = a.row(i);
      const auto other = a.row(permutation[i]);
      auto dst = out.row(i);
      for (std::size_t j = 0; j < a.cols(); ++j) dst[j] = lambda * own[j] + mu * other[j];
    }
    return out;
  };
  m.x_mixed = mix_dense(x);
  m.teacher_mixed = mix_dense(teacher);

  // Sorted merge of row i and row perm[i].
  std::vector<std::size_t> row_ptr{0};
  std::vector<Index> cols;
  std::vector<double> weights;
  auto emit = [&](Index c, double w) {
    if (w != 0.0) {
      cols.push_back(c);
      weights.push_back(w);
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto ca = rows.row_cols(i);
    const auto wa = rows.row_weights(i);
    const auto cb = rows.row_cols(permutation[i]);
    const auto wb = rows.row_weights(permutation[i]);
    std::size_t a = 0;
    std::size_t b = 0;
    while (a < ca.size() || b < cb.size()) {
      if (b == cb.size() || (a < ca.size() && ca[a] < cb[b])) {
        emit(ca[a], lambda * wa[a]);
        ++a;
      } else if (a == ca.size() || cb[b] < ca[a]) {
        emit(cb[b], mu * wb[b]);
        ++b;
      } else {
        emit(ca[a], lambda * wa[a] + mu * wb[b]);
        ++a;
        ++b;
      }
    }
    row_ptr.push_back(cols.size());
  }
  m.rows_mixed =
      SparseRows(n, rows.n_cols(), std::move(row_ptr), std::move(cols), std::move(weights));
  m.permutation = std::move(permutation);
  return m;
}

MixedBatch sample_mix(const Tensor& x, const SparseRows& rows, const Tensor& teacher, double eta,
                      Rng& rng) {
  if (!(eta > 0.0)) throw ConfigError("sample_mix: eta must be positive");
  const double lambda = sample_beta(eta, eta, rng);
  return mix_batch(x, rows, teacher, lambda, random_permutation(x.rows(), rng));
}

namespace {

void check_delta(double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in [0, 1]");
}

// Written as kd + (1 - delta) * (kd_mix - kd) so identical terms give kd
// bit for bit.
Var combine(Var kd, Var kd_mix, double delta) {
  if (delta == 1.0) return kd;
  return ops::add(kd, ops::scale(ops::add(kd_mix, ops::scale(kd, -1.0)), 1.0 - delta));
}

}  // namespace

Var distill_loss(Var student, Var student_mixed, const Tensor& teacher,
                 const Tensor& teacher_mixed, double delta) {
  check_delta(delta);
  return combine(ops::kl_div(student, teacher), ops::kl_div(student_mixed, teacher_mixed), delta);
}

Var distill_loss_logits(Var student_logits, Var student_mixed_logits, const Tensor& teacher,
                        const Tensor& teacher_mixed, double delta) {
  check_delta(delta);
  return combine(ops::kl_div_logits(student_logits, teacher),
                 ops::kl_div_logits(student_mixed_logits, teacher_mixed), delta);
}

void DistillConfig::validate() const {
  if (!(eta > 0.0)) throw ConfigError("distill: eta must be positive");
  check_delta(delta);
  if (!(loss_weight >= 0.0 && loss_weight <= 1.0)) {
    throw ConfigError("distill: loss_weight must lie in [0, 1]");
  }
  if (batch_size == 0) throw ConfigError("distill: batch_size must be positive");
  if (!(lr > 0.0)) throw ConfigError("distill: lr must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("distill: weight_decay must be non-negative");
  if (!(temperature > 0.0)) throw ConfigError("distill: temperature must be positive");
}

void write_metrics_csv(std::ostream& out, const TrainReport& report) {
  out << "epoch,ce_loss,kd_loss,kd_mix_loss,val_acc\n";
  const auto flags = out.flags();
  const auto prec = out.precision(10);
  for (const auto& m : report.log) {
    out << m.epoch << ',' << m.ce_loss << ',' << m.kd_loss << ',' << m.kd_mix_loss << ','
        << m.val_acc << '\n';
  }
  out.precision(prec);
  out.flags(flags);
}

namespace {

class Runner {
 public:
  virtual ~Runner() = default;
  virtual Var logits(Tape& tape, Var x, const SparseRows& rows, bool training, Rng& rng) = 0;
  virtual std::vector<NamedParameter> trainable() = 0;
  virtual bool uses_rows() const = 0;
  virtual std::size_t num_classes() const = 0;
};

class SaMlpRunner final : public Runner {
 public:
  SaMlpRunner(SaMlp& model, bool latent) : model_(model), latent_(latent) {}

  Var logits(Tape& tape, Var x, const SparseRows& rows, bool training, Rng& rng) override {
    StudentOptions opts{.training = training, .rng = &rng, .freeze_base = latent_};
    const auto source = latent_ ? StructureSource::latent() : StructureSource::explicit_rows(rows);
    return samlp_forward(model_, tape, x, source, opts).logits;
  }
  std::vector<NamedParameter> trainable() override {
    return latent_ ? model_.latent_parameters() : model_.base_parameters();
  }
  bool uses_rows() const override { return !latent_; }
  std::size_t num_classes() const override { return model_.config.num_classes; }

 private:
  SaMlp& model_;
  bool latent_;
};

class MlpRunner final : public Runner {
 public:
  MlpRunner(FeatureMlp& mlp, double dropout) : mlp_(mlp), dropout_(dropout) {}

  Var logits(Tape& tape, Var x, const SparseRows&, bool training, Rng& rng) override {
    return glnn_forward(mlp_, tape, x, dropout_, training, rng);
  }
  std::vector<NamedParameter> trainable() override {
    std::vector<NamedParameter> out;
    mlp_.collect("feature", out);
    return out;
  }
  bool uses_rows() const override { return false; }
  std::size_t num_classes() const override { return mlp_.decoder.out.out_dim(); }

 private:
  FeatureMlp& mlp_;
  double dropout_;
};

constexpr Index kNoRow = 0xFFFFFFFFu;

TrainReport run_loop(Runner& runner, const TeacherOutput* teacher, const ScenarioPlan& plan,
                     const DistillConfig& cfg, NodeAccessGuard* external_guard) {
  cfg.validate();
  std::optional<NodeAccessGuard> own_guard;
  if (external_guard == nullptr) own_guard.emplace(plan);
  NodeAccessGuard& guard = external_guard ? *external_guard : *own_guard;

  const Graph& g = plan.train_graph;
  const std::size_t n = g.num_nodes();
  if (runner.num_classes() != g.num_classes) {
    throw DimensionError("student predicts " + std::to_string(runner.num_classes()) +
                         " classes, graph has " + std::to_string(g.num_classes));
  }

  const bool use_kd = teacher != nullptr && cfg.loss_weight > 0.0;
  std::vector<Index> teacher_row(n, kNoRow);
  if (use_kd) {
    if (teacher->nodes.size() != teacher->probs.rows()) {
      throw DimensionError("teacher output: node list and probability rows differ");
    }
    if (teacher->probs.cols() != g.num_classes) {
      throw DimensionError("teacher output has " + std::to_string(teacher->probs.cols()) +
                           " classes, graph has " + std::to_string(g.num_classes));
    }
    for (std::size_t r = 0; r < teacher->nodes.size(); ++r) {
      const NodeId node = teacher->nodes[r];
      guard.touch(node);
      if (!plan.visible(node)) {
        throw ConfigError("teacher coverage mismatch: node " + std::to_string(node) +
                          " is outside the training graph");
      }
      teacher_row[plan.global_to_local[node]] = static_cast<Index>(r);
    }
  }

  std::vector<Index> pool;
  std::vector<bool> is_fit(n, false);
  for (NodeId v : plan.fit_nodes) is_fit[plan.global_to_local[v]] = true;
  if (use_kd) {
    for (NodeId v : plan.kd_nodes) {
      const Index l = plan.global_to_local[v];
      if (teacher_row[l] == kNoRow) {
        throw ConfigError("teacher coverage mismatch: no soft label for node " +
                          std::to_string(v));
      }
      pool.push_back(l);
    }
    if (pool.size() != teacher->nodes.size()) {
      throw ConfigError("teacher coverage mismatch: " + std::to_string(teacher->nodes.size()) +
                        " soft labels for " + std::to_string(pool.size()) + " targets");
    }
  } else {
    for (NodeId v : plan.fit_nodes) pool.push_back(plan.global_to_local[v]);
  }
  if (pool.empty()) throw ConfigError("student training has no nodes");

  std::vector<Index> select;
  std::vector<Index> select_labels;
  for (NodeId v : plan.select_nodes) {
    select.push_back(plan.global_to_local[v]);
    select_labels.push_back(g.labels[select.back()]);
  }
  guard.touch_local(select);
  if (runner.uses_rows()) guard.touch_local_rows(g.adjacency, select);
  const Tensor select_x = g.features.gather_rows(select);
  const SparseRows select_rows =
      runner.uses_rows() ? g.adjacency.select_rows(select) : SparseRows(select.size(), 0);

  auto named = runner.trainable();
  std::vector<Parameter*> ptrs;
  for (auto& p : named) ptrs.push_back(p.param);
  AdamOptimizer opt(ptrs, AdamConfig{.lr = cfg.lr, .weight_decay = cfg.weight_decay});

  Rng rng = make_rng(cfg.seed, 0xd1571);
  const double inv_t = 1.0 / cfg.temperature;
  const bool with_ce = !use_kd || cfg.loss_weight < 1.0;
  const bool with_mix = use_kd && cfg.delta < 1.0;

  TrainReport report;
  report.best_select_acc = -1.0;
  auto best = snapshot_tensors(named);
  std::vector<Index> batch;
  std::vector<Index> fit_pos;
  std::vector<Index> fit_labels;
  std::vector<Index> t_rows;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order = random_permutation(pool.size(), rng);
    double ce_sum = 0.0, kd_sum = 0.0, mix_sum = 0.0;
    std::size_t ce_n = 0, kd_n = 0, mix_n = 0;
    for (std::size_t start = 0; start < pool.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(pool.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(pool[order[i]]);
      guard.touch_local(batch);
      if (runner.uses_rows()) guard.touch_local_rows(g.adjacency, batch);

      const Tensor x = g.features.gather_rows(batch);
      const SparseRows rows =
          runner.uses_rows() ? g.adjacency.select_rows(batch) : SparseRows(batch.size(), 0);
      fit_pos.clear();
      fit_labels.clear();
      for (std::size_t i = 0; i < batch.size(); ++i) {
        if (is_fit[batch[i]]) {
          fit_pos.push_back(static_cast<Index>(i));
          fit_labels.push_back(g.labels[batch[i]]);
        }
      }

      Tape tape;
      std::optional<MixedBatch> mix;
      Var logits = runner.logits(tape, tape.constant_ref(x), rows, true, rng);
      std::optional<Var> loss;
      if (with_ce && !fit_pos.empty()) {
        Var ce = ops::cross_entropy_logits(ops::gather_rows(logits, fit_pos), fit_labels);
        ce_sum += ce.value()(0, 0);
        ++ce_n;
        loss = use_kd ? ops::scale(ce, 1.0 - cfg.loss_weight) : ce;
      }
      if (use_kd) {
        t_rows.clear();
        for (Index l : batch) t_rows.push_back(teacher_row[l]);
        const Tensor t = teacher->probs.gather_rows(t_rows);
        Var z = inv_t == 1.0 ? logits : ops::scale(logits, inv_t);
        Var kd = ops::kl_div_logits(z, t);
        kd_sum += kd.value()(0, 0);
        ++kd_n;
        Var dis = kd;
        if (with_mix) {
          mix = sample_mix(x, rows, t, cfg.eta, rng);
          Var zm = runner.logits(tape, tape.constant_ref(mix->x_mixed), mix->rows_mixed, true, rng);
          if (inv_t != 1.0) zm = ops::scale(zm, inv_t);
          Var kd_mix = ops::kl_div_logits(zm, mix->teacher_mixed);
          mix_sum += kd_mix.value()(0, 0);
          ++mix_n;
          dis = combine(kd, kd_mix, cfg.delta);
        }
        Var weighted = ops::scale(dis, cfg.loss_weight);
        loss = loss ? ops::add(*loss, weighted) : weighted;
      }
      if (!loss) continue;
      const double value = loss->value()(0, 0);
      if (!std::isfinite(value)) {
        throw NumericError("student loss is not finite at epoch " + std::to_string(epoch));
      }
      opt.zero_grad();
      tape.backward(*loss);
      opt.step();
    }

    Tape eval_tape(false);
    Var eval_logits =
        runner.logits(eval_tape, eval_tape.constant_ref(select_x), select_rows, false, rng);
    const double acc = accuracy(eval_logits.value(), select_labels);
    auto avg = [](double s, std::size_t k) { return k ? s / static_cast<double>(k) : 0.0; };
    report.log.push_back(
        {epoch, avg(ce_sum, ce_n), avg(kd_sum, kd_n), avg(mix_sum, mix_n), acc});
    if (acc > report.best_select_acc) {
      report.best_select_acc = acc;
      report.best_epoch = epoch;
      best = snapshot_tensors(named);
    }
  }
  restore_tensors(named, best);
  return report;
}

}  // namespace

TrainReport train_student_trans(SaMlp& student, const TeacherOutput* teacher,
                                const ScenarioPlan& plan, const DistillConfig& config,
                                NodeAccessGuard* guard) {
  if (plan.scenario != Scenario::kTransductive) {
    throw ConfigError("train_student_trans needs a transductive plan");
  }
  SaMlpRunner runner(student, false);
  return run_loop(runner, teacher, plan, config, guard);
}

TrainReport train_student_ind(SaMlp& student, const TeacherOutput* teacher,
                              const ScenarioPlan& plan, const DistillConfig& config,
                              NodeAccessGuard* guard) {
  if (!is_inductive(plan.scenario)) throw ConfigError("train_student_ind needs an inductive plan");
  SaMlpRunner runner(student, false);
  return run_loop(runner, teacher, plan, config, guard);
}

TrainReport train_mlp(FeatureMlp& mlp, const TeacherOutput* teacher, const ScenarioPlan& plan,
                      const DistillConfig& config, NodeAccessGuard* guard) {
  MlpRunner runner(mlp, mlp.dropout);
  return run_loop(runner, teacher, plan, config, guard);
}

TrainReport train_stage2(SaMlp& student, const TeacherOutput& teacher, const ScenarioPlan& plan,
                         const DistillConfig& config, NodeAccessGuard* guard) {
  if (!student.latent_encoder) {
    Rng rng = make_rng(config.seed, 0x1a7e);
    student.add_latent_encoder(rng);
  }
  SaMlpRunner runner(student, true);
  return run_loop(runner, &teacher, plan, config, guard);
}

Tensor route_mixed_inference(SaMlp& student, const Tensor& x_batch, const SparseRows& rows) {
  if (rows.n_rows() != x_batch.rows()) {
    throw DimensionError("route_mixed_inference: features and rows disagree on batch size");
  }
  std::vector<Index> connected;
  std::vector<Index> isolated;
  for (std::size_t i = 0; i < rows.n_rows(); ++i) {
    (rows.row_empty(i) ? isolated : connected).push_back(static_cast<Index>(i));
  }
  if (!isolated.empty() && !student.latent_encoder) {
    throw ConfigError("route_mixed_inference: isolated nodes need the latent structure encoder");
  }
  Tensor out(x_batch.rows(), student.config.num_classes);
  auto scatter = [&out](const Tensor& part, std::span<const Index> where) {
    for (std::size_t i = 0; i < where.size(); ++i) {
      const auto src = part.row(i);
      std::copy(src.begin(), src.end(), out.row(where[i]).begin());
    }
  };
  if (!connected.empty()) {
    const SparseRows sub = rows.select_rows(connected);
    scatter(samlp_predict(student, x_batch.gather_rows(connected),
                          StructureSource::explicit_rows(sub)),
            connected);
  }
  if (!isolated.empty()) {
    scatter(samlp_predict(student, x_batch.gather_rows(isolated), StructureSource::latent()),
            isolated);
  }
  return out;
}

}  // namespace samlp
