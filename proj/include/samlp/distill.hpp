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
#include <iosfwd>
#include <vector>

#include "samlp/scenario.hpp"
#include "samlp/student.hpp"
#include "samlp/teacher.hpp"

namespace samlp {

/// Virtual samples: every row i is paired with row perm[i] and both rows are
/// combined with weights lambda and 1 - lambda.
struct MixedBatch {
  double lambda = 1.0;
  std::vector<Index> permutation;
  Tensor x_mixed;
  SparseRows rows_mixed;
  Tensor teacher_mixed;
};

/// Deterministic mixing with a given lambda and permutation. Entries whose
/// mixed weight is exactly zero are dropped, so lambda = 1 returns the batch
/// itself and lambda = 0 the permuted batch.
MixedBatch mix_batch(const Tensor& x, const SparseRows& rows, const Tensor& teacher,
                     double lambda, std::vector<Index> permutation);
/// lambda ~ Beta(eta, eta), one draw per batch; permutation uniform.
MixedBatch sample_mix(const Tensor& x, const SparseRows& rows, const Tensor& teacher, double eta,
                      Rng& rng);

/// delta * KL(teacher || student) + (1 - delta) * KL(teacher_mixed || student_mixed),
/// on probabilities.
Var distill_loss(Var student, Var student_mixed, const Tensor& teacher,
                 const Tensor& teacher_mixed, double delta);
/// Same objective on logits (log-sum-exp path used for training).
Var distill_loss_logits(Var student_logits, Var student_mixed_logits, const Tensor& teacher,
                        const Tensor& teacher_mixed, double delta);

struct DistillConfig {
  double eta = 0.2;
  double delta = 0.5;
  /// Weight of the distillation term against CE.
  double loss_weight = 0.8;
  std::size_t epochs = 300;
  double lr = 0.01;
  double weight_decay = 5e-4;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  /// Student logits are divided by this before the KL terms.
  double temperature = 1.0;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double ce_loss = 0.0;
  double kd_loss = 0.0;
  double kd_mix_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainReport {
  std::vector<EpochMetrics> log;
  std::size_t best_epoch = 0;
  double best_select_acc = 0.0;
};

/// `epoch,ce_loss,kd_loss,kd_mix_loss,val_acc`
void write_metrics_csv(std::ostream& out, const TrainReport& report);

/// Minibatches over every node; CE on the train nodes of each batch, KD with
/// structure mixing on all of them. A null teacher (or loss_weight 0) gives
/// plain supervised training over the train nodes.
TrainReport train_student_trans(SaMlp& student, const TeacherOutput* teacher,
                                const ScenarioPlan& plan, const DistillConfig& config,
                                NodeAccessGuard* guard = nullptr);
/// Same loop restricted to the labelled subgraph. Reading any val/test node,
/// including a soft label for one, throws LeakageError.
TrainReport train_student_ind(SaMlp& student, const TeacherOutput* teacher,
                              const ScenarioPlan& plan, const DistillConfig& config,
                              NodeAccessGuard* guard = nullptr);
/// Feature-only student: the MLP baseline with a null teacher, the GLNN
/// baseline otherwise (callers set delta = 1 for plain logit KD).
TrainReport train_mlp(FeatureMlp& mlp, const TeacherOutput* teacher, const ScenarioPlan& plan,
                      const DistillConfig& config, NodeAccessGuard* guard = nullptr);
/// Freezes the stage-1 model and fits only the latent structure encoder
/// (allocated here if missing) by re-running the distillation objective with
/// H_A taken from features.
TrainReport train_stage2(SaMlp& student, const TeacherOutput& teacher, const ScenarioPlan& plan,
                         const DistillConfig& config, NodeAccessGuard* guard = nullptr);

/// Rows with neighbours use the explicit structure path, empty rows the latent
/// one; output rows follow input order.
Tensor route_mixed_inference(SaMlp& student, const Tensor& x_batch, const SparseRows& rows);

}  // namespace samlp
