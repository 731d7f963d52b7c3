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

#include "samlp/scenario.hpp"
#include "samlp/student.hpp"

namespace samlp {

struct EvalReport {
  std::string scenario;
  double isolated_ratio = 0.0;
  std::string model;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::size_t n_eval = 0;
  std::vector<double> per_class_accuracy;  // 0 for classes absent from the subset
  std::vector<std::size_t> per_class_count;
};

/// Row i of `probs` is the prediction for nodes[i]. Argmax ties go to the
/// lowest class index. Throws ConfigError on an empty subset.
EvalReport evaluate(const Tensor& probs, std::span<const Index> labels,
                    std::span<const NodeId> nodes, std::size_t num_classes);

/// Mean and sample standard deviation (n - 1; 0 for a single seed) of the
/// accuracy of every (scenario, isolated_ratio, model) group, in first-seen order.
struct AggregateRow {
  std::string scenario;
  double isolated_ratio = 0.0;
  std::string model;
  std::size_t n_seeds = 0;
  double mean = 0.0;
  double std = 0.0;
};
std::vector<AggregateRow> aggregate(std::span<const EvalReport> reports);

/// One CSV: per-seed rows followed by aggregate rows (seed column "mean").
void write_reports_csv(std::ostream& out, std::span<const EvalReport> reports,
                       std::span<const AggregateRow> aggregates);

/// Evaluation-time student inputs for `nodes`: raw features and the plan's
/// structure rows.
struct StudentInputs {
  Tensor x;
  SparseRows rows;
};
StudentInputs student_inputs(const Graph& g, const ScenarioPlan& plan,
                             std::span<const NodeId> nodes);

enum class StudentPath { kExplicit, kLatent, kRouted };
Tensor student_predict(SaMlp& student, const StudentInputs& in, StudentPath path);

struct AlphaHistogram {
  std::vector<double> edges;  // bins + 1 values from 0 to 1
  std::vector<std::size_t> counts;
  double mean = 0.0;
  std::string model;
  std::string dataset;

  std::size_t total() const;
};

/// Bin b holds alpha in [b / bins, (b + 1) / bins); alpha = 1 lands in the last bin.
AlphaHistogram alpha_histogram(std::span<const double> alphas, std::size_t bins = 20);
void write_alpha_csv(std::ostream& out, const AlphaHistogram& h);

/// Gate values of the explicit path on the plan's test nodes, binned and
/// written to `path` when it is non-empty.
AlphaHistogram export_alpha(SaMlp& student, const Graph& g, const ScenarioPlan& plan,
                            const std::filesystem::path& path, const std::string& model_tag = "",
                            const std::string& dataset_tag = "");

}  // namespace samlp
