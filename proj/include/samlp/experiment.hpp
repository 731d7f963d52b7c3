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
#include <optional>
#include <string>
#include <vector>

#include "samlp/distill.hpp"
#include "samlp/eval.hpp"
#include "samlp/graph.hpp"
#include "samlp/teacher.hpp"

namespace samlp {

/// Model roster tags:
///   teacher    message-passing teacher
///   mlp        feature-only MLP, labels only
///   glnn_kd    feature-only MLP distilled with plain logit KD
///   samlp      SA-MLP, labels only
///   samlp_kd   SA-MLP with structure-mixing KD (stage 1 in inductive scenarios)
///   samlp_kd2  samlp_kd plus the stage-2 latent encoder, routed inference
///              (inductive scenarios only; also reports samlp_kd2_latent)
struct ExperimentConfig {
  std::optional<SyntheticGraphConfig> generator;
  std::filesystem::path graph_path;
  SplitFractions fractions;
  std::vector<std::string> scenarios{"trans"};
  std::vector<double> isolated_ratios{0.5};
  std::vector<std::string> models{"teacher", "mlp", "glnn_kd", "samlp", "samlp_kd"};
  std::vector<std::uint64_t> seeds{0};
  TeacherTrainConfig teacher;
  std::size_t student_hidden = 64;
  double student_dropout = 0.2;
  DistillConfig distill;
  /// delta used for the glnn_kd baseline.
  double glnn_delta = 1.0;
  /// Reports are written here when non-empty.
  std::filesystem::path output_dir;
};

/// JSON keys mirror the struct; unknown keys and bad values raise ConfigError.
/// Example:
///   {"generator": {"n": 800, "homophily": 0.2, "seed": 7},
///    "scenarios": ["trans", "ind_with_connection"],
///    "models": ["teacher", "samlp_kd"], "seeds": [0, 1, 2],
///    "teacher": {"epochs": 200}, "student": {"epochs": 300, "delta": 0.5}}
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct AlphaRecord {
  std::string scenario;
  std::string model;
  std::uint64_t seed = 0;
  double mean_alpha = 0.0;
};

struct ExperimentResult {
  std::vector<EvalReport> reports;
  std::vector<AggregateRow> aggregates;
  std::vector<AlphaRecord> alpha;
  /// Mean accuracy for a (scenario, model) group, ratio matched for mixed_ind.
  const AggregateRow& find(const std::string& scenario, const std::string& model,
                           double isolated_ratio = 0.0) const;
};

/// For each seed: split, plan, teacher, cached soft labels, every student in
/// the roster, evaluation per scenario. Writes reports.csv, alpha.csv and one
/// metrics CSV per trained student when output_dir is set.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace samlp
