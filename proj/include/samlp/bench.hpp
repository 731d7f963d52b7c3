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

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "samlp/eval.hpp"
#include "samlp/teacher.hpp"

namespace samlp {

/// Every model is timed by the same harness: `warmup` untimed calls, then
/// `reps` timed calls on a steady clock. Each call must return one finite
/// output row per query; the harness folds the outputs into a sink so the
/// work cannot be optimized away.
struct LatencyConfig {
  std::size_t warmup = 5;
  std::size_t reps = 30;
};

struct LatencyReport {
  std::string model;
  std::size_t batch_size = 0;
  std::size_t warmup = 0;
  std::size_t reps = 0;
  double median_ms = 0.0;
  double p95_ms = 0.0;  // nearest rank
  double nodes_per_second = 0.0;
};

LatencyReport time_inference(const std::string& model, std::size_t batch_size,
                             const std::function<Tensor()>& call, const LatencyConfig& config);

/// K-hop gather over `adjacency` plus the teacher forward, per call.
LatencyReport bench_teacher(SageParams& teacher, const Graph& g, const SparseRows& adjacency,
                            std::span<const NodeId> queries, const LatencyConfig& config,
                            const std::string& tag = "teacher");
/// Feature (and, for the explicit or routed path, structure row) gather plus
/// the student forward, per call.
LatencyReport bench_student(SaMlp& student, const Graph& g, const SparseRows& rows,
                            std::span<const NodeId> queries, StudentPath path,
                            const LatencyConfig& config, const std::string& tag);
LatencyReport bench_mlp(FeatureMlp& mlp, const Graph& g, std::span<const NodeId> queries,
                        const LatencyConfig& config, const std::string& tag = "mlp");

/// Header line documents the protocol.
void write_latency_csv(std::ostream& out, std::span<const LatencyReport> reports);

}  // namespace samlp
