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

#include "samlp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "samlp/distill.hpp"
#include "samlp/errors.hpp"

namespace samlp {

namespace {

volatile double g_sink = 0.0;

void consume(const Tensor& out, std::size_t batch) {
  if (out.rows() != batch || out.cols() == 0 || !out.all_finite()) {
    throw NumericError("benchmark call produced " + out.shape_str() + " output for " +
                       std::to_string(batch) + " queries");
  }
  double s = 0.0;
  for (double v : out.data()) s += v;
  g_sink = g_sink + s;
}

}  // namespace

LatencyReport time_inference(const std::string& model, std::size_t batch_size,
                             const std::function<Tensor()>& call, const LatencyConfig& config) {
  if (config.reps == 0) throw ConfigError("benchmark needs at least one repetition");
  if (batch_size == 0) throw ConfigError("benchmark needs at least one query node");
  for (std::size_t i = 0; i < config.warmup; ++i) consume(call(), batch_size);
  std::vector<double> ms;
  ms.reserve(config.reps);
  for (std::size_t i = 0; i < config.reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Tensor out = call();
    const auto t1 = std::chrono::steady_clock::now();
    consume(out, batch_size);
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(ms.begin(), ms.end());
  const std::size_t n = ms.size();
  LatencyReport r;
  r.model = model;
  r.batch_size = batch_size;
  r.warmup = config.warmup;
  r.reps = config.reps;
  r.median_ms = n % 2 ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  r.p95_ms = ms[std::max<std::size_t>(rank, 1) - 1];
  // Clock granularity can round a very fast call to zero.
  const double floor_ms = 1e-6;
  r.median_ms = std::max(r.median_ms, floor_ms);
  r.p95_ms = std::max(r.p95_ms, r.median_ms);
  r.nodes_per_second = static_cast<double>(batch_size) / (r.median_ms * 1e-3);
  return r;
}

LatencyReport bench_teacher(SageParams& teacher, const Graph& g, const SparseRows& adjacency,
                            std::span<const NodeId> queries, const LatencyConfig& config,
                            const std::string& tag) {
  return time_inference(
      tag, queries.size(),
      [&] { return sage_infer(teacher, g.features, adjacency, queries); }, config);
}

LatencyReport bench_student(SaMlp& student, const Graph& g, const SparseRows& rows,
                            std::span<const NodeId> queries, StudentPath path,
                            const LatencyConfig& config, const std::string& tag) {
  if (path != StudentPath::kLatent && rows.n_rows() != g.num_nodes()) {
    throw DimensionError("bench_student: structure rows do not cover the graph");
  }
  return time_inference(
      tag, queries.size(),
      [&] {
        const Tensor x = g.features.gather_rows(queries);
        if (path == StudentPath::kLatent) {
          return samlp_predict(student, x, StructureSource::latent());
        }
        const SparseRows sub = rows.select_rows(queries);
        if (path == StudentPath::kRouted) return route_mixed_inference(student, x, sub);
        return samlp_predict(student, x, StructureSource::explicit_rows(sub));
      },
      config);
}

LatencyReport bench_mlp(FeatureMlp& mlp, const Graph& g, std::span<const NodeId> queries,
                        const LatencyConfig& config, const std::string& tag) {
  return time_inference(
      tag, queries.size(), [&] { return mlp_predict(mlp, g.features.gather_rows(queries)); },
      config);
}

void write_latency_csv(std::ostream& out, std::span<const LatencyReport> reports) {
  if (!reports.empty()) {
    out << "# protocol: " << reports.front().warmup << " warmup calls, "
        << reports.front().reps
        << " timed calls, steady_clock, single thread, same query nodes for every model\n";
  }
  out << "model,batch_size,median_ms,p95_ms,nodes_per_second\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& r : reports) {
    out << r.model << ',' << r.batch_size << ',' << r.median_ms << ',' << r.p95_ms << ','
        << r.nodes_per_second << '\n';
  }
}

}  // namespace samlp
