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

#include "samlp/eval.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "samlp/distill.hpp"
#include "samlp/errors.hpp"

namespace samlp {

EvalReport evaluate(const Tensor& probs, std::span<const Index> labels,
                    std::span<const NodeId> nodes, std::size_t num_classes) {
  if (nodes.empty()) throw ConfigError("evaluate: empty node subset");
  if (probs.rows() != nodes.size()) {
    throw DimensionError("evaluate: " + probs.shape_str() + " predictions for " +
                         std::to_string(nodes.size()) + " nodes");
  }
  EvalReport r;
  r.n_eval = nodes.size();
  r.per_class_count.assign(num_classes, 0);
  std::vector<std::size_t> hits(num_classes, 0);
  std::size_t total_hits = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Index y = labels[nodes[i]];
    if (y >= num_classes) throw DimensionError("evaluate: label out of range");
    const bool hit = argmax(probs.row(i)) == y;
    ++r.per_class_count[y];
    hits[y] += hit;
    total_hits += hit;
  }
  r.accuracy = static_cast<double>(total_hits) / static_cast<double>(nodes.size());
  r.per_class_accuracy.assign(num_classes, 0.0);
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (r.per_class_count[k] > 0) {
      r.per_class_accuracy[k] =
          static_cast<double>(hits[k]) / static_cast<double>(r.per_class_count[k]);
    }
  }
  return r;
}

std::vector<AggregateRow> aggregate(std::span<const EvalReport> reports) {
  std::vector<AggregateRow> rows;
  std::vector<std::vector<double>> values;
  for (const auto& r : reports) {
    std::size_t k = 0;
    while (k < rows.size() && !(rows[k].scenario == r.scenario &&
                                rows[k].isolated_ratio == r.isolated_ratio &&
                                rows[k].model == r.model)) {
      ++k;
    }
    if (k == rows.size()) {
      rows.push_back({r.scenario, r.isolated_ratio, r.model});
      values.emplace_back();
    }
    values[k].push_back(r.accuracy);
  }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& v = values[k];
    double sum = 0.0;
    for (double a : v) sum += a;
    const double mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double a : v) ss += (a - mean) * (a - mean);
    rows[k].n_seeds = v.size();
    rows[k].mean = mean;
    rows[k].std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  }
  return rows;
}

void write_reports_csv(std::ostream& out, std::span<const EvalReport> reports,
                       std::span<const AggregateRow> aggregates) {
  out << "scenario,isolated_ratio,model,seed,accuracy,std,n_eval,per_class_accuracy\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& r : reports) {
    out << r.scenario << ',' << r.isolated_ratio << ',' << r.model << ',' << r.seed << ','
        << r.accuracy << ",," << r.n_eval << ',';
    for (std::size_t k = 0; k < r.per_class_accuracy.size(); ++k) {
      out << (k ? ";" : "") << r.per_class_accuracy[k];
    }
    out << '\n';
  }
  for (const auto& a : aggregates) {
    out << a.scenario << ',' << a.isolated_ratio << ',' << a.model << ",mean," << a.mean << ','
        << a.std << ',' << a.n_seeds << ",\n";
  }
}

StudentInputs student_inputs(const Graph& g, const ScenarioPlan& plan,
                             std::span<const NodeId> nodes) {
  return {g.features.gather_rows(nodes), plan.eval_rows.select_rows(nodes)};
}

Tensor student_predict(SaMlp& student, const StudentInputs& in, StudentPath path) {
  switch (path) {
    case StudentPath::kExplicit:
      return samlp_predict(student, in.x, StructureSource::explicit_rows(in.rows));
    case StudentPath::kLatent:
      return samlp_predict(student, in.x, StructureSource::latent());
    case StudentPath::kRouted:
      return route_mixed_inference(student, in.x, in.rows);
  }
  throw ConfigError("unknown student path");
}

std::size_t AlphaHistogram::total() const {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

AlphaHistogram alpha_histogram(std::span<const double> alphas, std::size_t bins) {
  if (bins == 0) throw ConfigError("alpha histogram needs at least one bin");
  AlphaHistogram h;
  h.counts.assign(bins, 0);
  for (std::size_t b = 0; b <= bins; ++b) {
    h.edges.push_back(static_cast<double>(b) / static_cast<double>(bins));
  }
  double sum = 0.0;
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw NumericError("gate value outside [0, 1]");
    const auto b = std::min(bins - 1, static_cast<std::size_t>(a * static_cast<double>(bins)));
    ++h.counts[b];
    sum += a;
  }
  h.mean = alphas.empty() ? 0.0 : sum / static_cast<double>(alphas.size());
  return h;
}

void write_alpha_csv(std::ostream& out, const AlphaHistogram& h) {
  out << std::fixed << std::setprecision(6);
  out << "# model=" << h.model << " dataset=" << h.dataset << " mean_alpha=" << h.mean
      << " n=" << h.total() << '\n';
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out << h.edges[b] << ',' << h.edges[b + 1] << ',' << h.counts[b] << '\n';
  }
}

AlphaHistogram export_alpha(SaMlp& student, const Graph& g, const ScenarioPlan& plan,
                            const std::filesystem::path& path, const std::string& model_tag,
                            const std::string& dataset_tag) {
  const auto in = student_inputs(g, plan, plan.test_nodes);
  const Tensor alpha = samlp_alpha(student, in.x, StructureSource::explicit_rows(in.rows));
  AlphaHistogram h = alpha_histogram(alpha.data());
  h.model = model_tag;
  h.dataset = dataset_tag;
  if (!path.empty()) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_alpha_csv(out, h);
  }
  return h;
}

}  // namespace samlp
