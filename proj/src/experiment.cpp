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

#include "samlp/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>

#include <json.hpp>

#include "samlp/errors.hpp"

namespace samlp {

namespace {

using nlohmann::json;

const std::set<std::string> kModels{"teacher", "mlp", "glnn_kd", "samlp", "samlp_kd", "samlp_kd2"};

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  check_keys(j, {"generator", "graph", "fractions", "scenarios", "isolated_ratios", "models",
                 "seeds", "teacher", "student", "output_dir"},
             "config");
  ExperimentConfig c;
  if (j.contains("generator") == j.contains("graph")) {
    throw ConfigError("config: give exactly one of 'generator' and 'graph'");
  }
  if (j.contains("generator")) {
    const json& gj = j["generator"];
    check_keys(gj, {"n", "d", "c", "avg_degree", "homophily", "feature_signal", "seed"},
               "generator");
    SyntheticGraphConfig gc;
    read(gj, "n", gc.n, "generator");
    read(gj, "d", gc.d, "generator");
    read(gj, "c", gc.c, "generator");
    read(gj, "avg_degree", gc.avg_degree, "generator");
    read(gj, "homophily", gc.homophily, "generator");
    read(gj, "feature_signal", gc.feature_signal, "generator");
    read(gj, "seed", gc.seed, "generator");
    c.generator = gc;
  } else {
    std::string path;
    read(j, "graph", path, "config");
    c.graph_path = path;
  }
  if (j.contains("fractions")) {
    std::vector<double> f;
    read(j, "fractions", f, "config");
    if (f.size() != 3) throw ConfigError("config.fractions: expected [train, val, test]");
    c.fractions = {f[0], f[1], f[2]};
  }
  read(j, "scenarios", c.scenarios, "config");
  read(j, "isolated_ratios", c.isolated_ratios, "config");
  read(j, "models", c.models, "config");
  read(j, "seeds", c.seeds, "config");
  std::string out_dir;
  read(j, "output_dir", out_dir, "config");
  c.output_dir = out_dir;

  if (j.contains("teacher")) {
    const json& tj = j["teacher"];
    check_keys(tj, {"hidden", "layers", "epochs", "lr", "weight_decay", "dropout", "residual",
                    "temperature"},
               "teacher");
    read(tj, "hidden", c.teacher.model.hidden, "teacher");
    read(tj, "layers", c.teacher.model.num_layers, "teacher");
    read(tj, "epochs", c.teacher.epochs, "teacher");
    read(tj, "lr", c.teacher.lr, "teacher");
    read(tj, "weight_decay", c.teacher.weight_decay, "teacher");
    read(tj, "dropout", c.teacher.model.dropout, "teacher");
    read(tj, "residual", c.teacher.model.residual, "teacher");
    read(tj, "temperature", c.teacher.temperature, "teacher");
  }
  if (j.contains("student")) {
    const json& sj = j["student"];
    check_keys(sj, {"hidden", "dropout", "epochs", "lr", "weight_decay", "batch_size", "eta",
                    "delta", "loss_weight", "temperature", "glnn_delta"},
               "student");
    read(sj, "hidden", c.student_hidden, "student");
    read(sj, "dropout", c.student_dropout, "student");
    read(sj, "epochs", c.distill.epochs, "student");
    read(sj, "lr", c.distill.lr, "student");
    read(sj, "weight_decay", c.distill.weight_decay, "student");
    read(sj, "batch_size", c.distill.batch_size, "student");
    read(sj, "eta", c.distill.eta, "student");
    read(sj, "delta", c.distill.delta, "student");
    read(sj, "loss_weight", c.distill.loss_weight, "student");
    read(sj, "temperature", c.distill.temperature, "student");
    read(sj, "glnn_delta", c.glnn_delta, "student");
  }

  for (const auto& s : c.scenarios) parse_scenario(s);
  for (const auto& m : c.models) {
    if (!kModels.count(m)) throw ConfigError("config.models: unknown model '" + m + "'");
  }
  for (double r : c.isolated_ratios) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("config.isolated_ratios: values in [0, 1]");
  }
  if (c.seeds.empty()) throw ConfigError("config.seeds: at least one seed");
  if (c.scenarios.empty() || c.models.empty()) {
    throw ConfigError("config: scenarios and models must be non-empty");
  }
  c.distill.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open experiment config " + path.string());
  return parse_experiment_config(in);
}

const AggregateRow& ExperimentResult::find(const std::string& scenario, const std::string& model,
                                           double isolated_ratio) const {
  for (const auto& a : aggregates) {
    if (a.scenario != scenario || a.model != model) continue;
    if (scenario != "mixed_ind" || a.isolated_ratio == isolated_ratio) return a;
  }
  throw ConfigError("no aggregate for " + scenario + "/" + model);
}

namespace {

struct EvalTarget {
  ScenarioPlan plan;
  std::string tag;
};

class GroupRunner {
 public:
  GroupRunner(const ExperimentConfig& cfg, const Graph& g, std::uint64_t seed,
              ExperimentResult& result)
      : cfg_(cfg), g_(g), seed_(seed), result_(result) {}

  void run(const ScenarioPlan& train_plan, const std::vector<EvalTarget>& targets,
           const std::string& group) {
    const bool inductive = is_inductive(train_plan.scenario);
    auto want = [&](const char* m) {
      return std::find(cfg_.models.begin(), cfg_.models.end(), m) != cfg_.models.end();
    };
    const bool kd2 = inductive && want("samlp_kd2");
    const bool need_teacher = want("teacher") || want("glnn_kd") || want("samlp_kd") || kd2;

    std::optional<TrainedTeacher> teacher;
    if (need_teacher) {
      TeacherTrainConfig tc = cfg_.teacher;
      tc.seed = seed_;
      teacher = train_teacher(train_plan, tc);
      if (want("teacher")) {
        for (const auto& t : targets) {
          report(t, "teacher",
                 teacher_predict(teacher->params, g_, t.plan, t.plan.test_nodes));
        }
      }
    }

    DistillConfig dc = cfg_.distill;
    dc.seed = seed_;
    const std::size_t d = g_.feature_dim();
    const std::size_t c = g_.num_classes;

    auto train_feature_mlp = [&](const char* tag, const TeacherOutput* soft, double delta) {
      Rng init = make_rng(seed_, 1);
      FeatureMlp mlp(d, cfg_.student_hidden, c, init, cfg_.student_dropout);
      DistillConfig run_cfg = dc;
      run_cfg.delta = delta;
      log(group, tag, train_mlp(mlp, soft, train_plan, run_cfg));
      for (const auto& t : targets) {
        report(t, tag, mlp_predict(mlp, g_.features.gather_rows(t.plan.test_nodes)));
      }
    };
    if (want("mlp")) train_feature_mlp("mlp", nullptr, dc.delta);
    if (want("glnn_kd")) train_feature_mlp("glnn_kd", &teacher->output, cfg_.glnn_delta);

    StudentConfig sc{.in_dim = d,
                     .struct_cols = train_plan.struct_cols(),
                     .hidden = cfg_.student_hidden,
                     .num_classes = c,
                     .dropout = cfg_.student_dropout};
    auto train_samlp = [&](SaMlp& s, const char* tag, const TeacherOutput* soft) {
      const TrainReport r = inductive ? train_student_ind(s, soft, train_plan, dc)
                                      : train_student_trans(s, soft, train_plan, dc);
      log(group, tag, r);
      for (const auto& t : targets) {
        const auto in = student_inputs(g_, t.plan, t.plan.test_nodes);
        report(t, tag, student_predict(s, in, StudentPath::kExplicit));
        if (t.plan.scenario == Scenario::kTransductive ||
            t.plan.scenario == Scenario::kInductiveWithConnection) {
          const Tensor a = samlp_alpha(s, in.x, StructureSource::explicit_rows(in.rows));
          result_.alpha.push_back({t.tag, tag, seed_, alpha_histogram(a.data()).mean});
        }
      }
    };
    if (want("samlp")) {
      Rng init = make_rng(seed_, 3);
      SaMlp s(sc, init);
      train_samlp(s, "samlp", nullptr);
    }
    if (want("samlp_kd") || kd2) {
      Rng init = make_rng(seed_, 3);
      SaMlp s(sc, init);
      if (want("samlp_kd")) {
        train_samlp(s, "samlp_kd", &teacher->output);
      } else {
        const TrainReport r = train_student_ind(s, &teacher->output, train_plan, dc);
        log(group, "samlp_kd", r);
      }
      if (kd2) {
        log(group, "samlp_kd2", train_stage2(s, teacher->output, train_plan, dc));
        for (const auto& t : targets) {
          const auto in = student_inputs(g_, t.plan, t.plan.test_nodes);
          report(t, "samlp_kd2", student_predict(s, in, StudentPath::kRouted));
          report(t, "samlp_kd2_latent", student_predict(s, in, StudentPath::kLatent));
        }
      }
    }
  }

 private:
  void report(const EvalTarget& t, const std::string& model, const Tensor& probs) {
    EvalReport r = evaluate(probs, g_.labels, t.plan.test_nodes, g_.num_classes);
    r.scenario = t.tag;
    r.isolated_ratio = t.plan.isolated_ratio;
    r.model = model;
    r.seed = seed_;
    result_.reports.push_back(std::move(r));
  }

  void log(const std::string& group, const std::string& model, const TrainReport& r) {
    if (cfg_.output_dir.empty()) return;
    const auto path = cfg_.output_dir /
                      ("metrics_" + group + "_" + model + "_seed" + std::to_string(seed_) + ".csv");
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_metrics_csv(out, r);
  }

  const ExperimentConfig& cfg_;
  const Graph& g_;
  std::uint64_t seed_;
  ExperimentResult& result_;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const Graph g = cfg.generator ? generate_synthetic(*cfg.generator) : load_graph(cfg.graph_path);
  if (!cfg.output_dir.empty()) std::filesystem::create_directories(cfg.output_dir);

  std::vector<Scenario> inductive;
  bool trans = false;
  for (const auto& tag : cfg.scenarios) {
    const Scenario s = parse_scenario(tag);
    if (s == Scenario::kTransductive) {
      trans = true;
    } else if (std::find(inductive.begin(), inductive.end(), s) == inductive.end()) {
      inductive.push_back(s);
    }
  }

  ExperimentResult result;
  for (std::uint64_t seed : cfg.seeds) {
    const SplitAssignment split = make_split(g, cfg.fractions, seed);
    GroupRunner runner(cfg, g, seed, result);
    if (trans) {
      std::vector<EvalTarget> targets;
      targets.push_back({build_scenario(g, split, Scenario::kTransductive, 0.0, seed), "trans"});
      runner.run(targets.front().plan, targets, "trans");
    }
    if (!inductive.empty()) {
      // Every inductive scenario trains on the same labelled subgraph; they
      // differ only in what the test nodes bring at evaluation.
      const ScenarioPlan train_plan =
          build_scenario(g, split, Scenario::kInductiveWithConnection, 0.0, seed);
      std::vector<EvalTarget> targets;
      for (Scenario s : inductive) {
        if (s == Scenario::kMixedInductive) {
          for (double r : cfg.isolated_ratios) {
            targets.push_back({build_scenario(g, split, s, r, seed), std::string(to_string(s))});
          }
        } else {
          targets.push_back({build_scenario(g, split, s, 0.0, seed), std::string(to_string(s))});
        }
      }
      runner.run(train_plan, targets, "ind");
    }
  }
  result.aggregates = aggregate(result.reports);

  if (!cfg.output_dir.empty()) {
    std::ofstream out(cfg.output_dir / "reports.csv");
    if (!out) throw ConfigError("cannot write reports in " + cfg.output_dir.string());
    write_reports_csv(out, result.reports, result.aggregates);
    std::ofstream alpha(cfg.output_dir / "alpha.csv");
    alpha << "scenario,model,seed,mean_alpha\n" << std::fixed << std::setprecision(6);
    for (const auto& a : result.alpha) {
      alpha << a.scenario << ',' << a.model << ',' << a.seed << ',' << a.mean_alpha << '\n';
    }
  }
  return result;
}

}  // namespace samlp
