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

// samlp: command-line driver for graph generation, training, evaluation and
// benchmarking. Each stage reads and writes files so runs can be resumed.

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <optional>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "samlp/bench.hpp"
#include "samlp/checkpoint.hpp"
#include "samlp/distill.hpp"
#include "samlp/errors.hpp"
#include "samlp/eval.hpp"
#include "samlp/experiment.hpp"
#include "samlp/graph.hpp"
#include "samlp/random.hpp"
#include "samlp/scenario.hpp"
#include "samlp/student.hpp"
#include "samlp/teacher.hpp"

namespace {

using namespace samlp;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitLeakage = 3;
constexpr int kExitNumeric = 4;

SplitFractions parse_fractions(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      v.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw ConfigError("--fractions: bad number '" + part + "'");
    }
  }
  if (v.size() != 3) throw ConfigError("--fractions needs train,val,test");
  return {v[0], v[1], v[2]};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

struct PlanArgs {
  std::string graph, split, scenario = "trans";
  double isolated_ratio = 0.0;
  std::uint64_t seed = 0;

  void add(CLI::App* app, bool with_scenario = true) {
    app->add_option("--graph", graph, "graph file")->required();
    app->add_option("--split", split, "split file")->required();
    if (with_scenario) {
      app->add_option("--scenario", scenario,
                      "trans | ind_with_connection | ind_without_connection | mixed_ind");
    }
    app->add_option("--isolated-ratio", isolated_ratio, "mixed_ind isolation ratio");
    app->add_option("--seed", seed, "seed for scenario construction and training");
  }
};

struct Loaded {
  Graph g;
  SplitAssignment split;
  ScenarioPlan plan;
};

Loaded load_plan(const PlanArgs& a) {
  Loaded l;
  l.g = load_graph(a.graph);
  l.split = load_split(a.split, l.g.num_nodes());
  l.plan = build_scenario(l.g, l.split, a.scenario, a.isolated_ratio, a.seed);
  return l;
}

Tensor predict_any(const Checkpoint& ck, const Graph& g, const ScenarioPlan& plan,
                   std::span<const NodeId> nodes, const std::string& path) {
  if (ck.kind == "sage") {
    SageParams t = teacher_from_checkpoint(ck);
    return teacher_predict(t, g, plan, nodes);
  }
  if (ck.kind == "mlp") {
    FeatureMlp m = mlp_from_checkpoint(ck);
    return mlp_predict(m, g.features.gather_rows(nodes));
  }
  SaMlp s = samlp_from_checkpoint(ck);
  if (s.config.struct_cols != plan.struct_cols()) {
    throw ConfigError("student was trained on " + std::to_string(s.config.struct_cols) +
                      " structure columns, scenario provides " +
                      std::to_string(plan.struct_cols()));
  }
  StudentPath p = s.latent_encoder ? StudentPath::kRouted : StudentPath::kExplicit;
  if (path == "explicit") p = StudentPath::kExplicit;
  else if (path == "latent") p = StudentPath::kLatent;
  else if (path == "routed") p = StudentPath::kRouted;
  else if (path != "auto") throw ConfigError("--path: expected auto|explicit|latent|routed");
  if (p != StudentPath::kExplicit && !s.latent_encoder) {
    throw ConfigError("checkpoint has no latent encoder; run stage2 first");
  }
  return student_predict(s, student_inputs(g, plan, nodes), p);
}

int run(int argc, char** argv) {
  CLI::App app{"SA-MLP: structure-aware MLP students distilled from a GraphSAGE teacher"};
  app.require_subcommand(1);

  // gen
  SyntheticGraphConfig gen;
  std::string gen_out;
  auto* c_gen = app.add_subcommand("gen", "generate a synthetic graph");
  c_gen->add_option("--n", gen.n);
  c_gen->add_option("--d", gen.d);
  c_gen->add_option("--c", gen.c);
  c_gen->add_option("--avg-degree", gen.avg_degree);
  c_gen->add_option("--homophily", gen.homophily);
  c_gen->add_option("--feature-signal", gen.feature_signal);
  c_gen->add_option("--seed", gen.seed);
  c_gen->add_option("--out", gen_out)->required();

  // split
  std::string sp_graph, sp_out, sp_frac = "0.48,0.32,0.20";
  std::uint64_t sp_seed = 0;
  auto* c_split = app.add_subcommand("split", "stratified train/val/test split");
  c_split->add_option("--graph", sp_graph)->required();
  c_split->add_option("--fractions", sp_frac);
  c_split->add_option("--seed", sp_seed);
  c_split->add_option("--out", sp_out)->required();

  // train-teacher
  PlanArgs tt;
  TeacherTrainConfig tcfg;
  std::string tt_ckpt, tt_soft;
  auto* c_tt = app.add_subcommand("train-teacher", "train the GraphSAGE teacher");
  tt.add(c_tt);
  c_tt->add_option("--hidden", tcfg.model.hidden);
  c_tt->add_option("--layers", tcfg.model.num_layers);
  c_tt->add_option("--epochs", tcfg.epochs);
  c_tt->add_option("--lr", tcfg.lr);
  c_tt->add_option("--weight-decay", tcfg.weight_decay);
  c_tt->add_option("--dropout", tcfg.model.dropout);
  c_tt->add_option("--temperature", tcfg.temperature);
  c_tt->add_option("--out-ckpt", tt_ckpt)->required();
  c_tt->add_option("--out-soft", tt_soft)->required();

  // train-student
  PlanArgs ts;
  DistillConfig dcfg;
  std::string ts_soft, ts_kind, ts_ckpt, ts_metrics;
  std::size_t ts_hidden = 64;
  double ts_dropout = 0.2;
  auto* c_ts = app.add_subcommand("train-student", "train an MLP or SA-MLP student");
  ts.add(c_ts);
  c_ts->add_option("--teacher-soft", ts_soft, "soft labels from train-teacher");
  c_ts->add_option("--student", ts_kind)
      ->required()
      ->check(CLI::IsMember({"mlp", "glnn-kd", "samlp", "samlp-kd"}));
  c_ts->add_option("--eta", dcfg.eta);
  c_ts->add_option("--delta", dcfg.delta);
  c_ts->add_option("--loss-weight", dcfg.loss_weight);
  c_ts->add_option("--epochs", dcfg.epochs);
  c_ts->add_option("--lr", dcfg.lr);
  c_ts->add_option("--weight-decay", dcfg.weight_decay);
  c_ts->add_option("--batch-size", dcfg.batch_size);
  c_ts->add_option("--temperature", dcfg.temperature);
  c_ts->add_option("--hidden", ts_hidden);
  c_ts->add_option("--dropout", ts_dropout);
  c_ts->add_option("--out-ckpt", ts_ckpt)->required();
  c_ts->add_option("--metrics", ts_metrics, "per-epoch CSV log");

  // stage2
  PlanArgs s2;
  s2.scenario = "ind_without_connection";
  DistillConfig s2cfg;
  std::string s2_soft, s2_in, s2_out, s2_metrics;
  auto* c_s2 = app.add_subcommand("stage2", "fit the latent structure encoder");
  s2.add(c_s2, false);
  c_s2->add_option("--teacher-soft", s2_soft)->required();
  c_s2->add_option("--in-ckpt", s2_in)->required();
  c_s2->add_option("--out-ckpt", s2_out)->required();
  c_s2->add_option("--eta", s2cfg.eta);
  c_s2->add_option("--delta", s2cfg.delta);
  c_s2->add_option("--loss-weight", s2cfg.loss_weight);
  c_s2->add_option("--epochs", s2cfg.epochs);
  c_s2->add_option("--lr", s2cfg.lr);
  c_s2->add_option("--metrics", s2_metrics);

  // eval
  PlanArgs ev;
  std::string ev_ckpt, ev_report, ev_path = "auto", ev_tag;
  auto* c_ev = app.add_subcommand("eval", "test accuracy of a checkpoint");
  ev.add(c_ev);
  c_ev->add_option("--ckpt", ev_ckpt)->required();
  c_ev->add_option("--path", ev_path, "student structure path: auto|explicit|latent|routed");
  c_ev->add_option("--model", ev_tag, "model tag in the report");
  c_ev->add_option("--report", ev_report, "CSV output (stdout if omitted)");

  // bench
  std::string bn_graph, bn_ckpts, bn_report, bn_split, bn_scenario = "ind_with_connection";
  std::size_t bn_queries = 10;
  LatencyConfig lcfg;
  std::uint64_t bn_seed = 0;
  auto* c_bn = app.add_subcommand("bench", "inductive inference latency");
  c_bn->add_option("--graph", bn_graph)->required();
  c_bn->add_option("--ckpts", bn_ckpts, "comma-separated checkpoints")->required();
  c_bn->add_option("--split", bn_split, "needed for students trained inductively");
  c_bn->add_option("--scenario", bn_scenario);
  c_bn->add_option("--queries", bn_queries);
  c_bn->add_option("--reps", lcfg.reps);
  c_bn->add_option("--warmup", lcfg.warmup);
  c_bn->add_option("--seed", bn_seed);
  c_bn->add_option("--report", bn_report);

  // alpha
  PlanArgs al;
  std::string al_ckpt, al_out, al_tag, al_dataset;
  auto* c_al = app.add_subcommand("alpha", "gate-value histogram on test nodes");
  al.add(c_al);
  c_al->add_option("--ckpt", al_ckpt)->required();
  c_al->add_option("--out", al_out)->required();
  c_al->add_option("--model", al_tag);
  c_al->add_option("--dataset", al_dataset);

  // experiment
  std::string ex_config;
  auto* c_ex = app.add_subcommand("experiment", "run a JSON experiment config end to end");
  c_ex->add_option("config", ex_config)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (c_gen->parsed()) {
    const Graph g = generate_synthetic(gen);
    save_graph(g, gen_out);
    std::cout << "nodes " << g.num_nodes() << " edges " << g.num_edges() << " homophily "
              << edge_homophily(g) << '\n';
  } else if (c_split->parsed()) {
    const Graph g = load_graph(sp_graph);
    save_split(make_split(g, parse_fractions(sp_frac), sp_seed), sp_out);
  } else if (c_tt->parsed()) {
    Loaded l = load_plan(tt);
    tcfg.seed = tt.seed;
    TrainedTeacher t = train_teacher(l.plan, tcfg);
    save_checkpoint(teacher_checkpoint(t.params), tt_ckpt);
    save_teacher_output(t.output, tt_soft);
    std::cout << "best_epoch " << t.best_epoch << " select_acc " << t.best_select_acc << '\n';
  } else if (c_ts->parsed()) {
    Loaded l = load_plan(ts);
    const bool kd = ts_kind == "glnn-kd" || ts_kind == "samlp-kd";
    if (kd && ts_soft.empty()) throw ConfigError("--teacher-soft is required for " + ts_kind);
    TeacherOutput soft;
    if (kd) soft = load_teacher_output(ts_soft);
    const TeacherOutput* sp = kd ? &soft : nullptr;
    dcfg.seed = ts.seed;
    TrainReport rep;
    if (ts_kind == "mlp" || ts_kind == "glnn-kd") {
      Rng init = make_rng(ts.seed, 1);
      FeatureMlp m(l.g.feature_dim(), ts_hidden, l.g.num_classes, init, ts_dropout);
      if (ts_kind == "glnn-kd") dcfg.delta = 1.0;
      rep = train_mlp(m, sp, l.plan, dcfg);
      save_checkpoint(mlp_checkpoint(m), ts_ckpt);
    } else {
      Rng init = make_rng(ts.seed, 3);
      SaMlp s(StudentConfig{.in_dim = l.g.feature_dim(),
                            .struct_cols = l.plan.struct_cols(),
                            .hidden = ts_hidden,
                            .num_classes = l.g.num_classes,
                            .dropout = ts_dropout},
              init);
      rep = is_inductive(l.plan.scenario) ? train_student_ind(s, sp, l.plan, dcfg)
                                          : train_student_trans(s, sp, l.plan, dcfg);
      save_checkpoint(samlp_checkpoint(s), ts_ckpt);
    }
    if (!ts_metrics.empty()) {
      auto out = open_out(ts_metrics);
      write_metrics_csv(out, rep);
    }
    std::cout << "best_epoch " << rep.best_epoch << " select_acc " << rep.best_select_acc
              << '\n';
  } else if (c_s2->parsed()) {
    Loaded l = load_plan(s2);
    const TeacherOutput soft = load_teacher_output(s2_soft);
    SaMlp s = samlp_from_checkpoint(load_checkpoint(s2_in));
    s2cfg.seed = s2.seed;
    const TrainReport rep = train_stage2(s, soft, l.plan, s2cfg);
    save_checkpoint(samlp_checkpoint(s), s2_out);
    if (!s2_metrics.empty()) {
      auto out = open_out(s2_metrics);
      write_metrics_csv(out, rep);
    }
    std::cout << "best_epoch " << rep.best_epoch << " select_acc " << rep.best_select_acc
              << '\n';
  } else if (c_ev->parsed()) {
    Loaded l = load_plan(ev);
    const Checkpoint ck = load_checkpoint(ev_ckpt);
    const Tensor probs = predict_any(ck, l.g, l.plan, l.plan.test_nodes, ev_path);
    EvalReport r = evaluate(probs, l.g.labels, l.plan.test_nodes, l.g.num_classes);
    r.scenario = std::string(to_string(l.plan.scenario));
    r.isolated_ratio = ev.isolated_ratio;
    r.model = ev_tag.empty() ? ck.kind : ev_tag;
    r.seed = ev.seed;
    const std::vector<EvalReport> rs{r};
    const auto agg = aggregate(rs);
    if (ev_report.empty()) {
      write_reports_csv(std::cout, rs, agg);
    } else {
      auto out = open_out(ev_report);
      write_reports_csv(out, rs, agg);
    }
  } else if (c_bn->parsed()) {
    const Graph g = load_graph(bn_graph);
    const auto paths = split_list(bn_ckpts);
    if (paths.empty()) throw ConfigError("--ckpts: no checkpoint given");
    std::optional<ScenarioPlan> plan;
    if (!bn_split.empty()) {
      plan = build_scenario(g, load_split(bn_split, g.num_nodes()), bn_scenario, 0.0, bn_seed);
    }
    // Queries come from the test nodes when a split is given, else from all nodes.
    std::vector<NodeId> pool;
    if (plan) {
      pool = plan->test_nodes;
    } else {
      pool.resize(g.num_nodes());
      for (NodeId v = 0; v < g.num_nodes(); ++v) pool[v] = v;
    }
    if (bn_queries == 0 || bn_queries > pool.size()) {
      throw ConfigError("--queries must be in [1, " + std::to_string(pool.size()) + "]");
    }
    Rng rng = make_rng(bn_seed, 7);
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(bn_queries);
    const SparseRows& adjacency = plan ? plan->eval_adjacency : g.adjacency;
    const SparseRows& rows = plan ? plan->eval_rows : g.adjacency;
    std::vector<LatencyReport> reports;
    for (const auto& p : paths) {
      const Checkpoint ck = load_checkpoint(p);
      const std::string stem = std::filesystem::path(p).stem().string();
      if (ck.kind == "sage") {
        SageParams t = teacher_from_checkpoint(ck);
        reports.push_back(bench_teacher(t, g, adjacency, pool, lcfg, stem));
      } else if (ck.kind == "mlp") {
        FeatureMlp m = mlp_from_checkpoint(ck);
        reports.push_back(bench_mlp(m, g, pool, lcfg, stem));
      } else {
        SaMlp s = samlp_from_checkpoint(ck);
        if (s.config.struct_cols != rows.n_cols()) {
          throw ConfigError(p + ": structure width does not match the graph; pass --split");
        }
        reports.push_back(bench_student(s, g, rows, pool, StudentPath::kExplicit, lcfg, stem));
        if (s.latent_encoder) {
          reports.push_back(
              bench_student(s, g, rows, pool, StudentPath::kLatent, lcfg, stem + "_latent"));
        }
      }
    }
    if (bn_report.empty()) {
      write_latency_csv(std::cout, reports);
    } else {
      auto out = open_out(bn_report);
      write_latency_csv(out, reports);
    }
  } else if (c_al->parsed()) {
    Loaded l = load_plan(al);
    const Checkpoint ck = load_checkpoint(al_ckpt);
    if (ck.kind != "samlp") throw ConfigError("alpha needs an SA-MLP checkpoint");
    SaMlp s = samlp_from_checkpoint(ck);
    const auto h = export_alpha(s, l.g, l.plan, al_out, al_tag, al_dataset);
    std::cout << "mean_alpha " << h.mean << " n " << h.total() << '\n';
  } else if (c_ex->parsed()) {
    const ExperimentResult r = run_experiment(load_experiment_config(ex_config));
    for (const auto& a : r.aggregates) {
      std::cout << a.scenario << ' ' << a.isolated_ratio << ' ' << a.model << ' ' << a.mean
                << " +- " << a.std << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Training allocates and frees many same-sized buffers; keep them in the heap.
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
#endif
  try {
    return run(argc, argv);
  } catch (const LeakageError& e) {
    std::cerr << "leakage: " << e.what() << '\n';
    return kExitLeakage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
