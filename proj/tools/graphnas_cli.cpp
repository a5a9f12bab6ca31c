/*
 * Copyright 2026 The graphnas Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// graphnas command line: run, compare and enumerate.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "graphnas/harness.hpp"

namespace {

using graphnas::Algorithm;
using graphnas::Encoding;
using nlohmann::json;

// Flag values; everything is optional so that a --config file can supply it
// and flags given on the command line win.
struct Settings {
  std::optional<std::string> env, variant, algo, out;
  std::optional<std::size_t> trials, replicas, batch_size, queue_k, layers, branches, max_steps, threads;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr, entropy, pg_weight, threshold;
  std::optional<std::vector<int>> range;
  std::optional<int> target;
};

template <typename T>
void take(const json& doc, const char* key, std::optional<T>& slot) {
  if (!slot && doc.contains(key)) slot = doc.at(key).get<T>();
}

// Fills unset fields from a JSON file whose keys mirror the long flags.
void merge_config_file(Settings& s, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument(path + ": expected a JSON object");
  static const std::vector<std::string> known = {
      "env",    "variant",  "algo",      "out",     "trials",     "replicas", "batch_size", "queue_k", "layers",
      "branches", "max_steps", "threads", "seed",   "lr",         "entropy",  "pg_weight",  "threshold", "range",
      "target"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument(path + ": unknown key '" + key + "'");
    }
  }
  try {
    take(doc, "env", s.env);
    take(doc, "variant", s.variant);
    take(doc, "algo", s.algo);
    take(doc, "out", s.out);
    take(doc, "trials", s.trials);
    take(doc, "replicas", s.replicas);
    take(doc, "batch_size", s.batch_size);
    take(doc, "queue_k", s.queue_k);
    take(doc, "layers", s.layers);
    take(doc, "branches", s.branches);
    take(doc, "max_steps", s.max_steps);
    take(doc, "threads", s.threads);
    take(doc, "seed", s.seed);
    take(doc, "lr", s.lr);
    take(doc, "entropy", s.entropy);
    take(doc, "pg_weight", s.pg_weight);
    take(doc, "threshold", s.threshold);
    take(doc, "range", s.range);
    take(doc, "target", s.target);
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

void add_environment_flags(CLI::App* cmd, Settings& s) {
  cmd->add_option("--env", s.env, "stack_layers | select_optimizer (default stack_layers)");
  cmd->add_option("--layers", s.layers, "stack_layers target L (default 10)");
  cmd->add_option("--max-steps", s.max_steps, "stack_layers sampling cap (default 2L linear, 10L graph)");
  cmd->add_option("--branches", s.branches, "select_optimizer branch count B (default 2)");
  cmd->add_option("--range", s.range, "select_optimizer value range lo,hi (default 1,100)")
      ->delimiter(',')
      ->expected(2);
  cmd->add_option("--target", s.target, "select_optimizer target value (default 50)");
}

void add_search_flags(CLI::App* cmd, Settings& s) {
  cmd->add_option("--algo", s.algo, "reinforce | pqt (default reinforce)");
  cmd->add_option("--trials", s.trials, "trial budget per replica (default 200, 2000 for select_optimizer)");
  cmd->add_option("--replicas", s.replicas, "independent replicas (default 10)");
  cmd->add_option("--seed", s.seed, "base seed; replica i uses seed + i (default 0)");
  cmd->add_option("--lr", s.lr, "learning rate");
  cmd->add_option("--entropy", s.entropy, "entropy coefficient");
  cmd->add_option("--batch-size", s.batch_size, "trajectories per update (default 1)");
  cmd->add_option("--queue-k", s.queue_k, "PQT queue capacity (default 10)");
  cmd->add_option("--pg-weight", s.pg_weight, "PQT: weight of an added REINFORCE term (default 0)");
  cmd->add_option("--threads", s.threads, "worker threads (default: hardware concurrency)");
}

graphnas::EnvironmentSpec environment_spec(const Settings& s, Encoding encoding) {
  graphnas::EnvironmentSpec e;
  e.name = s.env.value_or("stack_layers");
  e.encoding = encoding;
  e.layers = s.layers.value_or(e.layers);
  e.max_steps = s.max_steps.value_or(0);
  e.branches = s.branches.value_or(e.branches);
  if (s.range) {
    if (s.range->size() != 2) throw std::invalid_argument("--range needs two integers lo,hi");
    e.range = {(*s.range)[0], (*s.range)[1]};
  }
  e.target = s.target.value_or(e.target);
  return e;
}

// Defaults follow the experiment settings of each environment; select_optimizer
// runs REINFORCE at lr 1e-4, entropy 0.8 for 2000 trials.
graphnas::ExperimentConfig experiment_config(const Settings& s, Encoding encoding) {
  graphnas::ExperimentConfig c;
  c.env = environment_spec(s, encoding);
  const bool select = c.env.name == "select_optimizer";
  auto& search = c.search;
  search.algorithm = graphnas::parse_algorithm(s.algo.value_or("reinforce"));
  search.trials = s.trials.value_or(select ? 2000 : 200);
  if (select) {
    search.reinforce.learning_rate = 1e-4;
    search.reinforce.entropy_coefficient = 0.8;
  }
  if (s.lr) search.reinforce.learning_rate = search.pqt.learning_rate = *s.lr;
  if (s.entropy) search.reinforce.entropy_coefficient = search.pqt.entropy_coefficient = *s.entropy;
  if (s.batch_size) search.reinforce.batch_size = search.pqt.batch_size = *s.batch_size;
  if (s.queue_k) search.pqt.queue_capacity = *s.queue_k;
  if (s.pg_weight) search.pqt.policy_gradient_weight = *s.pg_weight;
  c.replicas = s.replicas.value_or(10);
  c.base_seed = s.seed.value_or(0);
  c.threads = s.threads.value_or(0);
  if (s.out) c.output = *s.out;
  return c;
}

double threshold_for(const Settings& s) {
  return s.threshold.value_or(graphnas::default_threshold(s.env.value_or("stack_layers")));
}

void print_summary(const graphnas::ExperimentResult& r, const std::string& label, double threshold) {
  std::size_t reached = 0;
  for (const auto& h : r.histories) reached += graphnas::trials_to_threshold(h, threshold).has_value();
  std::printf("%s: %zu replicas x %zu trials, final mean best %.6g (min %.6g, max %.6g), reached %.6g in %zu/%zu\n",
              label.c_str(), r.histories.size(), r.aggregate.size(), r.aggregate.back().mean_best,
              r.aggregate.back().min_best, r.aggregate.back().max_best, threshold, reached, r.histories.size());
}

int cmd_run(const Settings& s) {
  const Encoding enc = graphnas::parse_encoding(s.variant.value_or("graph"));
  auto result = graphnas::run_experiment(experiment_config(s, enc));
  print_summary(result, std::string(graphnas::encoding_name(enc)), threshold_for(s));
  if (s.out) std::printf("wrote %s\n", s.out->c_str());
  return 0;
}

int cmd_compare(const Settings& s, const std::optional<std::string>& dir_a, const std::optional<std::string>& dir_b) {
  const double threshold = threshold_for(s);
  std::vector<graphnas::RunHistory> a, b;
  std::string name_a = "graph", name_b = "linear";
  if (dir_a || dir_b) {
    if (!dir_a || !dir_b) throw std::invalid_argument("--a and --b must be given together");
    a = graphnas::read_experiment(*dir_a);
    b = graphnas::read_experiment(*dir_b);
    name_a = *dir_a;
    name_b = *dir_b;
  } else {
    for (Encoding enc : {Encoding::kGraph, Encoding::kLinear}) {
      Settings variant = s;
      if (s.out) variant.out = *s.out + "/" + std::string(graphnas::encoding_name(enc));
      auto result = graphnas::run_experiment(experiment_config(variant, enc));
      print_summary(result, std::string(graphnas::encoding_name(enc)), threshold);
      (enc == Encoding::kGraph ? a : b) = std::move(result.histories);
    }
  }
  std::cout << graphnas::format_report(graphnas::compare_runs(a, b, threshold, name_a, name_b));
  return 0;
}

std::string decoded_text(const graphnas::DecodedRecord& d) {
  if (const auto* l = std::get_if<graphnas::LayerCount>(&d)) return "layers=" + std::to_string(l->layers);
  const auto& o = std::get<graphnas::OptimizerChoice>(d);
  std::string out = "branch=" + std::to_string(o.branch) + " values=";
  for (std::size_t i = 0; i < o.values.size(); ++i) out += (i ? "/" : "") + std::to_string(o.values[i]);
  return out;
}

int cmd_enumerate(const Settings& s, const std::optional<std::string>& graph_file,
                  const std::optional<std::string>& dump_graph, std::optional<std::size_t> limit) {
  std::FILE* out = stdout;
  if (s.out) {
    out = std::fopen(s.out->c_str(), "w");
    if (!out) throw std::runtime_error("cannot write " + *s.out);
  }
  struct Closer {
    std::FILE* f;
    ~Closer() {
      if (f != stdout) std::fclose(f);
    }
  } closer{out};

  if (graph_file) {
    graphnas::SearchGraph g = graphnas::load_graph(*graph_file);
    graphnas::require_valid(g);
    if (!s.max_steps) throw std::invalid_argument("--max-steps is required with --graph");
    auto all = graphnas::enumerate_trajectories(g, *s.max_steps, limit.value_or(graphnas::kEnumerationLimit));
    std::fprintf(out, "index,length,edges\n");
    for (std::size_t i = 0; i < all.size(); ++i) {
      std::string edges;
      for (std::size_t e : all[i].actions()) edges += (edges.empty() ? "" : " ") + std::to_string(e);
      std::fprintf(out, "%zu,%zu,%s\n", i, all[i].length(), edges.c_str());
    }
    return 0;
  }

  const Encoding enc = graphnas::parse_encoding(s.variant.value_or("graph"));
  auto env = graphnas::make_environment(environment_spec(s, enc));
  if (dump_graph) graphnas::save_graph(env->graph(), *dump_graph);
  auto all = graphnas::enumerate_trajectories(env->graph(), env->max_steps(), limit.value_or(graphnas::kEnumerationLimit));
  std::fprintf(out, "index,length,truncated,decoded,raw_reward,reward\n");
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto r = env->reward(all[i]);
    std::fprintf(out, "%zu,%zu,%d,%s,%.9g,%.9g\n", i, all[i].length(), all[i].truncated ? 1 : 0,
                 decoded_text(r.decoded).c_str(), r.raw_reward, r.reward);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graphnas: graph-structured architecture search on toy reward environments"};
  app.require_subcommand(1);

  Settings flags;
  std::optional<std::string> config_file, dir_a, dir_b, graph_file, dump_graph;
  std::optional<std::size_t> limit;

  auto* run = app.add_subcommand("run", "run seeded replicas of one variant and write CSVs");
  auto* compare = app.add_subcommand("compare", "compare graph and linear variants (run both, or read --a/--b dirs)");
  auto* enumerate = app.add_subcommand("enumerate", "list every trajectory of a search space with its reward");

  for (auto* cmd : {run, compare}) {
    add_environment_flags(cmd, flags);
    add_search_flags(cmd, flags);
    cmd->add_option("--config", config_file, "JSON file with the same keys as the long flags");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--threshold", flags.threshold, "trials-to-threshold level (default 1.0, 0.99 select_optimizer)");
  }
  run->add_option("--variant", flags.variant, "graph | linear (default graph)");
  compare->add_option("--a", dir_a, "experiment directory of the first variant");
  compare->add_option("--b", dir_b, "experiment directory of the second variant");

  add_environment_flags(enumerate, flags);
  enumerate->add_option("--variant", flags.variant, "graph | linear (default graph)");
  enumerate->add_option("--config", config_file, "JSON file with the same keys as the long flags");
  enumerate->add_option("--out", flags.out, "CSV output file (default stdout)");
  enumerate->add_option("--graph", graph_file, "enumerate a graph JSON file instead of a built-in space");
  enumerate->add_option("--dump-graph", dump_graph, "also write the built-in space as graph JSON");
  enumerate->add_option("--limit", limit, "refuse to list more than this many trajectories");

  CLI11_PARSE(app, argc, argv);

  try {
    if (config_file) merge_config_file(flags, *config_file);
    if (run->parsed()) return cmd_run(flags);
    if (compare->parsed()) return cmd_compare(flags, dir_a, dir_b);
    return cmd_enumerate(flags, graph_file, dump_graph, limit);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "graphnas: error: %s\n", e.what());
    return 1;
  }
}
