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

#include "graphnas/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace graphnas {

namespace {

constexpr const char* kHistoryHeader = "trial,reward,best,moving_avg";
constexpr const char* kAggregateHeader = "trial,mean_best,min_best,max_best";
constexpr const char* kUpdatesHeader = "update,loss,entropy,baseline";

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// Rows of a numeric CSV after checking its header.
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw std::runtime_error(path.string() + ": expected header '" + header + "'");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error(path.string() + ": bad number '" + cell + "'");
      }
    }
    if (row.size() != 4) throw std::runtime_error(path.string() + ": expected 4 columns");
    rows.push_back(std::move(row));
  }
  return rows;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

VariantSummary summarize(const std::vector<RunHistory>& runs, double threshold, std::size_t budget, std::string name) {
  VariantSummary s;
  s.name = std::move(name);
  s.curve = aggregate(runs);
  std::vector<double> counts;
  for (const auto& h : runs) {
    auto t = trials_to_threshold(h, threshold);
    s.trials_to_threshold.push_back(t);
    if (t) ++s.replicas_reaching;
    counts.push_back(static_cast<double>(t.value_or(budget + 1)));
  }
  s.median_trials_to_threshold = median(counts);
  s.final_mean_best = s.curve.back().mean_best;
  return s;
}

}  // namespace

std::unique_ptr<Environment> make_environment(const EnvironmentSpec& spec) {
  if (spec.name == "stack_layers") {
    return std::make_unique<StackLayersEnv>(spec.encoding, spec.layers, spec.max_steps);
  }
  if (spec.name == "select_optimizer") {
    return std::make_unique<SelectOptimizerEnv>(spec.encoding, spec.branches, spec.range, spec.target);
  }
  throw std::invalid_argument("unknown environment '" + spec.name + "' (expected stack_layers or select_optimizer)");
}

double default_threshold(const std::string& env_name) { return env_name == "select_optimizer" ? 0.99 : 1.0; }

Aggregate aggregate(const std::vector<RunHistory>& histories) {
  if (histories.empty()) throw std::invalid_argument("aggregate needs at least one history");
  const std::size_t n = histories.front().trials.size();
  for (const auto& h : histories) {
    if (h.trials.size() != n) throw std::invalid_argument("histories have different trial counts");
  }
  Aggregate out(n);
  for (std::size_t t = 0; t < n; ++t) {
    double sum = 0.0, lo = histories.front().trials[t].best, hi = lo;
    for (const auto& h : histories) {
      const double b = h.trials[t].best;
      sum += b;
      lo = std::min(lo, b);
      hi = std::max(hi, b);
    }
    out[t] = {t + 1, sum / static_cast<double>(histories.size()), lo, hi};
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.replicas < 1) throw std::invalid_argument("replicas must be >= 1");
  if (config.search.trials < 1) throw std::invalid_argument("trials must be >= 1");
  auto env = make_environment(config.env);
  if (config.output) {
    std::error_code ec;
    std::filesystem::create_directories(*config.output, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + config.output->string() + ": " + ec.message());
  }

  ExperimentResult result;
  result.histories.resize(config.replicas);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < config.replicas; i = next++) {
      try {
        SearchConfig search = config.search;
        search.seed = config.base_seed + i;
        result.histories[i] = run_search(*env, search);
        if (config.output) {
          emit_csv(result.histories[i], *config.output / ("replica_" + std::to_string(i) + ".csv"));
          emit_updates_csv(result.histories[i], *config.output / ("replica_" + std::to_string(i) + "_updates.csv"));
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  std::size_t threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, config.replicas);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  result.aggregate = aggregate(result.histories);
  if (config.output) emit_csv(result.aggregate, *config.output / "aggregate.csv");
  return result;
}

std::optional<std::size_t> trials_to_threshold(const RunHistory& history, double threshold) {
  for (const auto& r : history.trials) {
    if (r.best >= threshold) return r.trial;
  }
  return std::nullopt;
}

ComparisonReport compare_runs(const std::vector<RunHistory>& a, const std::vector<RunHistory>& b, double threshold,
                              std::string name_a, std::string name_b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("compare needs at least one replica per variant");
  const std::size_t budget = a.front().trials.size();
  for (const auto* runs : {&a, &b}) {
    for (const auto& h : *runs) {
      if (h.trials.size() != budget) {
        throw std::invalid_argument("trial budgets differ: " + std::to_string(budget) + " vs " +
                                    std::to_string(h.trials.size()));
      }
    }
  }
  if (budget == 0) throw std::invalid_argument("compare needs non-empty histories");

  ComparisonReport r;
  r.threshold = threshold;
  r.budget = budget;
  r.a = summarize(a, threshold, budget, std::move(name_a));
  r.b = summarize(b, threshold, budget, std::move(name_b));
  r.final_gap = r.a.final_mean_best - r.b.final_mean_best;
  if (r.a.median_trials_to_threshold < r.b.median_trials_to_threshold) r.dominant = r.a.name;
  else if (r.b.median_trials_to_threshold < r.a.median_trials_to_threshold) r.dominant = r.b.name;
  return r;
}

std::string format_report(const ComparisonReport& r) {
  std::ostringstream out;
  out << "threshold " << fmt9(r.threshold) << ", budget " << r.budget << " trials\n";
  for (const VariantSummary* v : {&r.a, &r.b}) {
    out << v->name << ": reached in " << v->replicas_reaching << "/" << v->trials_to_threshold.size()
        << " replicas, median trials-to-threshold " << fmt9(v->median_trials_to_threshold)
        << ", final mean best " << fmt9(v->final_mean_best) << "\n  per replica:";
    for (const auto& t : v->trials_to_threshold) out << " " << (t ? std::to_string(*t) : std::string("-"));
    out << "\n";
  }
  out << "final gap (" << r.a.name << " - " << r.b.name << ") " << fmt9(r.final_gap) << "\n";
  out << "dominant: " << r.dominant.value_or("none") << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// CSV

void emit_csv(const RunHistory& history, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << kHistoryHeader << "\n";
  for (const auto& r : history.trials) {
    out << r.trial << "," << fmt9(r.reward) << "," << fmt9(r.best) << "," << fmt9(r.moving_average) << "\n";
  }
  finish(out, path);
}

void emit_csv(const Aggregate& aggregate, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << kAggregateHeader << "\n";
  for (const auto& r : aggregate) {
    out << r.trial << "," << fmt9(r.mean_best) << "," << fmt9(r.min_best) << "," << fmt9(r.max_best) << "\n";
  }
  finish(out, path);
}

void emit_updates_csv(const RunHistory& history, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << kUpdatesHeader << "\n";
  for (std::size_t i = 0; i < history.updates.size(); ++i) {
    const auto& u = history.updates[i];
    out << i + 1 << "," << fmt9(u.loss) << "," << fmt9(u.entropy) << "," << fmt9(u.baseline) << "\n";
  }
  finish(out, path);
}

RunHistory read_history_csv(const std::filesystem::path& path) {
  RunHistory h;
  for (const auto& row : read_numeric_csv(path, kHistoryHeader)) {
    h.trials.push_back({static_cast<std::size_t>(row[0]), row[1], row[2], row[3]});
  }
  return h;
}

Aggregate read_aggregate_csv(const std::filesystem::path& path) {
  Aggregate a;
  for (const auto& row : read_numeric_csv(path, kAggregateHeader)) {
    a.push_back({static_cast<std::size_t>(row[0]), row[1], row[2], row[3]});
  }
  return a;
}

std::vector<RunHistory> read_experiment(const std::filesystem::path& dir) {
  std::vector<RunHistory> out;
  for (std::size_t i = 0;; ++i) {
    auto p = dir / ("replica_" + std::to_string(i) + ".csv");
    if (!std::filesystem::exists(p)) break;
    out.push_back(read_history_csv(p));
  }
  if (out.empty()) throw std::runtime_error("no replica_<i>.csv files in " + dir.string());
  return out;
}

}  // namespace graphnas
