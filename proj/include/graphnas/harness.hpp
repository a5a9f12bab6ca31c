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

// Seeded multi-replica experiments, CSV output and linear-vs-graph reports.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "graphnas/environments.hpp"
#include "graphnas/training.hpp"

namespace graphnas {

struct EnvironmentSpec {
  std::string name = "stack_layers";  // stack_layers | select_optimizer
  Encoding encoding = Encoding::kGraph;
  std::size_t layers = 10;            // stack_layers: L
  std::size_t max_steps = 0;          // stack_layers: 0 = default cap
  std::size_t branches = 2;           // select_optimizer: B
  ValueRange range{1, 100};           // select_optimizer
  int target = 50;                    // select_optimizer
};

std::unique_ptr<Environment> make_environment(const EnvironmentSpec& spec);

struct ExperimentConfig {
  EnvironmentSpec env;
  SearchConfig search;
  std::size_t replicas = 10;
  std::uint64_t base_seed = 0;
  std::optional<std::filesystem::path> output;  // directory; nothing written if empty
  std::size_t threads = 0;                      // 0 = hardware concurrency
};

struct AggregateRow {
  std::size_t trial = 0;
  double mean_best = 0.0;
  double min_best = 0.0;
  double max_best = 0.0;
};

using Aggregate = std::vector<AggregateRow>;

// Per-trial mean/min/max of best-so-far across replicas.
Aggregate aggregate(const std::vector<RunHistory>& histories);

struct ExperimentResult {
  std::vector<RunHistory> histories;  // replica i ran with seed base_seed + i
  Aggregate aggregate;
};

// Runs every replica independently (concurrently when threads allow). When an
// output directory is set, writes replica_<i>.csv, replica_<i>_updates.csv
// and aggregate.csv there.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct VariantSummary {
  std::string name;
  Aggregate curve;
  std::vector<std::optional<std::size_t>> trials_to_threshold;  // per replica
  double median_trials_to_threshold = 0.0;  // absent counts as budget + 1
  std::size_t replicas_reaching = 0;
  double final_mean_best = 0.0;
};

struct ComparisonReport {
  double threshold = 0.0;
  std::size_t budget = 0;
  VariantSummary a;
  VariantSummary b;
  double final_gap = 0.0;              // a.final_mean_best - b.final_mean_best
  std::optional<std::string> dominant; // variant with the lower median, if any
};

std::optional<std::size_t> trials_to_threshold(const RunHistory& history, double threshold);

ComparisonReport compare_runs(const std::vector<RunHistory>& a, const std::vector<RunHistory>& b, double threshold,
                              std::string name_a = "a", std::string name_b = "b");

std::string format_report(const ComparisonReport& report);

// CSV output. Floats use 9 significant digits.
void emit_csv(const RunHistory& history, const std::filesystem::path& path);
void emit_csv(const Aggregate& aggregate, const std::filesystem::path& path);
void emit_updates_csv(const RunHistory& history, const std::filesystem::path& path);

RunHistory read_history_csv(const std::filesystem::path& path);
Aggregate read_aggregate_csv(const std::filesystem::path& path);

// Loads replica_0.csv, replica_1.csv, ... from an experiment directory.
std::vector<RunHistory> read_experiment(const std::filesystem::path& dir);

// Default trials-to-threshold level for an environment name.
double default_threshold(const std::string& env_name);

}  // namespace graphnas
