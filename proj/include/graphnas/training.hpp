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

// Policy-gradient training of the controller.
//
// REINFORCE minimizes
//   -(1/N) sum_i (R_i - b) log p(tau_i) - alpha (1/N) sum_i H(tau_i)
// with b an exponential moving average of batch-mean rewards.
//
// Priority Queue Training keeps the K best distinct trajectories seen so far
// and minimizes
//   -(1/|Q|) sum_{tau in Q} log p(tau) - alpha (1/N) sum_i H(tau_i)
// optionally plus a weighted REINFORCE term.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "graphnas/autodiff.hpp"
#include "graphnas/controller.hpp"
#include "graphnas/environments.hpp"

namespace graphnas {

struct ReinforceConfig {
  double learning_rate = 0.001;
  double entropy_coefficient = 0.1;
  double baseline_decay = 0.95;
  std::size_t batch_size = 1;

  void check() const;
};

struct PqtConfig {
  double learning_rate = 0.001;
  double entropy_coefficient = 0.8;
  std::size_t queue_capacity = 10;
  std::size_t batch_size = 1;
  // Weight of an added REINFORCE term; 0 is pure queue training.
  double policy_gradient_weight = 0.0;
  double baseline_decay = 0.95;

  void check() const;
};

struct ScoredTrajectory {
  Trajectory trajectory;
  double reward = 0.0;
};

// Top-K trajectories by reward, one entry per distinct action sequence.
// Entries are ordered by non-increasing reward; ties keep arrival order.
class PriorityQueue {
 public:
  explicit PriorityQueue(std::size_t capacity = 10);

  // Returns true if the queue changed.
  bool offer(const Trajectory& trajectory, double reward);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<ScoredTrajectory>& entries() const { return entries_; }
  bool contains(std::span<const std::size_t> actions) const;

 private:
  std::size_t capacity_;
  std::vector<ScoredTrajectory> entries_;
};

struct TrainState {
  std::optional<double> baseline;  // set from the first batch mean
  PriorityQueue queue;
  AdamState adam;
  std::size_t trials = 0;
};

struct UpdateMetrics {
  double loss = 0.0;
  double mean_entropy = 0.0;  // mean over the batch of per-trajectory total entropy
  double baseline = 0.0;
};

UpdateMetrics reinforce_update(ControllerParams& params, std::span<const ScoredTrajectory> batch,
                               const ReinforceConfig& config, TrainState& state);

UpdateMetrics pqt_update(ControllerParams& params, std::span<const ScoredTrajectory> batch, const PqtConfig& config,
                         TrainState& state);

enum class Algorithm : std::uint8_t { kReinforce, kPqt };

std::string_view algorithm_name(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

struct SearchConfig {
  Algorithm algorithm = Algorithm::kReinforce;
  ReinforceConfig reinforce;
  PqtConfig pqt;
  ControllerConfig controller;
  std::size_t trials = 200;
  std::uint64_t seed = 0;

  std::size_t batch_size() const {
    return algorithm == Algorithm::kReinforce ? reinforce.batch_size : pqt.batch_size;
  }
};

struct TrialRecord {
  std::size_t trial = 0;  // 1-based
  double reward = 0.0;
  double best = 0.0;
  double moving_average = 0.0;
};

struct UpdateRecord {
  double loss = 0.0;
  double entropy = 0.0;
  double baseline = 0.0;
};

inline constexpr std::size_t kMovingAverageWindow = 50;

struct RunHistory {
  std::vector<TrialRecord> trials;
  std::vector<UpdateRecord> updates;

  // Appends one trial, filling best-so-far and the trailing moving average.
  void record(double reward);
};

// Repeats {sample a batch, reward it, update} until `config.trials`
// trajectories have been evaluated. Deterministic in config.seed.
RunHistory run_search(const Environment& env, const SearchConfig& config);

}  // namespace graphnas
