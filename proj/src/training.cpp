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

#include "graphnas/training.hpp"

#include <algorithm>
#include <stdexcept>

namespace graphnas {

namespace {

void check_batch(const ControllerParams& params, std::span<const ScoredTrajectory> batch) {
  if (batch.empty()) throw std::invalid_argument("update needs a non-empty batch");
  for (const auto& item : batch) {
    if (!(item.reward >= 0.0 && item.reward <= 1.0)) {
      throw std::invalid_argument("reward " + std::to_string(item.reward) + " outside [0, 1]");
    }
    check_trajectory(params.graph(), item.trajectory);
  }
}

double batch_mean(std::span<const ScoredTrajectory> batch) {
  double s = 0.0;
  for (const auto& item : batch) s += item.reward;
  return s / static_cast<double>(batch.size());
}

// Adds `term` to an optional running sum on the tape.
void accumulate(Var& total, Var term) { total = total.id() < 0 ? term : add(total, term); }

struct EntropyTerm {
  Var sum;
  double mean = 0.0;
};

// sum_i H(tau_i) over the batch, scored on `tape`; the log-probs are returned
// through `log_probs` so REINFORCE can reuse the same replay.
EntropyTerm score_batch(Tape& tape, const ControllerParams& params, std::span<const ScoredTrajectory> batch,
                        std::vector<Var>* log_probs) {
  EntropyTerm out;
  for (const auto& item : batch) {
    TrajectoryScore s = score_on_tape(tape, params, item.trajectory);
    accumulate(out.sum, s.entropy);
    if (log_probs) log_probs->push_back(s.log_prob);
  }
  out.mean = out.sum.scalar() / static_cast<double>(batch.size());
  return out;
}

// -(1/N) sum_i (R_i - b) log p(tau_i)
Var policy_gradient_term(std::span<const ScoredTrajectory> batch, const std::vector<Var>& log_probs, double baseline) {
  Var total;
  const double n = static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    accumulate(total, scale(log_probs[i], -(batch[i].reward - baseline) / n));
  }
  return total;
}

void update_baseline(TrainState& state, double decay, double mean) {
  state.baseline = decay * *state.baseline + (1.0 - decay) * mean;
}

}  // namespace

void ReinforceConfig::check() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(entropy_coefficient >= 0.0)) throw std::invalid_argument("entropy coefficient must be >= 0");
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0)) throw std::invalid_argument("baseline decay must be in [0, 1)");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
}

void PqtConfig::check() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(entropy_coefficient >= 0.0)) throw std::invalid_argument("entropy coefficient must be >= 0");
  if (queue_capacity < 1) throw std::invalid_argument("queue capacity must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(policy_gradient_weight >= 0.0)) throw std::invalid_argument("policy gradient weight must be >= 0");
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0)) throw std::invalid_argument("baseline decay must be in [0, 1)");
}

// ---------------------------------------------------------------------------
// PriorityQueue

PriorityQueue::PriorityQueue(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ < 1) throw std::invalid_argument("queue capacity must be >= 1");
}

bool PriorityQueue::contains(std::span<const std::size_t> actions) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const ScoredTrajectory& e) {
    return std::ranges::equal(e.trajectory.actions(), actions);
  });
}

bool PriorityQueue::offer(const Trajectory& trajectory, double reward) {
  const auto actions = trajectory.actions();
  if (contains(actions)) return false;
  if (entries_.size() == capacity_ && !(reward > entries_.back().reward)) return false;
  auto pos = std::find_if(entries_.begin(), entries_.end(), [&](const ScoredTrajectory& e) { return e.reward < reward; });
  entries_.insert(pos, {trajectory, reward});
  if (entries_.size() > capacity_) entries_.pop_back();
  return true;
}

// ---------------------------------------------------------------------------
// Updates

UpdateMetrics reinforce_update(ControllerParams& params, std::span<const ScoredTrajectory> batch,
                               const ReinforceConfig& config, TrainState& state) {
  config.check();
  check_batch(params, batch);
  const double mean = batch_mean(batch);
  if (!state.baseline) state.baseline = mean;

  Gradients grads;
  UpdateMetrics metrics;
  {
    Tape tape(&params.params());
    std::vector<Var> log_probs;
    EntropyTerm ent = score_batch(tape, params, batch, &log_probs);
    Var loss = add(policy_gradient_term(batch, log_probs, *state.baseline),
                   scale(ent.sum, -config.entropy_coefficient / static_cast<double>(batch.size())));
    grads = tape.backward(loss);
    metrics.loss = loss.scalar();
    metrics.mean_entropy = ent.mean;
  }
  adam_step(params.params(), grads, config.learning_rate, state.adam);

  update_baseline(state, config.baseline_decay, mean);
  state.trials += batch.size();
  metrics.baseline = *state.baseline;
  return metrics;
}

UpdateMetrics pqt_update(ControllerParams& params, std::span<const ScoredTrajectory> batch, const PqtConfig& config,
                         TrainState& state) {
  config.check();
  check_batch(params, batch);
  if (state.queue.capacity() != config.queue_capacity) {
    if (!state.queue.empty()) throw std::invalid_argument("queue capacity changed mid-run");
    state.queue = PriorityQueue(config.queue_capacity);
  }
  for (const auto& item : batch) state.queue.offer(item.trajectory, item.reward);
  const double mean = batch_mean(batch);
  if (!state.baseline) state.baseline = mean;

  Gradients grads;
  UpdateMetrics metrics;
  {
    Tape tape(&params.params());
    Var queue_ll;
    for (const auto& entry : state.queue.entries()) {
      accumulate(queue_ll, score_on_tape(tape, params, entry.trajectory).log_prob);
    }
    Var loss = scale(queue_ll, -1.0 / static_cast<double>(state.queue.size()));

    const bool with_pg = config.policy_gradient_weight > 0.0;
    std::vector<Var> log_probs;
    EntropyTerm ent = score_batch(tape, params, batch, with_pg ? &log_probs : nullptr);
    loss = add(loss, scale(ent.sum, -config.entropy_coefficient / static_cast<double>(batch.size())));
    if (with_pg) {
      loss = add(loss, scale(policy_gradient_term(batch, log_probs, *state.baseline), config.policy_gradient_weight));
    }
    grads = tape.backward(loss);
    metrics.loss = loss.scalar();
    metrics.mean_entropy = ent.mean;
  }
  adam_step(params.params(), grads, config.learning_rate, state.adam);

  update_baseline(state, config.baseline_decay, mean);
  state.trials += batch.size();
  metrics.baseline = *state.baseline;
  return metrics;
}

// ---------------------------------------------------------------------------
// Search loop

std::string_view algorithm_name(Algorithm a) { return a == Algorithm::kReinforce ? "reinforce" : "pqt"; }

Algorithm parse_algorithm(std::string_view name) {
  if (name == "reinforce") return Algorithm::kReinforce;
  if (name == "pqt") return Algorithm::kPqt;
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "' (expected reinforce or pqt)");
}

void RunHistory::record(double reward) {
  TrialRecord r;
  r.trial = trials.size() + 1;
  r.reward = reward;
  r.best = trials.empty() ? reward : std::max(trials.back().best, reward);
  const std::size_t window = std::min(kMovingAverageWindow, trials.size() + 1);
  double s = reward;
  for (std::size_t i = trials.size() + 1 - window; i < trials.size(); ++i) s += trials[i].reward;
  r.moving_average = s / static_cast<double>(window);
  trials.push_back(r);
}

RunHistory run_search(const Environment& env, const SearchConfig& config) {
  if (config.trials < 1) throw std::invalid_argument("trial budget must be >= 1");
  const std::size_t batch_size = config.batch_size();
  if (config.algorithm == Algorithm::kReinforce) config.reinforce.check();
  else config.pqt.check();
  if (config.trials < batch_size) throw std::invalid_argument("trial budget is smaller than the batch size");

  ControllerParams params = init_controller(env.graph(), config.controller, config.seed);
  Rng rng = Rng(config.seed).split(1);
  TrainState state{std::nullopt, PriorityQueue(config.pqt.queue_capacity), {}, 0};

  RunHistory history;
  history.trials.reserve(config.trials);
  std::vector<ScoredTrajectory> batch;
  while (history.trials.size() < config.trials) {
    const std::size_t n = std::min(batch_size, config.trials - history.trials.size());
    batch.clear();
    for (std::size_t i = 0; i < n; ++i) {
      SampledTrajectory s = sample_trajectory(params, rng, env.max_steps());
      RewardedTrial trial = env.reward(s.trajectory);
      history.record(trial.reward);
      batch.push_back({std::move(s.trajectory), trial.reward});
    }
    UpdateMetrics m = config.algorithm == Algorithm::kReinforce
                          ? reinforce_update(params, batch, config.reinforce, state)
                          : pqt_update(params, batch, config.pqt, state);
    history.updates.push_back({m.loss, m.mean_entropy, m.baseline});
  }
  return history;
}

}  // namespace graphnas
