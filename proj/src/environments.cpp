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

#include "graphnas/environments.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace graphnas {

namespace {

// Parses "<prefix><integer>".
int label_value(std::string_view label, std::string_view prefix) {
  if (!label.starts_with(prefix)) {
    throw std::invalid_argument("unexpected action label '" + std::string(label) + "'");
  }
  label.remove_prefix(prefix.size());
  int v = 0;
  auto [end, ec] = std::from_chars(label.data(), label.data() + label.size(), v);
  if (ec != std::errc() || end != label.data() + label.size()) {
    throw std::invalid_argument("malformed action label '" + std::string(prefix) + std::string(label) + "'");
  }
  return v;
}

double squared(double x) { return x * x; }

}  // namespace

RewardedTrial Environment::reward(const Trajectory& trajectory) const {
  RewardedTrial trial{trajectory, decode(trajectory), 0.0, 0.0};
  if (trajectory.truncated) return trial;
  Reward r = score(trial.decoded);
  trial.raw_reward = r.raw;
  trial.reward = r.normalized;
  return trial;
}

Reward stack_layers_reward(std::size_t layers, std::size_t target) {
  if (target < 1) throw std::invalid_argument("stack-layers target L must be >= 1");
  const double err = squared(static_cast<double>(layers) - static_cast<double>(target));
  return {0.0 - err, std::max(0.0, 1.0 - err / squared(static_cast<double>(target)))};
}

Reward select_optimizer_reward(std::size_t branch, const std::array<int, kHyperparametersPerBranch>& values,
                               std::size_t branches, ValueRange range, int target) {
  if (branch < 1 || branch > branches) {
    throw std::invalid_argument("optimizer branch " + std::to_string(branch) + " outside 1.." + std::to_string(branches));
  }
  if (!range.contains(target)) throw std::invalid_argument("target value outside the value range");
  for (int v : values) {
    if (!range.contains(v)) {
      throw std::invalid_argument("hyperparameter value " + std::to_string(v) + " outside [" + std::to_string(range.lo) +
                                  ", " + std::to_string(range.hi) + "]");
    }
  }
  const double penalty = squared(target);
  const double worst = std::max(squared(range.lo - target), squared(range.hi - target)) +
                       static_cast<double>(kHyperparametersPerBranch - 1) * penalty;

  double raw = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] != target) {
      raw = -squared(values[i] - target) - static_cast<double>(values.size() - 1 - i) * penalty;
      break;
    }
  }
  return {raw, worst > 0.0 ? 1.0 + raw / worst : 1.0};
}

// ---------------------------------------------------------------------------

StackLayersEnv::StackLayersEnv(Encoding encoding, std::size_t target_layers, std::size_t max_steps)
    : Environment(build_stack_layers(encoding, target_layers)),
      encoding_(encoding),
      target_(target_layers),
      max_steps_(max_steps) {
  if (max_steps_ == 0) max_steps_ = encoding == Encoding::kLinear ? 2 * target_layers : 10 * target_layers;
  if (encoding == Encoding::kLinear && max_steps_ < 2 * target_layers) {
    throw std::invalid_argument("linear stack-layers needs max_steps >= 2L");
  }
}

DecodedRecord StackLayersEnv::decode(const Trajectory& trajectory) const {
  check_trajectory(graph(), trajectory);
  LayerCount out;
  for (const auto& s : trajectory.steps) {
    const std::string& label = graph().edge(s.edge).label;
    if (label == kAddLayer) {
      ++out.layers;
    } else if (label == kStop || label == kTerminate) {
      break;  // in the linear encoding, positions after terminate are ignored
    } else {
      throw std::invalid_argument("unexpected action label '" + label + "'");
    }
  }
  return out;
}

Reward StackLayersEnv::score(const DecodedRecord& record) const {
  return stack_layers_reward(std::get<LayerCount>(record).layers, target_);
}

// ---------------------------------------------------------------------------

SelectOptimizerEnv::SelectOptimizerEnv(Encoding encoding, std::size_t branches, ValueRange range, int target)
    : Environment(build_select_optimizer(encoding, branches, range)),
      encoding_(encoding),
      branches_(branches),
      range_(range),
      target_(target) {
  if (!range_.contains(target_)) throw std::invalid_argument("target value outside the value range");
}

DecodedRecord SelectOptimizerEnv::decode(const Trajectory& trajectory) const {
  check_trajectory(graph(), trajectory);
  const auto& steps = trajectory.steps;
  OptimizerChoice out;
  out.branch = static_cast<std::size_t>(label_value(graph().edge(steps[0].edge).label, kOptimizerPrefix));
  if (out.branch < 1 || out.branch > branches_) throw std::invalid_argument("optimizer branch out of range");

  // Branch-major layout: in the linear encoding branch b's values sit at
  // steps 1 + 4(b - 1) .. 4 + 4(b - 1).
  const std::size_t first = encoding_ == Encoding::kGraph ? 1 : 1 + kHyperparametersPerBranch * (out.branch - 1);
  for (std::size_t i = 0; i < kHyperparametersPerBranch; ++i) {
    const std::size_t at = first + i;
    if (at >= steps.size()) throw std::invalid_argument("trajectory ends before all hyperparameters are chosen");
    out.values[i] = label_value(graph().edge(steps[at].edge).label, kValuePrefix);
  }
  return out;
}

Reward SelectOptimizerEnv::score(const DecodedRecord& record) const {
  const auto& c = std::get<OptimizerChoice>(record);
  return select_optimizer_reward(c.branch, c.values, branches_, range_, target_);
}

}  // namespace graphnas
