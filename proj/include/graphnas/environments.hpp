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

// Toy reward environments. Each owns its search graph, decodes a trajectory
// into the decisions it encodes, and scores them with a reward normalized to
// [0, 1]. Truncated walks always score 0.

#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <variant>

#include "graphnas/search_space.hpp"

namespace graphnas {

struct LayerCount {
  std::size_t layers = 0;
  friend bool operator==(const LayerCount&, const LayerCount&) = default;
};

struct OptimizerChoice {
  std::size_t branch = 1;  // 1-based
  std::array<int, kHyperparametersPerBranch> values{};
  friend bool operator==(const OptimizerChoice&, const OptimizerChoice&) = default;
};

using DecodedRecord = std::variant<LayerCount, OptimizerChoice>;

struct Reward {
  double raw = 0.0;
  double normalized = 0.0;
};

struct RewardedTrial {
  Trajectory trajectory;
  DecodedRecord decoded;
  double raw_reward = 0.0;
  double reward = 0.0;  // normalized, in [0, 1]
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual Encoding encoding() const = 0;
  const SearchGraph& graph() const { return *graph_; }
  const std::shared_ptr<const SearchGraph>& graph_ptr() const { return graph_; }

  // Sampling cap for walks through graph().
  virtual std::size_t max_steps() const = 0;

  virtual DecodedRecord decode(const Trajectory& trajectory) const = 0;
  virtual Reward score(const DecodedRecord& record) const = 0;

  RewardedTrial reward(const Trajectory& trajectory) const;

 protected:
  explicit Environment(SearchGraph graph) : graph_(std::make_shared<const SearchGraph>(std::move(graph))) {}

 private:
  std::shared_ptr<const SearchGraph> graph_;
};

// raw = -(n - L)^2, normalized = max(0, 1 - (n - L)^2 / L^2).
Reward stack_layers_reward(std::size_t layers, std::size_t target);

// Reward of choosing `values` for the hyperparameters of branch `branch`
// (1-based, at most `branches`). With M the first index whose value differs
// from `target`, raw = -(p_M - target)^2 - (4 - M) * target^2, and 0 when all
// values match. normalized = 1 + raw / worst, where worst is the magnitude of
// the lowest raw reward attainable on `range`.
Reward select_optimizer_reward(std::size_t branch, const std::array<int, kHyperparametersPerBranch>& values,
                               std::size_t branches, ValueRange range = {1, 100}, int target = 50);

class StackLayersEnv final : public Environment {
 public:
  // max_steps == 0 picks the default cap: 2L for linear, 10L for graph.
  StackLayersEnv(Encoding encoding, std::size_t target_layers, std::size_t max_steps = 0);

  std::string name() const override { return "stack_layers"; }
  Encoding encoding() const override { return encoding_; }
  std::size_t max_steps() const override { return max_steps_; }
  std::size_t target_layers() const { return target_; }

  DecodedRecord decode(const Trajectory& trajectory) const override;
  Reward score(const DecodedRecord& record) const override;

 private:
  Encoding encoding_;
  std::size_t target_;
  std::size_t max_steps_;
};

class SelectOptimizerEnv final : public Environment {
 public:
  SelectOptimizerEnv(Encoding encoding, std::size_t branches, ValueRange range = {1, 100}, int target = 50);

  std::string name() const override { return "select_optimizer"; }
  Encoding encoding() const override { return encoding_; }
  std::size_t max_steps() const override { return 1 + kHyperparametersPerBranch * (encoding_ == Encoding::kGraph ? 1 : branches_); }
  std::size_t branches() const { return branches_; }
  ValueRange range() const { return range_; }
  int target() const { return target_; }

  DecodedRecord decode(const Trajectory& trajectory) const override;
  Reward score(const DecodedRecord& record) const override;

 private:
  Encoding encoding_;
  std::size_t branches_;
  ValueRange range_;
  int target_;
};

}  // namespace graphnas
