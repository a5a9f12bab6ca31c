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

// Dynamic recurrent controller. Each timestep embeds the current vertex and
// the previous action, aggregates them with a dense tanh layer, advances an
// LSTM cell, and maps the hidden state to logits through the head owned by the
// current vertex. Embeddings, aggregator and LSTM are shared by all timesteps;
// heads are per decision vertex, so revisiting a vertex reuses its head.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "graphnas/autodiff.hpp"
#include "graphnas/random.hpp"
#include "graphnas/search_space.hpp"

namespace graphnas {

struct ControllerConfig {
  std::size_t state_embedding_dim = 16;
  std::size_t action_embedding_dim = 16;
  std::size_t aggregator_hidden_dim = 32;
  std::size_t lstm_hidden_dim = 64;
  double init_scale = 0.1;   // weights and embeddings ~ U[-init_scale, init_scale]
  double forget_bias = 1.0;

  void check() const;
};

class ControllerParams {
 public:
  ControllerParams(std::shared_ptr<const SearchGraph> graph, ControllerConfig config, ParamSet params);

  const SearchGraph& graph() const { return *graph_; }
  const std::shared_ptr<const SearchGraph>& graph_ptr() const { return graph_; }
  const ControllerConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  // Row of the action embedding table used for the start token.
  std::size_t start_token_row() const { return graph_->edge_count(); }

  struct HeadIndex {
    std::size_t weight;
    std::size_t bias;
  };
  HeadIndex head(std::size_t vertex) const;

  // Indices of the timestep-independent tensors within params().
  struct SharedIndex {
    std::size_t state_embedding;
    std::size_t action_embedding;
    std::size_t aggregator_weight;
    std::size_t aggregator_bias;
    std::size_t gate_weight[4];  // input, forget, cell, output
    std::size_t gate_bias[4];
  };
  const SharedIndex& shared() const { return shared_; }

  friend bool operator==(const ControllerParams& a, const ControllerParams& b) {
    return *a.graph_ == *b.graph_ && a.params_ == b.params_;
  }

 private:
  std::shared_ptr<const SearchGraph> graph_;
  ControllerConfig config_;
  ParamSet params_;
  std::vector<std::optional<HeadIndex>> heads_;
  SharedIndex shared_{};
};

// Parameter names, also used as checkpoint keys.
std::string head_weight_name(std::size_t vertex);
std::string head_bias_name(std::size_t vertex);

// Fresh parameters for `graph`: uniform weights, zero biases, forget-gate bias
// set to config.forget_bias. Deterministic in `seed`.
ControllerParams init_controller(const SearchGraph& graph, const ControllerConfig& config, std::uint64_t seed);

// Zeroes every head so each vertex starts with a uniform action distribution.
void zero_heads(ControllerParams& params);

struct RnnState {
  Var hidden;
  Var cell;
};

RnnState zero_state(Tape& tape, const ControllerParams& params);

struct StepResult {
  Var logits;  // one entry per out-edge of the vertex, in out_edges() order
  RnnState state;
};

// One controller timestep on `tape`, which must be bound to params.params() or
// to a ParamSet with the same layout.
// `previous_edge` is empty for the first step (start token) and otherwise must
// be an edge entering `vertex`.
StepResult controller_step(Tape& tape, const ControllerParams& params, std::size_t vertex,
                           std::optional<std::size_t> previous_edge, RnnState state);

struct SampledTrajectory {
  Trajectory trajectory;
  std::vector<double> log_probs;  // per step
  std::vector<double> entropies;  // per step
  double total_log_prob() const;
  double total_entropy() const;
};

// Walks from the start vertex sampling each action by inverse CDF over the
// softmax of the step logits. Stops at a terminal or, after max_steps
// actions, returns the walk flagged as truncated.
SampledTrajectory sample_trajectory(const ControllerParams& params, Rng& rng, std::size_t max_steps);

struct TrajectoryScore {
  Var log_prob;  // sum over steps of log p(a_t)
  Var entropy;   // sum over steps of H(p_t)
};

// Replays `trajectory` on `tape` so both totals can be differentiated.
TrajectoryScore score_on_tape(Tape& tape, const ControllerParams& params, const Trajectory& trajectory);

struct ScoreValues {
  double log_prob = 0.0;
  double entropy = 0.0;
};

ScoreValues score_trajectory(const ControllerParams& params, const Trajectory& trajectory);

// Binary checkpoint; layout documented in README. Loading reproduces every
// tensor bit for bit and rejects files that do not fit `graph`.
void save_checkpoint(const ControllerParams& params, const std::filesystem::path& path);
ControllerParams load_checkpoint(const std::filesystem::path& path, std::shared_ptr<const SearchGraph> graph);

}  // namespace graphnas
