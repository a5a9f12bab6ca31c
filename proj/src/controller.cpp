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

#include "graphnas/controller.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace graphnas {

namespace {

constexpr std::array<const char*, 4> kGates = {"input", "forget", "cell", "output"};

std::string gate_weight(std::size_t g) { return std::string("lstm/") + kGates[g] + "/weight"; }
std::string gate_bias(std::size_t g) { return std::string("lstm/") + kGates[g] + "/bias"; }

Tensor uniform(Shape shape, double scale, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

void expect_shape(const ParamSet& p, const std::string& name, const Shape& shape) {
  if (!p.contains(name)) throw std::invalid_argument("controller parameters lack '" + name + "'");
  if (p[name].shape() != shape) {
    throw std::invalid_argument("controller parameter '" + name + "' has shape " + shape_to_string(p[name].shape()) +
                                ", expected " + shape_to_string(shape));
  }
}

}  // namespace

void ControllerConfig::check() const {
  if (state_embedding_dim < 1 || action_embedding_dim < 1 || aggregator_hidden_dim < 1 || lstm_hidden_dim < 1) {
    throw std::invalid_argument("controller dimensions must all be >= 1");
  }
}

std::string head_weight_name(std::size_t vertex) { return "head/" + std::to_string(vertex) + "/weight"; }
std::string head_bias_name(std::size_t vertex) { return "head/" + std::to_string(vertex) + "/bias"; }

ControllerParams::ControllerParams(std::shared_ptr<const SearchGraph> graph, ControllerConfig config, ParamSet params)
    : graph_(std::move(graph)), config_(config), params_(std::move(params)) {
  if (!graph_) throw std::invalid_argument("controller needs a search graph");
  config_.check();
  const SearchGraph& g = *graph_;
  const std::size_t hidden = config_.lstm_hidden_dim;
  const std::size_t agg = config_.aggregator_hidden_dim;

  expect_shape(params_, "state_embedding", {g.vertex_count(), config_.state_embedding_dim});
  expect_shape(params_, "action_embedding", {g.edge_count() + 1, config_.action_embedding_dim});
  expect_shape(params_, "aggregator/weight", {agg, config_.state_embedding_dim + config_.action_embedding_dim});
  expect_shape(params_, "aggregator/bias", {agg});
  for (std::size_t gate = 0; gate < kGates.size(); ++gate) {
    expect_shape(params_, gate_weight(gate), {hidden, agg + hidden});
    expect_shape(params_, gate_bias(gate), {hidden});
  }
  shared_.state_embedding = params_.index("state_embedding");
  shared_.action_embedding = params_.index("action_embedding");
  shared_.aggregator_weight = params_.index("aggregator/weight");
  shared_.aggregator_bias = params_.index("aggregator/bias");
  for (std::size_t gate = 0; gate < kGates.size(); ++gate) {
    shared_.gate_weight[gate] = params_.index(gate_weight(gate));
    shared_.gate_bias[gate] = params_.index(gate_bias(gate));
  }

  heads_.resize(g.vertex_count());
  std::size_t expected = 2 + 2 + 2 * kGates.size();
  for (std::size_t v : g.decision_vertices()) {
    if (g.out_degree(v) == 0) continue;
    expect_shape(params_, head_weight_name(v), {g.out_degree(v), hidden});
    expect_shape(params_, head_bias_name(v), {g.out_degree(v)});
    heads_[v] = HeadIndex{params_.index(head_weight_name(v)), params_.index(head_bias_name(v))};
    expected += 2;
  }
  if (params_.size() != expected) {
    throw std::invalid_argument("controller parameter set has " + std::to_string(params_.size()) +
                                " tensors, expected " + std::to_string(expected));
  }
}

ControllerParams::HeadIndex ControllerParams::head(std::size_t vertex) const {
  if (vertex >= heads_.size() || !heads_[vertex]) {
    throw std::invalid_argument("vertex " + std::to_string(vertex) + " has no action head (not a decision vertex)");
  }
  return *heads_[vertex];
}

ControllerParams init_controller(const SearchGraph& graph, const ControllerConfig& config, std::uint64_t seed) {
  config.check();
  if (graph.decision_vertices().empty()) throw std::invalid_argument("graph has no decision vertices");
  require_valid(graph);

  Rng rng = Rng(seed).split(0);
  const double s = config.init_scale;
  const std::size_t hidden = config.lstm_hidden_dim;
  const std::size_t agg = config.aggregator_hidden_dim;

  ParamSet p;
  p.add("state_embedding", uniform({graph.vertex_count(), config.state_embedding_dim}, s, rng));
  p.add("action_embedding", uniform({graph.edge_count() + 1, config.action_embedding_dim}, s, rng));
  p.add("aggregator/weight", uniform({agg, config.state_embedding_dim + config.action_embedding_dim}, s, rng));
  p.add("aggregator/bias", Tensor({agg}));
  for (std::size_t gate = 0; gate < kGates.size(); ++gate) {
    p.add(gate_weight(gate), uniform({hidden, agg + hidden}, s, rng));
    p.add(gate_bias(gate), Tensor({hidden}, gate == 1 ? config.forget_bias : 0.0));
  }
  for (std::size_t v : graph.decision_vertices()) {
    p.add(head_weight_name(v), uniform({graph.out_degree(v), hidden}, s, rng));
    p.add(head_bias_name(v), Tensor({graph.out_degree(v)}));
  }
  return ControllerParams(std::make_shared<const SearchGraph>(graph), config, std::move(p));
}

void zero_heads(ControllerParams& params) {
  for (std::size_t v : params.graph().decision_vertices()) {
    auto h = params.head(v);
    params.params()[h.weight].fill(0.0);
    params.params()[h.bias].fill(0.0);
  }
}

RnnState zero_state(Tape& tape, const ControllerParams& params) {
  const std::size_t hidden = params.config().lstm_hidden_dim;
  return {tape.constant(Tensor({hidden})), tape.constant(Tensor({hidden}))};
}

StepResult controller_step(Tape& tape, const ControllerParams& params, std::size_t vertex,
                           std::optional<std::size_t> previous_edge, RnnState state) {
  // The tape may hold a copy of the parameters (finite differences perturb
  // one), so only the layout has to match.
  const ParamSet* bound = tape.params();
  if (bound != &params.params()) {
    bool same_layout = bound && bound->size() == params.params().size();
    for (std::size_t i = 0; same_layout && i < bound->size(); ++i) {
      same_layout = (*bound)[i].shape() == params.params()[i].shape();
    }
    if (!same_layout) throw std::invalid_argument("tape is not bound to these controller parameters");
  }
  const SearchGraph& g = params.graph();
  if (vertex >= g.vertex_count()) throw std::invalid_argument("vertex " + std::to_string(vertex) + " does not exist");
  if (g.is_terminal(vertex)) throw std::invalid_argument("controller step at terminal vertex " + std::to_string(vertex));
  std::size_t action_row = params.start_token_row();
  if (previous_edge) {
    if (*previous_edge >= g.edge_count() || g.edge(*previous_edge).target != vertex) {
      throw std::invalid_argument("previous action " + std::to_string(*previous_edge) + " does not enter vertex " +
                                  std::to_string(vertex));
    }
    action_row = *previous_edge;
  }

  const auto& idx = params.shared();
  Var state_emb = row(tape.param(idx.state_embedding), vertex);
  Var action_emb = row(tape.param(idx.action_embedding), action_row);
  Var x = tanh(add(matmul(tape.param(idx.aggregator_weight), concat(state_emb, action_emb)),
                   tape.param(idx.aggregator_bias)));

  Var z = concat(x, state.hidden);
  auto gate = [&](std::size_t g_index) {
    return add(matmul(tape.param(idx.gate_weight[g_index]), z), tape.param(idx.gate_bias[g_index]));
  };
  Var input_gate = sigmoid(gate(0));
  Var forget_gate = sigmoid(gate(1));
  Var candidate = tanh(gate(2));
  Var output_gate = sigmoid(gate(3));
  Var cell = add(mul(forget_gate, state.cell), mul(input_gate, candidate));
  Var hidden = mul(output_gate, tanh(cell));

  auto head = params.head(vertex);
  Var logits = add(matmul(tape.param(head.weight), hidden), tape.param(head.bias));
  return {logits, {hidden, cell}};
}

double SampledTrajectory::total_log_prob() const {
  return std::accumulate(log_probs.begin(), log_probs.end(), 0.0);
}

double SampledTrajectory::total_entropy() const {
  return std::accumulate(entropies.begin(), entropies.end(), 0.0);
}

SampledTrajectory sample_trajectory(const ControllerParams& params, Rng& rng, std::size_t max_steps) {
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  const SearchGraph& g = params.graph();
  Tape tape(&params.params());
  RnnState state = zero_state(tape, params);

  SampledTrajectory out;
  std::size_t vertex = g.start();
  std::optional<std::size_t> previous;
  while (!g.is_terminal(vertex) && out.trajectory.steps.size() < max_steps) {
    StepResult step = controller_step(tape, params, vertex, previous, state);
    Var probs = softmax(step.logits);
    Var log_probs = log_softmax(step.logits);
    const Tensor& p = probs.value();

    const double u = rng.uniform();
    std::size_t action = p.size() - 1;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      cumulative += p[i];
      if (u < cumulative) {
        action = i;
        break;
      }
    }

    const std::size_t edge = g.out_edges(vertex)[action];
    out.trajectory.steps.push_back({vertex, edge});
    out.log_probs.push_back(log_probs.value()[action]);
    out.entropies.push_back(entropy(probs).scalar());
    previous = edge;
    vertex = g.edge(edge).target;
    state = step.state;
  }
  out.trajectory.final_vertex = vertex;
  out.trajectory.truncated = !g.is_terminal(vertex);
  return out;
}

TrajectoryScore score_on_tape(Tape& tape, const ControllerParams& params, const Trajectory& trajectory) {
  const SearchGraph& g = params.graph();
  check_trajectory(g, trajectory);
  RnnState state = zero_state(tape, params);
  std::optional<std::size_t> previous;
  Var log_prob;
  Var ent;
  for (const auto& s : trajectory.steps) {
    StepResult step = controller_step(tape, params, s.vertex, previous, state);
    Var lp = scale(nll(log_softmax(step.logits), g.action_index(s.edge)), -1.0);
    Var h = entropy(softmax(step.logits));
    log_prob = log_prob.id() < 0 ? lp : add(log_prob, lp);
    ent = ent.id() < 0 ? h : add(ent, h);
    previous = s.edge;
    state = step.state;
  }
  return {log_prob, ent};
}

ScoreValues score_trajectory(const ControllerParams& params, const Trajectory& trajectory) {
  Tape tape(&params.params());
  TrajectoryScore s = score_on_tape(tape, params, trajectory);
  return {s.log_prob.scalar(), s.entropy.scalar()};
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'G', 'N', 'A', 'S', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) throw std::runtime_error("truncated checkpoint: " + path.string());
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

void save_checkpoint(const ControllerParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  const auto& c = params.config();
  for (std::uint64_t d : {c.state_embedding_dim, c.action_embedding_dim, c.aggregator_hidden_dim, c.lstm_hidden_dim}) {
    put<std::uint64_t>(out, d);
  }
  const ParamSet& p = params.params();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name(i).size()));
    out.write(p.name(i).data(), static_cast<std::streamsize>(p.name(i).size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p[i].rank()));
    for (std::size_t d : p[i].shape()) put<std::uint64_t>(out, d);
    for (double v : p[i].values()) put<double>(out, v);
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ControllerParams load_checkpoint(const std::filesystem::path& path, std::shared_ptr<const SearchGraph> graph) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a controller checkpoint: " + path.string());
  }
  if (auto v = get<std::uint32_t>(in, path); v != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(v));
  }
  ControllerConfig config;
  config.state_embedding_dim = get<std::uint64_t>(in, path);
  config.action_embedding_dim = get<std::uint64_t>(in, path);
  config.aggregator_hidden_dim = get<std::uint64_t>(in, path);
  config.lstm_hidden_dim = get<std::uint64_t>(in, path);

  ParamSet p;
  const auto count = get<std::uint32_t>(in, path);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(get<std::uint32_t>(in, path), '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name.size()))) {
      throw std::runtime_error("truncated checkpoint: " + path.string());
    }
    Shape shape(get<std::uint32_t>(in, path));
    for (auto& d : shape) d = get<std::uint64_t>(in, path);
    Tensor t(shape);
    for (double& v : t.values()) v = get<double>(in, path);
    p.add(std::move(name), std::move(t));
  }
  return ControllerParams(std::move(graph), config, std::move(p));
}

}  // namespace graphnas
