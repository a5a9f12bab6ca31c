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

// Search spaces as directed multigraphs: every decision is a vertex, every
// action an edge. A walk from the start vertex to any terminal vertex spells
// out one architecture. Parallel edges and self-loops are allowed.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace graphnas {

enum class VertexKind : std::uint8_t { kDecision, kTerminal };

struct Vertex {
  VertexKind kind = VertexKind::kDecision;
  std::string label;

  friend bool operator==(const Vertex&, const Vertex&) = default;
};

struct Edge {
  std::size_t source = 0;
  std::size_t target = 0;
  std::string label;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Immutable once built. The constructor only rejects dangling ids; the
// structural invariants are checked by validate().
class SearchGraph {
 public:
  SearchGraph(std::vector<Vertex> vertices, std::vector<Edge> edges, std::size_t start);

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  std::size_t start() const { return start_; }

  const Vertex& vertex(std::size_t v) const { return vertices_.at(v); }
  const Edge& edge(std::size_t e) const { return edges_.at(e); }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }

  bool is_terminal(std::size_t v) const { return vertices_.at(v).kind == VertexKind::kTerminal; }
  bool is_decision(std::size_t v) const { return !is_terminal(v); }

  // Outgoing edge ids of `v`, in ascending edge-id order. Position in this
  // list is the action index used by the controller's head for `v`.
  std::span<const std::size_t> out_edges(std::size_t v) const { return out_.at(v); }
  std::size_t out_degree(std::size_t v) const { return out_.at(v).size(); }

  std::vector<std::size_t> decision_vertices() const;

  // Position of edge `e` within out_edges(edge(e).source).
  std::size_t action_index(std::size_t e) const { return action_index_.at(e); }

  friend bool operator==(const SearchGraph& a, const SearchGraph& b) {
    return a.start_ == b.start_ && a.vertices_ == b.vertices_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  std::size_t start_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::size_t> action_index_;
};

struct Violation {
  std::string code;  // e.g. "terminal-with-out-edge", "no-path-to-terminal"
  std::string detail;
  std::vector<std::size_t> vertices;
  std::vector<std::size_t> edges;
};

// Every violated invariant; empty means the graph can always be walked to a
// terminal given a large enough step cap.
std::vector<Violation> validate(const SearchGraph& graph);

// Throws std::invalid_argument listing the violations, if any.
void require_valid(const SearchGraph& graph);

struct TrajectoryStep {
  std::size_t vertex = 0;
  std::size_t edge = 0;

  friend bool operator==(const TrajectoryStep&, const TrajectoryStep&) = default;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  std::size_t final_vertex = 0;
  bool truncated = false;

  std::size_t length() const { return steps.size(); }
  std::vector<std::size_t> actions() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// Checks that `t` starts at the graph's start vertex and chains edge to
// edge; throws std::invalid_argument otherwise. `max_steps` of 0 disables the
// truncation-length check.
void check_trajectory(const SearchGraph& graph, const Trajectory& t, std::size_t max_steps = 0);

// Builds a trajectory by following `edges` from the start vertex.
Trajectory follow_edges(const SearchGraph& graph, std::span<const std::size_t> edges);

enum class Encoding : std::uint8_t { kLinear, kGraph };

std::string_view encoding_name(Encoding e);
Encoding parse_encoding(std::string_view name);

struct LinearChainSpec {
  std::vector<std::size_t> action_counts;
};

struct ValueRange {
  int lo = 1;
  int hi = 100;

  std::size_t size() const { return hi >= lo ? static_cast<std::size_t>(hi - lo + 1) : 0; }
  bool contains(int v) const { return v >= lo && v <= hi; }
};

// Edge labels written by the builders below and read back by the decoders.
inline constexpr std::string_view kAddLayer = "add_layer";
inline constexpr std::string_view kStop = "stop";
inline constexpr std::string_view kTerminate = "terminate";
inline constexpr std::string_view kOptimizerPrefix = "optimizer:";
inline constexpr std::string_view kValuePrefix = "value:";

// Path graph: one decision per position with action_counts[i] parallel edges
// to the next position, then a terminal.
SearchGraph build_linear_chain(const LinearChainSpec& spec);

// Graph: one decision vertex with an add_layer self-loop and a stop edge to
// the terminal. Linear: 2L binary positions, each offering add_layer or
// terminate; every trajectory has length 2L and the layer count is the number
// of add_layer actions before the first terminate.
SearchGraph build_stack_layers(Encoding encoding, std::size_t max_layers_half);

// Root decision with one edge per optimizer, then four hyperparameter
// decisions with one parallel edge per integer value. Graph: each optimizer
// owns a private branch of four vertices (trajectory length 5). Linear: all
// 4B hyperparameter vertices in one branch-major chain (length 1 + 4B).
SearchGraph build_select_optimizer(Encoding encoding, std::size_t branches, ValueRange range);

inline constexpr std::size_t kHyperparametersPerBranch = 4;
inline constexpr std::size_t kEnumerationLimit = 10'000'000;

// All distinct terminal-reaching trajectories of length <= max_steps, in
// depth-first order (edges visited in ascending id). Throws std::length_error
// once more than `limit` trajectories would be produced.
std::vector<Trajectory> enumerate_trajectories(const SearchGraph& graph, std::size_t max_steps,
                                               std::size_t limit = kEnumerationLimit);

// JSON graph description, see README for the schema.
std::string graph_to_json(const SearchGraph& graph);
SearchGraph graph_from_json(std::string_view text);
void save_graph(const SearchGraph& graph, const std::filesystem::path& path);
SearchGraph load_graph(const std::filesystem::path& path);

}  // namespace graphnas
