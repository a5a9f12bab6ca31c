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

#include "graphnas/search_space.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace graphnas {

SearchGraph::SearchGraph(std::vector<Vertex> vertices, std::vector<Edge> edges, std::size_t start)
    : vertices_(std::move(vertices)), edges_(std::move(edges)), start_(start) {
  if (vertices_.empty()) throw std::invalid_argument("search graph has no vertices");
  if (start_ >= vertices_.size()) {
    throw std::invalid_argument("start vertex " + std::to_string(start_) + " does not exist");
  }
  out_.resize(vertices_.size());
  action_index_.resize(edges_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const Edge& edge = edges_[e];
    if (edge.source >= vertices_.size() || edge.target >= vertices_.size()) {
      throw std::invalid_argument("edge " + std::to_string(e) + " references a missing vertex");
    }
    action_index_[e] = out_[edge.source].size();
    out_[edge.source].push_back(e);
  }
}

std::vector<std::size_t> SearchGraph::decision_vertices() const {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < vertices_.size(); ++v) {
    if (is_decision(v)) out.push_back(v);
  }
  return out;
}

std::vector<std::size_t> Trajectory::actions() const {
  std::vector<std::size_t> a;
  a.reserve(steps.size());
  for (const auto& s : steps) a.push_back(s.edge);
  return a;
}

// ---------------------------------------------------------------------------
// Validation

std::vector<Violation> validate(const SearchGraph& g) {
  std::vector<Violation> out;
  const std::size_t n = g.vertex_count();

  if (!g.is_decision(g.start())) {
    out.push_back({"start-not-decision", "start vertex must be a decision vertex", {g.start()}, {}});
  }

  std::vector<std::size_t> terminals;
  for (std::size_t v = 0; v < n; ++v) {
    if (g.is_terminal(v)) {
      terminals.push_back(v);
      if (g.out_degree(v) > 0) {
        auto edges = g.out_edges(v);
        out.push_back({"terminal-with-out-edge", "terminal vertex " + std::to_string(v) + " has out-edges",
                       {v}, {edges.begin(), edges.end()}});
      }
    } else if (g.out_degree(v) == 0) {
      out.push_back({"dead-end", "decision vertex " + std::to_string(v) + " has no out-edges", {v}, {}});
    }
  }
  if (terminals.empty()) out.push_back({"no-terminal", "graph has no terminal vertex", {}, {}});

  std::vector<char> reachable(n, 0);
  std::vector<std::size_t> stack{g.start()};
  reachable[g.start()] = 1;
  while (!stack.empty()) {
    std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t e : g.out_edges(v)) {
      std::size_t w = g.edge(e).target;
      if (!reachable[w]) {
        reachable[w] = 1;
        stack.push_back(w);
      }
    }
  }

  std::vector<std::vector<std::size_t>> in(n);
  for (std::size_t e = 0; e < g.edge_count(); ++e) in[g.edge(e).target].push_back(g.edge(e).source);
  std::vector<char> reaches_terminal(n, 0);
  for (std::size_t t : terminals) {
    reaches_terminal[t] = 1;
    stack.push_back(t);
  }
  while (!stack.empty()) {
    std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t u : in[v]) {
      if (!reaches_terminal[u]) {
        reaches_terminal[u] = 1;
        stack.push_back(u);
      }
    }
  }

  Violation unreachable{"unreachable", "vertices not reachable from start", {}, {}};
  Violation stuck{"no-path-to-terminal", "decision vertices with no path to a terminal", {}, {}};
  for (std::size_t v = 0; v < n; ++v) {
    if (!reachable[v]) unreachable.vertices.push_back(v);
    else if (g.is_decision(v) && !reaches_terminal[v]) stuck.vertices.push_back(v);
  }
  if (!unreachable.vertices.empty()) out.push_back(std::move(unreachable));
  if (!stuck.vertices.empty()) out.push_back(std::move(stuck));
  return out;
}

void require_valid(const SearchGraph& graph) {
  auto violations = validate(graph);
  if (violations.empty()) return;
  std::string msg = "invalid search graph:";
  for (const auto& v : violations) msg += " [" + v.code + "] " + v.detail + ";";
  throw std::invalid_argument(msg);
}

// ---------------------------------------------------------------------------
// Trajectories

void check_trajectory(const SearchGraph& g, const Trajectory& t, std::size_t max_steps) {
  auto fail = [](const std::string& why) { throw std::invalid_argument("invalid trajectory: " + why); };
  if (t.steps.empty()) fail("no steps");
  if (t.steps.front().vertex != g.start()) fail("does not begin at the start vertex");
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    if (s.vertex >= g.vertex_count() || s.edge >= g.edge_count()) fail("step " + std::to_string(i) + " out of range");
    if (g.edge(s.edge).source != s.vertex) {
      fail("edge " + std::to_string(s.edge) + " at step " + std::to_string(i) + " does not leave vertex " +
           std::to_string(s.vertex));
    }
    const std::size_t next = g.edge(s.edge).target;
    const std::size_t expected = i + 1 < t.steps.size() ? t.steps[i + 1].vertex : t.final_vertex;
    if (next != expected) fail("step " + std::to_string(i) + " does not chain to the next vertex");
    if (i + 1 < t.steps.size() && g.is_terminal(next)) fail("walk continues past a terminal");
  }
  if (!t.truncated && !g.is_terminal(t.final_vertex)) fail("untruncated walk ends at a decision vertex");
  if (t.truncated && g.is_terminal(t.final_vertex)) fail("truncated walk ends at a terminal");
  if (t.truncated && max_steps > 0 && t.length() != max_steps) fail("truncated walk is shorter than the cap");
}

Trajectory follow_edges(const SearchGraph& g, std::span<const std::size_t> edges) {
  Trajectory t;
  std::size_t v = g.start();
  for (std::size_t e : edges) {
    if (e >= g.edge_count() || g.edge(e).source != v) {
      throw std::invalid_argument("edge " + std::to_string(e) + " does not leave vertex " + std::to_string(v));
    }
    t.steps.push_back({v, e});
    v = g.edge(e).target;
  }
  t.final_vertex = v;
  t.truncated = !g.is_terminal(v);
  return t;
}

std::vector<Trajectory> enumerate_trajectories(const SearchGraph& g, std::size_t max_steps, std::size_t limit) {
  std::vector<Trajectory> out;
  if (max_steps == 0) return out;

  std::vector<TrajectoryStep> path;
  auto dfs = [&](auto& self, std::size_t v) -> void {
    for (std::size_t e : g.out_edges(v)) {
      const std::size_t w = g.edge(e).target;
      path.push_back({v, e});
      if (g.is_terminal(w)) {
        if (out.size() >= limit) {
          throw std::length_error("trajectory enumeration exceeds " + std::to_string(limit) + " trajectories");
        }
        out.push_back({path, w, false});
      } else if (path.size() < max_steps) {
        self(self, w);
      }
      path.pop_back();
    }
  };
  dfs(dfs, g.start());
  return out;
}

// ---------------------------------------------------------------------------
// Encodings and builders

std::string_view encoding_name(Encoding e) { return e == Encoding::kLinear ? "linear" : "graph"; }

Encoding parse_encoding(std::string_view name) {
  if (name == "linear") return Encoding::kLinear;
  if (name == "graph") return Encoding::kGraph;
  throw std::invalid_argument("unknown variant '" + std::string(name) + "' (expected linear or graph)");
}

SearchGraph build_linear_chain(const LinearChainSpec& spec) {
  if (spec.action_counts.empty()) throw std::invalid_argument("linear chain needs at least one position");
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < spec.action_counts.size(); ++i) {
    if (spec.action_counts[i] == 0) {
      throw std::invalid_argument("linear chain position " + std::to_string(i) + " has no actions");
    }
    vertices.push_back({VertexKind::kDecision, "position:" + std::to_string(i)});
    for (std::size_t a = 0; a < spec.action_counts[i]; ++a) {
      edges.push_back({i, i + 1, "action:" + std::to_string(a)});
    }
  }
  vertices.push_back({VertexKind::kTerminal, "end"});
  return SearchGraph(std::move(vertices), std::move(edges), 0);
}

SearchGraph build_stack_layers(Encoding encoding, std::size_t max_layers_half) {
  if (max_layers_half < 1) throw std::invalid_argument("stack-layers target L must be >= 1");
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;
  if (encoding == Encoding::kGraph) {
    vertices = {{VertexKind::kDecision, "layers"}, {VertexKind::kTerminal, "end"}};
    edges = {{0, 0, std::string(kAddLayer)}, {0, 1, std::string(kStop)}};
  } else {
    const std::size_t positions = 2 * max_layers_half;
    for (std::size_t i = 0; i < positions; ++i) {
      vertices.push_back({VertexKind::kDecision, "position:" + std::to_string(i)});
      edges.push_back({i, i + 1, std::string(kAddLayer)});
      edges.push_back({i, i + 1, std::string(kTerminate)});
    }
    vertices.push_back({VertexKind::kTerminal, "end"});
  }
  return SearchGraph(std::move(vertices), std::move(edges), 0);
}

SearchGraph build_select_optimizer(Encoding encoding, std::size_t branches, ValueRange range) {
  if (branches < 1) throw std::invalid_argument("select-optimizer needs at least one branch");
  if (range.size() == 0) throw std::invalid_argument("select-optimizer value range is empty");

  const std::size_t hyper = kHyperparametersPerBranch * branches;
  const std::size_t terminal = 1 + hyper;
  std::vector<Vertex> vertices{{VertexKind::kDecision, "optimizer"}};
  for (std::size_t b = 0; b < branches; ++b) {
    for (std::size_t k = 0; k < kHyperparametersPerBranch; ++k) {
      vertices.push_back({VertexKind::kDecision,
                          "optimizer:" + std::to_string(b + 1) + ".p" + std::to_string(k + 1)});
    }
  }
  vertices.push_back({VertexKind::kTerminal, "end"});

  // Vertex 1 + 4b + k holds hyperparameter k of branch b in both encodings.
  std::vector<Edge> edges;
  for (std::size_t b = 0; b < branches; ++b) {
    const std::size_t target = encoding == Encoding::kGraph ? 1 + kHyperparametersPerBranch * b : 1;
    edges.push_back({0, target, std::string(kOptimizerPrefix) + std::to_string(b + 1)});
  }
  for (std::size_t v = 1; v <= hyper; ++v) {
    const bool last_in_branch = (v - 1) % kHyperparametersPerBranch == kHyperparametersPerBranch - 1;
    std::size_t next = v + 1;
    if (encoding == Encoding::kGraph && last_in_branch) next = terminal;
    for (int x = range.lo; x <= range.hi; ++x) {
      edges.push_back({v, next, std::string(kValuePrefix) + std::to_string(x)});
    }
  }
  return SearchGraph(std::move(vertices), std::move(edges), 0);
}

// ---------------------------------------------------------------------------
// JSON

std::string graph_to_json(const SearchGraph& g) {
  nlohmann::ordered_json j;
  j["start"] = g.start();
  j["vertices"] = nlohmann::ordered_json::array();
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    j["vertices"].push_back({{"id", v},
                             {"kind", g.is_terminal(v) ? "terminal" : "decision"},
                             {"label", g.vertex(v).label}});
  }
  j["edges"] = nlohmann::ordered_json::array();
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const Edge& edge = g.edge(e);
    j["edges"].push_back({{"id", e}, {"source", edge.source}, {"target", edge.target}, {"label", edge.label}});
  }
  return j.dump(2) + "\n";
}

SearchGraph graph_from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    std::vector<Vertex> vertices;
    for (const auto& jv : j.at("vertices")) {
      if (jv.contains("id") && jv.at("id").get<std::size_t>() != vertices.size()) {
        throw std::invalid_argument("vertex ids must be 0..n-1 in order");
      }
      const auto kind = jv.at("kind").get<std::string>();
      if (kind != "decision" && kind != "terminal") throw std::invalid_argument("unknown vertex kind '" + kind + "'");
      vertices.push_back({kind == "terminal" ? VertexKind::kTerminal : VertexKind::kDecision,
                          jv.value("label", std::string())});
    }
    std::vector<Edge> edges;
    for (const auto& je : j.at("edges")) {
      if (je.contains("id") && je.at("id").get<std::size_t>() != edges.size()) {
        throw std::invalid_argument("edge ids must be 0..m-1 in order");
      }
      edges.push_back({je.at("source").get<std::size_t>(), je.at("target").get<std::size_t>(),
                       je.value("label", std::string())});
    }
    return SearchGraph(std::move(vertices), std::move(edges), j.at("start").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed graph description: ") + e.what());
  }
}

void save_graph(const SearchGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << graph_to_json(graph);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

SearchGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return graph_from_json(ss.str());
}

}  // namespace graphnas
