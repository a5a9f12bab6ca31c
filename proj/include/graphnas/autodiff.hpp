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

// Reverse-mode automatic differentiation over a flat tape.
//
// A Tape records primitive applications in execution order, so node ids are a
// topological order by construction. Learnable values live in a ParamSet; a
// tape bound to a ParamSet reads parameters by reference and backward() returns
// one gradient tensor per parameter of that set (zeros for parameters the loss
// does not depend on). No broadcasting: every shape mismatch throws.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "graphnas/tensor.hpp"

namespace graphnas {

// Named, ordered collection of learnable tensors.
class ParamSet {
 public:
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const { return tensors_.size(); }
  bool contains(std::string_view name) const;
  std::size_t index(std::string_view name) const;

  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
  Tensor& operator[](std::string_view name) { return tensors_[index(name)]; }
  const Tensor& operator[](std::string_view name) const { return tensors_[index(name)]; }

  std::size_t total_elements() const;

  friend bool operator==(const ParamSet& a, const ParamSet& b) {
    return a.names_ == b.names_ && a.tensors_ == b.tensors_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

// One gradient tensor per parameter, aligned with ParamSet indices.
using Gradients = std::vector<Tensor>;

enum class Primitive : std::uint8_t {
  kParameter,
  kConstant,
  kMatmul,       // (m x k)(k x n) -> (m x n); (m x k)(k) -> (m)
  kAdd,
  kConcat,       // two vectors
  kTanh,
  kSigmoid,
  kMul,          // elementwise
  kRow,          // row `index` of a matrix, as a vector
  kSoftmax,
  kLogSoftmax,
  kNll,          // -logp[index], scalar
  kEntropy,      // -sum p ln p of a probability vector, scalar
  kSum,          // scalar sum of all elements
  kScale,        // multiply by a constant coefficient
};

std::string_view primitive_name(Primitive kind);

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  const Tensor& value() const;
  double scalar() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  // `params` must outlive the tape and stay unmodified while it is in use.
  explicit Tape(const ParamSet* params = nullptr);

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var param(std::size_t index);
  Var param(std::string_view name);
  Var constant(Tensor value);

  // Generic entry point. `index` is used by kRow and kNll, `coeff` by kScale.
  Var apply(Primitive kind, std::span<const Var> inputs, std::size_t index = 0, double coeff = 0.0);

  // Gradient of the scalar `loss` node with respect to every parameter of the
  // bound ParamSet. Parameters not on a path to `loss` get exact zeros.
  Gradients backward(Var loss) const;

  const Tensor& value(int id) const;
  std::size_t node_count() const { return nodes_.size(); }
  Primitive kind(int id) const { return nodes_[static_cast<std::size_t>(id)].kind; }
  std::span<const int> inputs(int id) const;
  const ParamSet* params() const { return params_; }

 private:
  struct Node {
    Primitive kind = Primitive::kConstant;
    int inputs[2] = {-1, -1};
    int input_count = 0;
    std::size_t index = 0;
    double coeff = 0.0;
    int param = -1;
    const Tensor* ref = nullptr;  // parameter nodes read the ParamSet in place
    Tensor value;
  };

  Var push(Node node);

  const ParamSet* params_;
  std::vector<Node> nodes_;
  std::vector<int> param_nodes_;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var concat(Var a, Var b);
Var tanh(Var x);
Var sigmoid(Var x);
Var mul(Var a, Var b);
Var row(Var table, std::size_t index);
Var softmax(Var x);
Var log_softmax(Var x);
Var nll(Var log_probs, std::size_t index);
Var entropy(Var probs);
Var sum(Var x);
Var scale(Var x, double coeff);

// Adaptive-moment optimizer state; moments are created lazily on first step.
struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::int64_t step = 0;
};

// One bias-corrected Adam update, in place. Gradients must align with params.
void adam_step(ParamSet& params, const Gradients& grads, double learning_rate, AdamState& state,
               const AdamConfig& config = {});

}  // namespace graphnas
