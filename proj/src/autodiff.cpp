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

#include "graphnas/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace graphnas {

namespace {

[[noreturn]] void shape_error(Primitive kind, const std::string& detail) {
  throw std::invalid_argument(std::string(primitive_name(kind)) + ": " + detail);
}

std::string shapes_of(const Tensor& a) { return shape_to_string(a.shape()); }
std::string shapes_of(const Tensor& a, const Tensor& b) {
  return shape_to_string(a.shape()) + " and " + shape_to_string(b.shape());
}

void require_vector(Primitive kind, const Tensor& x) {
  if (x.empty()) shape_error(kind, "empty input");
  if (x.rank() != 1) shape_error(kind, "expected a vector, got " + shapes_of(x));
}

void require_same(Primitive kind, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error(kind, "shape mismatch " + shapes_of(a, b));
}

double log_sum_exp(std::span<const double> x) {
  double hi = *std::max_element(x.begin(), x.end());
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

}  // namespace

std::string_view primitive_name(Primitive kind) {
  switch (kind) {
    case Primitive::kParameter: return "parameter";
    case Primitive::kConstant: return "constant";
    case Primitive::kMatmul: return "matmul";
    case Primitive::kAdd: return "add";
    case Primitive::kConcat: return "concat";
    case Primitive::kTanh: return "tanh";
    case Primitive::kSigmoid: return "sigmoid";
    case Primitive::kMul: return "mul";
    case Primitive::kRow: return "row";
    case Primitive::kSoftmax: return "softmax";
    case Primitive::kLogSoftmax: return "log_softmax";
    case Primitive::kNll: return "nll";
    case Primitive::kEntropy: return "entropy";
    case Primitive::kSum: return "sum";
    case Primitive::kScale: return "scale";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// ParamSet

std::size_t ParamSet::add(std::string name, Tensor value) {
  if (by_name_.contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  std::size_t i = tensors_.size();
  by_name_.emplace(name, i);
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(value));
  return i;
}

bool ParamSet::contains(std::string_view name) const { return by_name_.contains(std::string(name)); }

std::size_t ParamSet::index(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) throw std::out_of_range("unknown parameter: " + std::string(name));
  return it->second;
}

std::size_t ParamSet::total_elements() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

// ---------------------------------------------------------------------------
// Var / Tape

const Tensor& Var::value() const { return tape_->value(id_); }

double Var::scalar() const {
  const Tensor& v = value();
  if (!v.is_scalar()) throw std::invalid_argument("not a scalar: " + shape_to_string(v.shape()));
  return v[0];
}

Tape::Tape(const ParamSet* params) : params_(params) {
  if (params_) param_nodes_.assign(params_->size(), -1);
}

const Tensor& Tape::value(int id) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(id));
  return n.ref ? *n.ref : n.value;
}

std::span<const int> Tape::inputs(int id) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(id));
  return {n.inputs, static_cast<std::size_t>(n.input_count)};
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::param(std::size_t index) {
  if (!params_) throw std::logic_error("tape is not bound to a parameter set");
  if (index >= params_->size()) throw std::out_of_range("parameter index out of range");
  if (param_nodes_[index] >= 0) return Var(this, param_nodes_[index]);
  Node n;
  n.kind = Primitive::kParameter;
  n.param = static_cast<int>(index);
  n.ref = &(*params_)[index];
  Var v = push(std::move(n));
  param_nodes_[index] = v.id();
  return v;
}

Var Tape::param(std::string_view name) {
  if (!params_) throw std::logic_error("tape is not bound to a parameter set");
  return param(params_->index(name));
}

Var Tape::constant(Tensor value) {
  Node n;
  n.kind = Primitive::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::apply(Primitive kind, std::span<const Var> inputs, std::size_t index, double coeff) {
  auto arity = [&](std::size_t want) {
    if (inputs.size() != want) {
      shape_error(kind, "expected " + std::to_string(want) + " inputs, got " + std::to_string(inputs.size()));
    }
    for (const Var& v : inputs) {
      if (&v.tape() != this) shape_error(kind, "input belongs to a different tape");
    }
  };

  Node n;
  n.kind = kind;
  n.index = index;
  n.coeff = coeff;

  switch (kind) {
    case Primitive::kParameter:
    case Primitive::kConstant:
      shape_error(kind, "leaf nodes are created with param() or constant()");

    case Primitive::kMatmul: {
      arity(2);
      const Tensor& a = inputs[0].value();
      const Tensor& b = inputs[1].value();
      if (a.empty() || b.empty() || a.rank() != 2 || b.rank() > 2 || a.cols() != b.rows()) {
        shape_error(kind, "cannot multiply " + shapes_of(a, b));
      }
      const std::size_t m = a.rows(), k = a.cols(), cols = b.cols();
      n.value = b.rank() == 1 ? Tensor({m}) : Tensor({m, cols});
      double* out = n.value.data();
      const double* pa = a.data();
      const double* pb = b.data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = pa[i * k + p];
          const double* brow = pb + p * cols;
          double* orow = out + i * cols;
          for (std::size_t j = 0; j < cols; ++j) orow[j] += aip * brow[j];
        }
      }
      break;
    }

    case Primitive::kAdd:
    case Primitive::kMul: {
      arity(2);
      const Tensor& a = inputs[0].value();
      const Tensor& b = inputs[1].value();
      if (a.empty()) shape_error(kind, "empty input");
      require_same(kind, a, b);
      n.value = a;
      if (kind == Primitive::kAdd) {
        for (std::size_t i = 0; i < a.size(); ++i) n.value[i] += b[i];
      } else {
        for (std::size_t i = 0; i < a.size(); ++i) n.value[i] *= b[i];
      }
      break;
    }

    case Primitive::kConcat: {
      arity(2);
      const Tensor& a = inputs[0].value();
      const Tensor& b = inputs[1].value();
      require_vector(kind, a);
      require_vector(kind, b);
      std::vector<double> v(a.values().begin(), a.values().end());
      v.insert(v.end(), b.values().begin(), b.values().end());
      const std::size_t len = v.size();
      n.value = Tensor({len}, std::move(v));
      break;
    }

    case Primitive::kTanh:
    case Primitive::kSigmoid: {
      arity(1);
      const Tensor& x = inputs[0].value();
      if (x.empty()) shape_error(kind, "empty input");
      n.value = x;
      for (double& v : n.value.values()) {
        v = kind == Primitive::kTanh ? std::tanh(v) : 1.0 / (1.0 + std::exp(-v));
      }
      break;
    }

    case Primitive::kRow: {
      arity(1);
      const Tensor& t = inputs[0].value();
      if (t.empty() || t.rank() != 2) shape_error(kind, "expected a matrix, got " + shapes_of(t));
      if (index >= t.rows()) {
        shape_error(kind, "row " + std::to_string(index) + " out of range for " + shapes_of(t));
      }
      const double* src = t.data() + index * t.cols();
      n.value = Tensor({t.cols()}, std::vector<double>(src, src + t.cols()));
      break;
    }

    case Primitive::kSoftmax:
    case Primitive::kLogSoftmax: {
      arity(1);
      const Tensor& x = inputs[0].value();
      require_vector(kind, x);
      const double lse = log_sum_exp(x.values());
      n.value = x;
      for (double& v : n.value.values()) {
        v = kind == Primitive::kSoftmax ? std::exp(v - lse) : v - lse;
      }
      break;
    }

    case Primitive::kNll: {
      arity(1);
      const Tensor& lp = inputs[0].value();
      require_vector(kind, lp);
      if (index >= lp.size()) {
        shape_error(kind, "index " + std::to_string(index) + " out of range for " + shapes_of(lp));
      }
      n.value = Tensor({1}, std::vector<double>{-lp[index]});
      break;
    }

    case Primitive::kEntropy: {
      arity(1);
      const Tensor& p = inputs[0].value();
      require_vector(kind, p);
      double h = 0.0;
      for (double v : p.values()) {
        if (v < 0.0) shape_error(kind, "negative probability");
        if (v > 0.0) h -= v * std::log(v);
      }
      n.value = Tensor({1}, std::vector<double>{h});
      break;
    }

    case Primitive::kSum: {
      arity(1);
      const Tensor& x = inputs[0].value();
      if (x.empty()) shape_error(kind, "empty input");
      double s = 0.0;
      for (double v : x.values()) s += v;
      n.value = Tensor({1}, std::vector<double>{s});
      break;
    }

    case Primitive::kScale: {
      arity(1);
      const Tensor& x = inputs[0].value();
      if (x.empty()) shape_error(kind, "empty input");
      n.value = x;
      for (double& v : n.value.values()) v *= coeff;
      break;
    }
  }

  n.input_count = static_cast<int>(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) n.inputs[i] = inputs[i].id();
  return push(std::move(n));
}

Gradients Tape::backward(Var loss) const {
  if (&loss.tape() != this) throw std::invalid_argument("backward: loss belongs to a different tape");
  const Tensor& lv = value(loss.id());
  if (!lv.is_scalar() || lv.rank() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, got " + shape_to_string(lv.shape()));
  }

  std::vector<Tensor> grad(nodes_.size());
  auto acc = [&](int id) -> Tensor& {
    Tensor& g = grad[static_cast<std::size_t>(id)];
    if (g.empty()) g = Tensor(value(id).shape());
    return g;
  };

  grad[static_cast<std::size_t>(loss.id())] = Tensor({1}, 1.0);

  Gradients out;
  if (params_) {
    out.reserve(params_->size());
    for (std::size_t i = 0; i < params_->size(); ++i) out.emplace_back((*params_)[i].shape());
  }

  for (int id = loss.id(); id >= 0; --id) {
    const Tensor& g = grad[static_cast<std::size_t>(id)];
    if (g.empty()) continue;
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const Tensor& y = value(id);

    switch (n.kind) {
      case Primitive::kParameter: {
        Tensor& dst = out[static_cast<std::size_t>(n.param)];
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
        break;
      }
      case Primitive::kConstant:
        break;

      case Primitive::kMatmul: {
        const Tensor& a = value(n.inputs[0]);
        const Tensor& b = value(n.inputs[1]);
        const std::size_t m = a.rows(), k = a.cols(), cols = b.cols();
        Tensor& ga = acc(n.inputs[0]);
        Tensor& gb = acc(n.inputs[1]);
        const double* pa = a.data();
        const double* pb = b.data();
        const double* pg = g.data();
        for (std::size_t i = 0; i < m; ++i) {
          const double* grow = pg + i * cols;
          for (std::size_t p = 0; p < k; ++p) {
            const double* brow = pb + p * cols;
            double* gbrow = gb.data() + p * cols;
            const double aip = pa[i * k + p];
            double dot = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
              dot += grow[j] * brow[j];
              gbrow[j] += aip * grow[j];
            }
            ga.data()[i * k + p] += dot;
          }
        }
        break;
      }

      case Primitive::kAdd: {
        Tensor& ga = acc(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        Tensor& gb = acc(n.inputs[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        break;
      }

      case Primitive::kMul: {
        const Tensor& a = value(n.inputs[0]);
        const Tensor& b = value(n.inputs[1]);
        Tensor& ga = acc(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
        Tensor& gb = acc(n.inputs[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
        break;
      }

      case Primitive::kConcat: {
        Tensor& ga = acc(n.inputs[0]);
        const std::size_t split = ga.size();
        for (std::size_t i = 0; i < split; ++i) ga[i] += g[i];
        Tensor& gb = acc(n.inputs[1]);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[split + i];
        break;
      }

      case Primitive::kTanh: {
        Tensor& gx = acc(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
      }

      case Primitive::kSigmoid: {
        Tensor& gx = acc(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
      }

      case Primitive::kRow: {
        Tensor& gt = acc(n.inputs[0]);
        double* dst = gt.data() + n.index * gt.cols();
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
        break;
      }

      case Primitive::kSoftmax: {
        double dot = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
        Tensor& gx = acc(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += y[i] * (g[i] - dot);
        break;
      }

      case Primitive::kLogSoftmax: {
        double total = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) total += g[i];
        Tensor& gx = acc(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] - std::exp(y[i]) * total;
        break;
      }

      case Primitive::kNll: {
        Tensor& gx = acc(n.inputs[0]);
        gx[n.index] -= g[0];
        break;
      }

      case Primitive::kEntropy: {
        const Tensor& p = value(n.inputs[0]);
        Tensor& gx = acc(n.inputs[0]);
        // d(-p ln p)/dp = -(ln p + 1); zero-probability entries contribute nothing.
        for (std::size_t i = 0; i < p.size(); ++i) {
          if (p[i] > 0.0) gx[i] -= g[0] * (std::log(p[i]) + 1.0);
        }
        break;
      }

      case Primitive::kSum: {
        Tensor& gx = acc(n.inputs[0]);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0];
        break;
      }

      case Primitive::kScale: {
        Tensor& gx = acc(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += n.coeff * g[i];
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Free-function primitives

namespace {

Var apply1(Primitive kind, Var x, std::size_t index = 0, double coeff = 0.0) {
  const Var in[] = {x};
  return x.tape().apply(kind, in, index, coeff);
}

Var apply2(Primitive kind, Var a, Var b) {
  const Var in[] = {a, b};
  return a.tape().apply(kind, in);
}

}  // namespace

Var matmul(Var a, Var b) { return apply2(Primitive::kMatmul, a, b); }
Var add(Var a, Var b) { return apply2(Primitive::kAdd, a, b); }
Var concat(Var a, Var b) { return apply2(Primitive::kConcat, a, b); }
Var mul(Var a, Var b) { return apply2(Primitive::kMul, a, b); }
Var tanh(Var x) { return apply1(Primitive::kTanh, x); }
Var sigmoid(Var x) { return apply1(Primitive::kSigmoid, x); }
Var row(Var table, std::size_t index) { return apply1(Primitive::kRow, table, index); }
Var softmax(Var x) { return apply1(Primitive::kSoftmax, x); }
Var log_softmax(Var x) { return apply1(Primitive::kLogSoftmax, x); }
Var nll(Var log_probs, std::size_t index) { return apply1(Primitive::kNll, log_probs, index); }
Var entropy(Var probs) { return apply1(Primitive::kEntropy, probs); }
Var sum(Var x) { return apply1(Primitive::kSum, x); }
Var scale(Var x, double coeff) { return apply1(Primitive::kScale, x, 0, coeff); }

// ---------------------------------------------------------------------------
// Adam

void adam_step(ParamSet& params, const Gradients& grads, double learning_rate, AdamState& state,
               const AdamConfig& config) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("adam_step: learning rate must be positive");
  if (grads.size() != params.size()) {
    throw std::invalid_argument("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                                std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i].shape()) {
      throw std::invalid_argument("adam_step: gradient shape " + shape_to_string(grads[i].shape()) +
                                  " does not match parameter " + params.name(i) + " " +
                                  shape_to_string(params[i].shape()));
    }
  }
  if (state.first_moment.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.first_moment.emplace_back(params[i].shape());
      state.second_moment.emplace_back(params[i].shape());
    }
  } else if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state does not match parameter set");
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    double* w = params[i].data();
    double* m = state.first_moment[i].data();
    double* v = state.second_moment[i].data();
    const double* g = grads[i].data();
    for (std::size_t j = 0; j < params[i].size(); ++j) {
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
      w[j] -= learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + config.epsilon);
    }
  }
}

}  // namespace graphnas
