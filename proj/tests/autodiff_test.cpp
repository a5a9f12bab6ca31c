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

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "graphnas/autodiff.hpp"
#include "graphnas/gradcheck.hpp"
#include "gradient_cases.hpp"
#include "test_util.hpp"

namespace graphnas {
namespace {

using testing::random_tensor;
using testing::weighted_sum;
using testing::PrimitiveCase;
using testing::primitive_case_error;
using testing::primitive_cases;

TEST(Primitives, MatmulByIdentityIsNoOp) {
  Rng rng(1);
  ParamSet p;
  p.add("x", random_tensor({3, 4}, rng));
  Tape tape(&p);
  Var eye = tape.constant(Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  Var y = matmul(eye, tape.param("x"));
  EXPECT_EQ(y.value(), p["x"]);
}

TEST(Primitives, MatrixVectorProduct) {
  Tape tape;
  Var a = tape.constant(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  Var x = tape.constant(Tensor::vector({1, 0, -1}));
  Var y = matmul(a, x);
  ASSERT_EQ(y.value().shape(), Shape{2});
  EXPECT_DOUBLE_EQ(y.value()[0], -2.0);
  EXPECT_DOUBLE_EQ(y.value()[1], -2.0);
}

TEST(Primitives, SoftmaxOfZerosIsUniform) {
  Tape tape;
  Var s = softmax(tape.constant(Tensor::vector({0, 0, 0, 0})));
  for (double v : s.value().values()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Primitives, EntropyOfFairCoinIsLn2) {
  // Brute force: -sum p ln p with p = (1/2, 1/2).
  double expected = 0.0;
  for (double p : {0.5, 0.5}) expected -= p * std::log(p);

  Tape tape;
  Var h = entropy(softmax(tape.constant(Tensor::vector({0, 0}))));
  EXPECT_NEAR(h.scalar(), expected, 1e-15);
  EXPECT_NEAR(h.scalar(), 0.693147, 1e-6);
}

TEST(Primitives, NllPicksNegatedEntry) {
  Tape tape;
  Var v = nll(tape.constant(Tensor::vector({-0.5, -1.5, -2.5})), 1);
  EXPECT_DOUBLE_EQ(v.scalar(), 1.5);
}

TEST(Primitives, ShapeMismatchNamesPrimitiveAndShapes) {
  Tape tape;
  Var a = tape.constant(Tensor({2, 3}));
  Var b = tape.constant(Tensor({2, 3}));
  try {
    matmul(a, b);
    FAIL() << "expected a shape error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("matmul"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos);
  }
  EXPECT_THROW(add(tape.constant(Tensor({3})), tape.constant(Tensor({4}))), std::invalid_argument);
  EXPECT_THROW(mul(tape.constant(Tensor({3})), tape.constant(Tensor({3, 1}))), std::invalid_argument);
  EXPECT_THROW(row(tape.constant(Tensor({2, 2})), 2), std::invalid_argument);
  EXPECT_THROW(nll(tape.constant(Tensor({2})), 5), std::invalid_argument);
  EXPECT_THROW(softmax(tape.constant(Tensor({2, 2}))), std::invalid_argument);
}

TEST(Primitives, EmptyDistributionsAreRejected) {
  Tape tape;
  Var empty = tape.constant(Tensor());
  EXPECT_THROW(log_softmax(empty), std::invalid_argument);
  EXPECT_THROW(entropy(empty), std::invalid_argument);
  EXPECT_THROW(softmax(empty), std::invalid_argument);
}

TEST(Primitives, EntropyRejectsNegativeProbabilities) {
  Tape tape;
  EXPECT_THROW(entropy(tape.constant(Tensor::vector({1.5, -0.5}))), std::invalid_argument);
}

TEST(Backward, SumGivesAllOnes) {
  ParamSet p;
  p.add("w", Tensor({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6}));
  Tape tape(&p);
  Gradients g = tape.backward(sum(tape.param("w")));
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0], Tensor({2, 3}, 1.0));
}

TEST(Backward, ZeroTimesFunctionGivesExactZero) {
  ParamSet p;
  p.add("w", Tensor::vector({0.3, -0.7}));
  Tape tape(&p);
  Var f = sum(tanh(tape.param("w")));
  Gradients g = tape.backward(scale(f, 0.0));
  for (double v : g[0].values()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, UnreachableParametersGetZeros) {
  ParamSet p;
  p.add("used", Tensor::vector({1.0, 2.0}));
  p.add("on_tape_unused", Tensor::vector({3.0}));
  p.add("never_touched", Tensor({2, 2}, 5.0));
  Tape tape(&p);
  Var used = tape.param("used");
  tape.param("on_tape_unused");
  Gradients g = tape.backward(sum(used));
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(g[1], Tensor({1}));
  EXPECT_EQ(g[2], Tensor({2, 2}));
}

TEST(Backward, NonScalarLossIsRejected) {
  ParamSet p;
  p.add("w", Tensor::vector({1.0, 2.0}));
  Tape tape(&p);
  EXPECT_THROW(tape.backward(tanh(tape.param("w"))), std::invalid_argument);
}

TEST(Backward, TapeOrderIsTopological) {
  ParamSet p;
  p.add("w", Tensor::vector({1.0, 2.0}));
  Tape tape(&p);
  Var w = tape.param("w");
  sum(mul(tanh(w), sigmoid(w)));
  for (int id = 0; id < static_cast<int>(tape.node_count()); ++id) {
    for (int in : tape.inputs(id)) EXPECT_LT(in, id);
  }
}

TEST(Backward, IsBitwiseDeterministic) {
  Rng rng(7);
  ParamSet p;
  p.add("a", random_tensor({4, 5}, rng));
  p.add("x", random_tensor({5}, rng));
  auto run = [&] {
    Tape tape(&p);
    Var y = log_softmax(tanh(matmul(tape.param("a"), tape.param("x"))));
    return tape.backward(nll(y, 2));
  };
  EXPECT_EQ(run(), run());
}

// Every primitive against central differences on 100 random points in [-1, 1].
class PrimitiveGradient : public ::testing::TestWithParam<PrimitiveCase> {};

TEST_P(PrimitiveGradient, MatchesCentralDifferences) {
  const PrimitiveCase& c = GetParam();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) worst = std::max(worst, primitive_case_error(c, seed));
  EXPECT_LT(worst, 1e-4) << c.name;
}

INSTANTIATE_TEST_SUITE_P(AllPrimitives, PrimitiveGradient, ::testing::ValuesIn(primitive_cases()),
                         [](const auto& info) { return info.param.name; });

TEST(SoftmaxProperties, IsAProbabilityVector) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Tape tape;
    Var s = softmax(tape.constant(random_tensor({1 + static_cast<std::size_t>(trial % 9)}, rng, -20, 20)));
    double total = 0.0;
    for (double v : s.value().values()) {
      EXPECT_GE(v, 0.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(SoftmaxProperties, LogSoftmaxMatchesLogOfSoftmax) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    Tape tape;
    Var x = tape.constant(random_tensor({7}, rng, -20, 20));
    const Tensor& ls = log_softmax(x).value();
    const Tensor& s = softmax(x).value();
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(ls[i], std::log(s[i]), 1e-10);
  }
}

TEST(SoftmaxProperties, ExtremeLogitsStayFinite) {
  ParamSet p;
  p.add("x", Tensor::vector({800.0, -800.0, 0.0}));
  Tape tape(&p);
  Var x = tape.param("x");
  Var loss = add(nll(log_softmax(x), 1), entropy(softmax(x)));
  Gradients g = tape.backward(loss);
  EXPECT_TRUE(std::isfinite(loss.scalar()));
  EXPECT_TRUE(g[0].all_finite());
}

TEST(GradCheck, QuadraticIsExact) {
  Rng rng(3);
  ParamSet p;
  p.add("w", random_tensor({3, 3}, rng));
  Objective half_norm = [](Tape& tape) {
    Var w = tape.param(std::size_t{0});
    return scale(sum(mul(w, w)), 0.5);
  };
  EXPECT_LT(finite_difference_check(half_norm, p, 1e-5), 1e-8);
}

TEST(GradCheck, ConstantObjectiveHasZeroError) {
  ParamSet p;
  p.add("w", Tensor::vector({0.1, 0.2}));
  Objective constant = [](Tape& tape) {
    tape.param(std::size_t{0});
    return tape.constant(Tensor::vector({4.2}));
  };
  GradCheckReport r = finite_difference_report(constant, p, 1e-5);
  EXPECT_EQ(r.max_relative_error, 0.0);
  EXPECT_EQ(r.analytic, 0.0);
  EXPECT_EQ(r.numeric, 0.0);
}

TEST(GradCheck, NonFiniteObjectiveNamesCoordinate) {
  ParamSet p;
  p.add("w", Tensor::vector({0.0, 1.0}));
  // Finite at the point, NaN once w[1] is nudged upwards.
  Objective f = [](Tape& tape) {
    Var w = tape.param(std::size_t{0});
    if (w.value()[1] > 1.0) return tape.constant(Tensor::vector({std::nan("")}));
    return sum(w);
  };
  try {
    finite_difference_check(f, p, 1e-5);
    FAIL() << "expected a domain error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("w[1]"), std::string::npos) << e.what();
  }
}

TEST(GradCheck, RejectsNonPositiveStep) {
  ParamSet p;
  p.add("w", Tensor::vector({1.0}));
  Objective f = [](Tape& tape) { return sum(tape.param(std::size_t{0})); };
  EXPECT_THROW(finite_difference_check(f, p, 0.0), std::invalid_argument);
}

TEST(Adam, ZeroGradientLeavesParametersAndDecaysMoments) {
  ParamSet p;
  p.add("w", Tensor::vector({0.5, -0.25}));
  const ParamSet before = p;
  AdamState state;
  adam_step(p, {Tensor::vector({0.2, -0.4})}, 0.01, state);
  const ParamSet after_first = p;
  const Tensor m = state.first_moment[0];
  const Tensor v = state.second_moment[0];

  adam_step(p, {Tensor({2})}, 0.01, state);
  // Parameters still move on momentum, but a fresh state with zero gradient does not.
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_DOUBLE_EQ(state.first_moment[0][i], 0.9 * m[i]);
    EXPECT_DOUBLE_EQ(state.second_moment[0][i], 0.999 * v[i]);
  }
  ParamSet q = before;
  AdamState fresh;
  adam_step(q, {Tensor({2})}, 0.01, fresh);
  EXPECT_EQ(q, before);
  EXPECT_NE(after_first, before);
}

TEST(Adam, FirstStepMovesEachCoordinateByLearningRate) {
  // Closed form at t = 1: m_hat = g, v_hat = g^2, so the update is
  // lr * g / (|g| + eps), i.e. lr * sign(g) up to eps.
  Rng rng(5);
  ParamSet p;
  p.add("w", random_tensor({4, 3}, rng));
  const ParamSet before = p;
  Tensor g = random_tensor({4, 3}, rng);
  const double lr = 1e-3;
  AdamState state;
  adam_step(p, {g}, lr, state);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double expected = -lr * g[i] / (std::abs(g[i]) + 1e-8);
    EXPECT_NEAR(p[0][i] - before[0][i], expected, 1e-15);
    EXPECT_NEAR(std::abs(p[0][i] - before[0][i]), lr, 1e-8);
  }
}

TEST(Adam, StepCounterIncrementsPerCall) {
  ParamSet p;
  p.add("w", Tensor::vector({1.0}));
  AdamState state;
  for (int i = 1; i <= 3; ++i) {
    adam_step(p, {Tensor::vector({0.1})}, 0.1, state);
    EXPECT_EQ(state.step, i);
  }
  for (double v : state.second_moment[0].values()) EXPECT_GE(v, 0.0);
}

TEST(Adam, RejectsMismatchedGradients) {
  ParamSet p;
  p.add("w", Tensor::vector({1.0, 2.0}));
  AdamState state;
  EXPECT_THROW(adam_step(p, {Tensor::vector({1.0})}, 0.1, state), std::invalid_argument);
  EXPECT_THROW(adam_step(p, {}, 0.1, state), std::invalid_argument);
  EXPECT_THROW(adam_step(p, {Tensor::vector({1.0, 1.0})}, 0.0, state), std::invalid_argument);
}

}  // namespace
}  // namespace graphnas
