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

#include <algorithm>
#include <map>

#include "gtest/gtest.h"
#include "graphnas/training.hpp"

namespace graphnas {
namespace {

ControllerConfig small_config() {
  ControllerConfig c;
  c.state_embedding_dim = 4;
  c.action_embedding_dim = 4;
  c.aggregator_hidden_dim = 6;
  c.lstm_hidden_dim = 8;
  return c;
}

TrainState fresh_state(std::size_t capacity = 10) { return {std::nullopt, PriorityQueue(capacity), {}, 0}; }

// Trajectory through a linear chain picking action index `choices[i]` at position i.
Trajectory chain_walk(const SearchGraph& g, const std::vector<std::size_t>& choices) {
  std::vector<std::size_t> edges;
  std::size_t v = g.start();
  for (std::size_t c : choices) {
    edges.push_back(g.out_edges(v)[c]);
    v = g.edge(edges.back()).target;
  }
  return follow_edges(g, edges);
}

TEST(Reinforce, EqualRewardAndBaselineLeavesParametersWithoutEntropy) {
  SearchGraph g = build_linear_chain({{2, 2, 2}});
  ControllerParams p = init_controller(g, small_config(), 1);
  const ControllerParams before = p;
  ReinforceConfig cfg;
  cfg.entropy_coefficient = 0.0;
  TrainState state = fresh_state();
  std::vector<ScoredTrajectory> batch = {{chain_walk(g, {0, 1, 0}), 0.4}};
  reinforce_update(p, batch, cfg, state);  // baseline starts at the batch mean, so R == b
  EXPECT_EQ(p, before);
  EXPECT_DOUBLE_EQ(*state.baseline, 0.4);
}

TEST(Reinforce, ZeroAdvantageOnlyEntropyMovesParameters) {
  SearchGraph g = build_linear_chain({{2, 3}});
  ControllerParams p = init_controller(g, small_config(), 2);
  Trajectory t = chain_walk(g, {1, 2});
  std::vector<ScoredTrajectory> batch = {{t, 0.5}, {chain_walk(g, {0, 0}), 0.5}};
  ReinforceConfig cfg;
  cfg.entropy_coefficient = 1.0;
  cfg.learning_rate = 1e-3;
  TrainState state = fresh_state();
  // Skewed heads, so there is entropy to gain.
  p.params()[p.head(0).bias] = Tensor::vector({2.0, -2.0});
  p.params()[p.head(1).bias] = Tensor::vector({1.5, 0.0, -1.5});
  const ControllerParams before = p;

  const double h_before = score_trajectory(p, t).entropy;
  reinforce_update(p, batch, cfg, state);
  EXPECT_FALSE(p == before);
  EXPECT_GT(score_trajectory(p, t).entropy, h_before);
}

TEST(Reinforce, PositiveAdvantageRaisesLogProb) {
  SearchGraph g = build_select_optimizer(Encoding::kGraph, 2, {1, 5});
  ControllerParams p = init_controller(g, small_config(), 3);
  Trajectory t = follow_edges(g, std::vector<std::size_t>{0, g.out_edges(1)[2], g.out_edges(2)[2],
                                                          g.out_edges(3)[2], g.out_edges(4)[2]});
  ReinforceConfig cfg;
  cfg.entropy_coefficient = 0.0;
  cfg.learning_rate = 1e-3;
  TrainState state = fresh_state();
  state.baseline = 0.2;
  const double before = score_trajectory(p, t).log_prob;
  reinforce_update(p, std::vector<ScoredTrajectory>{{t, 0.9}}, cfg, state);
  EXPECT_GT(score_trajectory(p, t).log_prob, before);
}

// With alpha = 0 and one trajectory, the log-prob moves in the direction of
// R - b on random two-action chains.
TEST(Reinforce, LogProbChangeFollowsAdvantageSign) {
  Rng rng(77);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const std::size_t len = 1 + rng.next() % 4;
    SearchGraph g = build_linear_chain({std::vector<std::size_t>(len, 2)});
    ControllerParams p = init_controller(g, small_config(), seed);
    std::vector<std::size_t> choices;
    for (std::size_t i = 0; i < len; ++i) choices.push_back(rng.next() % 2);
    Trajectory t = chain_walk(g, choices);
    const double reward = rng.uniform();
    const double baseline = rng.uniform();

    ReinforceConfig cfg;
    cfg.entropy_coefficient = 0.0;
    cfg.learning_rate = 1e-4;
    TrainState state = fresh_state();
    state.baseline = baseline;
    const double before = score_trajectory(p, t).log_prob;
    reinforce_update(p, std::vector<ScoredTrajectory>{{t, reward}}, cfg, state);
    const double delta = score_trajectory(p, t).log_prob - before;
    EXPECT_EQ(delta > 0, reward > baseline) << "seed " << seed;
    EXPECT_NE(delta, 0.0);
  }
}

TEST(Reinforce, BaselineTracksBatchMeans) {
  SearchGraph g = build_linear_chain({{2, 2}});
  ControllerParams p = init_controller(g, small_config(), 4);
  TrainState state = fresh_state();
  ReinforceConfig cfg;
  Rng rng(5);
  double lo = 1.0, hi = 0.0, expected = 0.0;
  for (int i = 0; i < 30; ++i) {
    const double r = rng.uniform();
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    expected = i == 0 ? r : 0.95 * expected + 0.05 * r;
    auto m = reinforce_update(p, std::vector<ScoredTrajectory>{{chain_walk(g, {0, 1}), r}}, cfg, state);
    EXPECT_GE(m.baseline, lo);
    EXPECT_LE(m.baseline, hi);
    EXPECT_NEAR(m.baseline, expected, 1e-12);
  }
  EXPECT_EQ(state.trials, 30u);
}

TEST(Reinforce, RejectsBadBatches) {
  SearchGraph g = build_linear_chain({{2, 2}});
  ControllerParams p = init_controller(g, small_config(), 4);
  TrainState state = fresh_state();
  ReinforceConfig cfg;
  EXPECT_THROW(reinforce_update(p, std::vector<ScoredTrajectory>{}, cfg, state), std::invalid_argument);
  EXPECT_THROW(reinforce_update(p, std::vector<ScoredTrajectory>{{chain_walk(g, {0, 0}), 1.5}}, cfg, state),
               std::invalid_argument);
  EXPECT_THROW(reinforce_update(p, std::vector<ScoredTrajectory>{{chain_walk(g, {0, 0}), -0.1}}, cfg, state),
               std::invalid_argument);
  SearchGraph other = build_linear_chain({{3, 3}});
  EXPECT_THROW(reinforce_update(p, std::vector<ScoredTrajectory>{{chain_walk(other, {2, 2}), 0.5}}, cfg, state),
               std::invalid_argument);
  cfg.learning_rate = 0.0;
  EXPECT_THROW(reinforce_update(p, std::vector<ScoredTrajectory>{{chain_walk(g, {0, 0}), 0.5}}, cfg, state),
               std::invalid_argument);
}

TEST(PriorityQueue, KeepsTopK) {
  SearchGraph g = build_linear_chain({{3}});
  PriorityQueue q(2);
  q.offer(chain_walk(g, {0}), 0.2);
  q.offer(chain_walk(g, {1}), 0.9);
  q.offer(chain_walk(g, {2}), 0.5);
  ASSERT_EQ(q.size(), 2u);
  EXPECT_EQ(q.entries()[0].reward, 0.9);
  EXPECT_EQ(q.entries()[1].reward, 0.5);
}

TEST(PriorityQueue, DeduplicatesByActionSequence) {
  SearchGraph g = build_linear_chain({{3, 3}});
  PriorityQueue q(5);
  EXPECT_TRUE(q.offer(chain_walk(g, {0, 1}), 0.3));
  EXPECT_FALSE(q.offer(chain_walk(g, {0, 1}), 0.3));
  EXPECT_FALSE(q.offer(chain_walk(g, {0, 1}), 0.8));
  EXPECT_EQ(q.size(), 1u);
  EXPECT_THROW(PriorityQueue(0), std::invalid_argument);
}

TEST(PriorityQueue, MatchesOracleOverRandomStreams) {
  SearchGraph g = build_linear_chain({{3, 3, 3}});
  Rng rng(9);
  for (int stream = 0; stream < 50; ++stream) {
    const std::size_t k = 1 + rng.next() % 6;
    PriorityQueue q(k);
    // Reward is a fixed function of the sequence, coarsened to force ties.
    std::map<std::vector<std::size_t>, double> reward_of;
    std::vector<std::pair<std::vector<std::size_t>, double>> log;
    for (int i = 0; i < 40; ++i) {
      std::vector<std::size_t> c = {rng.next() % 3, rng.next() % 3, rng.next() % 3};
      auto [it, inserted] = reward_of.try_emplace(c, static_cast<double>(rng.next() % 5) / 4.0);
      log.emplace_back(c, it->second);
      q.offer(chain_walk(g, c), it->second);

      // Oracle: first arrivals of distinct sequences, best reward first,
      // earlier arrival first among equals, cut to k.
      std::vector<std::pair<std::vector<std::size_t>, double>> distinct;
      for (const auto& entry : log) {
        if (std::none_of(distinct.begin(), distinct.end(), [&](const auto& d) { return d.first == entry.first; })) {
          distinct.push_back(entry);
        }
      }
      std::stable_sort(distinct.begin(), distinct.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
      distinct.resize(std::min(distinct.size(), k));

      ASSERT_EQ(q.size(), distinct.size());
      for (std::size_t j = 0; j < distinct.size(); ++j) {
        EXPECT_EQ(q.entries()[j].reward, distinct[j].second);
        EXPECT_EQ(chain_walk(g, distinct[j].first).actions(), q.entries()[j].trajectory.actions());
      }
    }
  }
}

TEST(Pqt, SingleBestTrajectoryLogProbRisesMonotonically) {
  SearchGraph g = build_select_optimizer(Encoding::kGraph, 2, {1, 10});
  ControllerParams p = init_controller(g, small_config(), 6);
  Trajectory best = follow_edges(g, std::vector<std::size_t>{1, g.out_edges(5)[4], g.out_edges(6)[4],
                                                             g.out_edges(7)[4], g.out_edges(8)[4]});
  PqtConfig cfg;
  cfg.queue_capacity = 1;
  cfg.entropy_coefficient = 0.0;
  cfg.learning_rate = 0.01;
  TrainState state = fresh_state(1);
  double prev = score_trajectory(p, best).log_prob;
  pqt_update(p, std::vector<ScoredTrajectory>{{best, 1.0}}, cfg, state);
  for (int i = 0; i < 10; ++i) {
    const double now = score_trajectory(p, best).log_prob;
    EXPECT_GT(now, prev) << "update " << i;
    prev = now;
    // Worse samples do not displace the queued trajectory.
    Trajectory other = follow_edges(g, std::vector<std::size_t>{0, g.out_edges(1)[i % 10], g.out_edges(2)[0],
                                                                g.out_edges(3)[0], g.out_edges(4)[0]});
    pqt_update(p, std::vector<ScoredTrajectory>{{other, 0.1}}, cfg, state);
    ASSERT_EQ(state.queue.size(), 1u);
    EXPECT_EQ(state.queue.entries()[0].reward, 1.0);
  }
}

TEST(Pqt, QueueAbsorbsBatchAndHonorsCapacity) {
  SearchGraph g = build_linear_chain({{3}});
  ControllerParams p = init_controller(g, small_config(), 7);
  PqtConfig cfg;
  cfg.queue_capacity = 2;
  TrainState state = fresh_state(2);
  std::vector<ScoredTrajectory> batch = {
      {chain_walk(g, {0}), 0.2}, {chain_walk(g, {1}), 0.9}, {chain_walk(g, {2}), 0.5}};
  cfg.batch_size = 3;
  auto m = pqt_update(p, batch, cfg, state);
  ASSERT_EQ(state.queue.size(), 2u);
  EXPECT_EQ(state.queue.entries()[0].reward, 0.9);
  EXPECT_EQ(state.queue.entries()[1].reward, 0.5);
  EXPECT_EQ(state.trials, 3u);
  EXPECT_GT(m.mean_entropy, 0.0);
  pqt_update(p, std::vector<ScoredTrajectory>{{chain_walk(g, {1}), 0.9}}, cfg, state);
  EXPECT_EQ(state.queue.size(), 2u);
}

TEST(Pqt, EntropyTermRaisesEntropyWhenQueueIsUniformlyLikely) {
  SearchGraph g = build_linear_chain({{4}});
  ControllerParams p = init_controller(g, small_config(), 8);
  PqtConfig cfg;
  cfg.entropy_coefficient = 5.0;
  cfg.queue_capacity = 4;
  cfg.batch_size = 4;
  TrainState state = fresh_state(4);
  p.params()[p.head(0).bias] = Tensor::vector({3.0, 1.0, -1.0, -3.0});
  // All four actions are queued, so the queue term pulls toward uniform too.
  std::vector<ScoredTrajectory> batch;
  for (std::size_t a = 0; a < 4; ++a) batch.push_back({chain_walk(g, {a}), 0.5});
  const double before = score_trajectory(p, batch[0].trajectory).entropy;
  for (int i = 0; i < 5; ++i) pqt_update(p, batch, cfg, state);
  EXPECT_GT(score_trajectory(p, batch[0].trajectory).entropy, before);
}

TEST(Pqt, PolicyGradientWeightChangesTheUpdate) {
  SearchGraph g = build_linear_chain({{2, 2}});
  ControllerParams a = init_controller(g, small_config(), 9);
  ControllerParams b = a;
  PqtConfig cfg;
  cfg.queue_capacity = 1;
  TrainState sa = fresh_state(1), sb = fresh_state(1);
  sa.baseline = sb.baseline = 0.1;
  std::vector<ScoredTrajectory> batch = {{chain_walk(g, {0, 1}), 0.8}};
  pqt_update(a, batch, cfg, sa);
  cfg.policy_gradient_weight = 1.0;
  pqt_update(b, batch, cfg, sb);
  EXPECT_FALSE(a == b);
}

TEST(RunSearch, HistoryLengthAndDeterminism) {
  StackLayersEnv env(Encoding::kGraph, 10);
  SearchConfig cfg;
  cfg.seed = 12;
  RunHistory h1 = run_search(env, cfg);
  RunHistory h2 = run_search(env, cfg);
  ASSERT_EQ(h1.trials.size(), 200u);
  EXPECT_EQ(h1.updates.size(), 200u);
  for (std::size_t i = 0; i < h1.trials.size(); ++i) {
    EXPECT_EQ(h1.trials[i].trial, i + 1);
    EXPECT_EQ(h1.trials[i].reward, h2.trials[i].reward);
    EXPECT_EQ(h1.updates[i].loss, h2.updates[i].loss);
  }
  cfg.seed = 13;
  RunHistory h3 = run_search(env, cfg);
  bool differs = false;
  for (std::size_t i = 0; i < 200; ++i) differs |= h1.trials[i].reward != h3.trials[i].reward;
  EXPECT_TRUE(differs);
}

TEST(RunSearch, BestIsRunningMaxAndMovingAverageIsTrailingMean) {
  SelectOptimizerEnv env(Encoding::kGraph, 2, {1, 5}, 3);
  SearchConfig cfg;
  cfg.algorithm = Algorithm::kPqt;
  cfg.trials = 120;
  cfg.pqt.batch_size = 7;  // last batch is partial
  RunHistory h = run_search(env, cfg);
  ASSERT_EQ(h.trials.size(), 120u);
  EXPECT_EQ(h.updates.size(), 18u);
  double best = 0.0;
  for (std::size_t i = 0; i < h.trials.size(); ++i) {
    best = std::max(best, h.trials[i].reward);
    EXPECT_EQ(h.trials[i].best, best);
    const std::size_t from = i + 1 >= kMovingAverageWindow ? i + 1 - kMovingAverageWindow : 0;
    double s = 0.0;
    for (std::size_t j = from; j <= i; ++j) s += h.trials[j].reward;
    EXPECT_NEAR(h.trials[i].moving_average, s / double(i + 1 - from), 1e-12);
  }
}

TEST(RunSearch, RejectsBadBudgets) {
  StackLayersEnv env(Encoding::kGraph, 10);
  SearchConfig cfg;
  cfg.trials = 0;
  EXPECT_THROW(run_search(env, cfg), std::invalid_argument);
  cfg.trials = 3;
  cfg.reinforce.batch_size = 4;
  EXPECT_THROW(run_search(env, cfg), std::invalid_argument);
}

TEST(Algorithm, Names) {
  EXPECT_EQ(parse_algorithm("pqt"), Algorithm::kPqt);
  EXPECT_EQ(parse_algorithm(algorithm_name(Algorithm::kReinforce)), Algorithm::kReinforce);
  EXPECT_THROW(parse_algorithm("ppo"), std::invalid_argument);
}

}  // namespace
}  // namespace graphnas
