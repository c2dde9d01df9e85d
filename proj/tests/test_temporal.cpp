/*
 * Copyright 2026 The STGN Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stgn/model.hpp"
#include "stgn/temporal.hpp"

using namespace stgn;

namespace {

Var eye(Tape& t, std::size_t r, std::size_t c) {
  Vec v(r * c, 0);
  for (std::size_t i = 0; i < std::min(r, c); ++i) v[i * c + i] = 1;
  return t.constant(v, r, c);
}

std::vector<TimedVar<Real>> msgs(Tape& t, const std::vector<std::pair<Timestamp, Vec>>& xs) {
  std::vector<TimedVar<Real>> out;
  for (const auto& [ts, v] : xs) out.push_back({ts, t.constant(v)});
  return out;
}

ParamStore gru_store(std::size_t d_in, std::size_t d_m, Real fill) {
  ParamStore ps;
  add_gru_params(ps, d_in, d_m);
  for (auto& [name, p] : ps) {
    const bool bias = name.find(".b_") != std::string::npos;
    std::fill(p.value.begin(), p.value.end(), bias ? 0 : fill);
  }
  return ps;
}

Real sigmoid(Real x) { return 1 / (1 + std::exp(-x)); }

}  // namespace

TEST(BuildMessage, ConcatenatesFeaturesAndTime) {
  NodeCatalog cat;
  cat.user_names = {"u"};
  cat.item_names = {"i"};
  cat.user_raw_features = {{1, 0}};
  cat.item_raw_features = {{0, 1}};
  cat.item_genres = {{"g"}};
  InteractionEvent e{0, 0, 0, 7, {2}, 600};
  auto m = build_message(e, cat);
  EXPECT_EQ(m.raw, (Vec{1, 0, 0, 1, 2, 7}));
  EXPECT_EQ(m.timestamp, 7);
  EXPECT_EQ(m.counterpart_item_id, 0u);
  // shifted and scaled time column
  EXPECT_EQ(build_raw_message(e, cat, {5, 2}).back(), 1.0);
}

TEST(FuseMessage, SemanticsZeroedGivesReluOfRaw) {
  Tape t;
  auto raw = t.constant({1, -2, 0.5, 3});
  auto f = fuse_message(raw, t.constant({9, 9}), eye(t, 4, 4), t.constant(Vec(8, 0), 4, 2));
  EXPECT_EQ(f.value(), (Vec{1, 0, 0.5, 3}));
}

TEST(FuseMessage, RawZeroedGivesReluOfSemantic) {
  Tape t;
  auto f = fuse_message(t.constant({4, 4, 4}), t.constant({3, -1, 2}), t.constant(Vec(9, 0), 3, 3),
                        eye(t, 3, 3));
  EXPECT_EQ(f.value(), (Vec{3, 0, 2}));
}

TEST(FuseMessage, MissingSemanticIsError) {
  Tape t;
  EXPECT_THROW(fuse_message(t.constant({1}), Var{}, eye(t, 1, 1), eye(t, 1, 1)), Error);
}

TEST(AggregateLast, PicksLatestStrictlyBefore) {
  Tape t;
  auto m = msgs(t, {{1, {10}}, {4, {40}}});
  EXPECT_EQ(aggregate_last(m, 5.0)->value(), Vec{40});
  EXPECT_FALSE(aggregate_last(m, 1.0).has_value());
  EXPECT_EQ(aggregate_last(m, 4.0)->value(), Vec{10});
  EXPECT_EQ(aggregate_last(msgs(t, {{2, {7}}}), 3.0)->value(), Vec{7});
}

TEST(AggregateMean, HandMeans) {
  Tape t;
  EXPECT_EQ(aggregate_mean(msgs(t, {{1, {1, 0}}, {2, {3, 2}}}), 9.0)->value(), (Vec{2, 1}));
  EXPECT_EQ(aggregate_mean(msgs(t, {{1, {5}}}), 9.0)->value(), Vec{5});
  EXPECT_EQ(aggregate_mean(msgs(t, {{1, {0}}, {2, {3}}, {3, {6}}}), 9.0)->value(), Vec{3});
  EXPECT_FALSE(aggregate_mean(msgs(t, {{4, {1}}}), 4.0).has_value());
}

TEST(AggregateMean, CopiesOfOneMessage) {
  Tape t;
  auto m = msgs(t, {{1, {0.3, -1.7}}, {2, {0.3, -1.7}}, {3, {0.3, -1.7}}, {4, {0.3, -1.7}}});
  auto h = aggregate_mean(m, 10.0)->value();
  EXPECT_NEAR(h[0], 0.3, 1e-15);
  EXPECT_NEAR(h[1], -1.7, 1e-15);
}

TEST(AggregateAoi, SingleSurvivorIsValueProjection) {
  Tape t;
  AoiConfig cfg{10, 100};
  auto wv = t.constant({2, 0, 0, 3}, 2, 2);
  auto r = aggregate_aoi(msgs(t, {{1, {1, 1}}}), 5.0, t.constant({0.4, 0.1}), eye(t, 2, 2),
                         eye(t, 2, 2), wv, cfg);
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(r->weights.value(), Vec{1.0});
  EXPECT_EQ(r->h.value(), (Vec{2, 3}));
}

TEST(AggregateAoi, ZeroMaxAgeMeansNoUpdate) {
  Tape t;
  AoiConfig cfg{10, 0};
  EXPECT_FALSE(aggregate_aoi(msgs(t, {{1, {1}}}), 5.0, t.constant({1}), eye(t, 1, 1), eye(t, 1, 1),
                             eye(t, 1, 1), cfg)
                   .has_value());
}

TEST(AggregateAoi, EqualScoresAverageValues) {
  Tape t;
  AoiConfig cfg{10, 100};
  // zero memory makes every score 0
  auto r = aggregate_aoi(msgs(t, {{1, {2}}, {2, {4}}}), 5.0, t.constant({0}), eye(t, 1, 1),
                         eye(t, 1, 1), eye(t, 1, 1), cfg);
  EXPECT_EQ(r->h.value(), Vec{3});
}

TEST(AggregateAoi, KeepsNewestMWithinAge) {
  Tape t;
  AoiConfig cfg{2, 10};
  // the message at t = 1 is stale (age 11); of the rest only the newest two stay
  auto r = aggregate_aoi(msgs(t, {{1, {100}}, {4, {1}}, {6, {2}}, {8, {3}}}), 12.0, t.constant({0}),
                         eye(t, 1, 1), eye(t, 1, 1), eye(t, 1, 1), cfg);
  EXPECT_EQ(r->weights.size(), 2u);
  EXPECT_EQ(r->h.value(), Vec{2.5});
}

TEST(UpdateMemory, ZeroWeightsHalveMemory) {
  auto ps = gru_store(3, 2, 0);
  MemoryState s{{0.8, -0.4}, 0};
  auto n = update_memory(s, {1, 2, 3}, 5, ps);
  EXPECT_EQ(n.mem, (Vec{0.4, -0.2}));
  EXPECT_EQ(n.last_update, 5);
  EXPECT_EQ(update_memory(MemoryState{{0, 0}, 0}, {1, 2, 3}, 1, ps).mem, (Vec{0, 0}));
}

TEST(UpdateMemory, ScalarHandEvaluation) {
  auto ps = gru_store(1, 1, 1);
  auto n = update_memory(MemoryState{{1}, 0}, {1}, 1, ps);
  const Real f = sigmoid(2);
  const Real h = std::tanh(1 + f);
  const Real z = sigmoid(2);
  EXPECT_NEAR(f, 0.8808, 1e-4);
  // tanh(1.8808) = 0.95456; the often-quoted 0.9551 is a rounding slip
  EXPECT_NEAR(h, 0.9546, 1e-4);
  EXPECT_NEAR(n.mem[0], z * h + (1 - z) * 1, 1e-15);
  EXPECT_NEAR(n.mem[0], 0.9600, 1e-4);
}

TEST(UpdateMemory, ConvexCombinationOfCandidateAndMemory) {
  std::mt19937_64 rng(6);
  std::normal_distribution<Real> d(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    ParamStore ps;
    add_gru_params(ps, 3, 4);
    for (auto& [_, p] : ps) {
      for (auto& v : p.value) v = d(rng);
    }
    Vec mem(4), h(3);
    for (auto& x : mem) x = d(rng);
    for (auto& x : h) x = d(rng);
    Tape t;
    auto g = GruVars<Real>::bind(t, ps);
    auto mv = t.constant(mem), hv = t.constant(h);
    using namespace ad;
    auto f = sigmoid(add(add(matvec(g.w_hf, hv), matvec(g.w_mf, mv)), g.b_f));
    auto cand = tanh(add(add(matvec(g.w_hh, hv), matvec(g.w_mh, hadamard(f, mv))), g.b_h)).value();
    auto out = update_memory(mv, hv, g).value();
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_GE(out[i], std::min(cand[i], mem[i]) - 1e-12);
      EXPECT_LE(out[i], std::max(cand[i], mem[i]) + 1e-12);
    }
  }
}

TEST(UpdateMemory, DeterministicAndRejectsTimeReversal) {
  auto ps = gru_store(2, 2, 0.3);
  MemoryState s{{0.1, 0.2}, 4};
  EXPECT_EQ(update_memory(s, {1, -1}, 5, ps).mem, update_memory(s, {1, -1}, 5, ps).mem);
  EXPECT_THROW(update_memory(s, {1, -1}, 3, ps), Error);
}

TEST(MessageBuffer, BoundedAndOrdered) {
  MessageBuffer b(3);
  for (int k = 0; k < 5; ++k) {
    TemporalMessage m;
    m.timestamp = k;
    b.push(m);
  }
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b.messages().front().timestamp, 2);
  EXPECT_EQ(b.messages().back().timestamp, 4);
  TemporalMessage old;
  old.timestamp = 1;
  EXPECT_THROW(b.push(old), Error);
}

TEST(EngineMessages, AppendedToBothEndpoints) {
  NodeCatalog cat;
  cat.user_names = {"u0", "u1"};
  cat.item_names = {"i0"};
  cat.user_raw_features = {{0.1}, {0.2}};
  cat.item_raw_features = {{0.3}};
  cat.item_genres = {{"g"}};
  std::vector<InteractionEvent> ev = {{0, 0, 0, 1, {1}, 600}, {1, 1, 0, 2, {1}, 600}};
  EventStore store(ev, cat);
  TrainConfig c;
  c.dims.d_v = 1;
  c.dims.d_m = 2;
  c.dims.d_T = 2;
  c.dims.d_emb = 2;
  c.dims.d_attn = 2;
  c.dims.d_dec = 2;
  Model m(c, 0);
  Engine e(m, store, nullptr);
  e.append_messages({0, 2});
  EXPECT_EQ(e.state(user_node(0)).buffer.size(), 1u);
  EXPECT_EQ(e.state(user_node(1)).buffer.size(), 1u);
  EXPECT_EQ(e.state(item_node(0)).buffer.size(), 2u);
  EXPECT_EQ(e.state(item_node(0)).buffer.messages()[1].user_id, 1u);
}
