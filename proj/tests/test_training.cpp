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

#include "stgn/experiment.hpp"
#include "stgn/io.hpp"
#include "stgn/metrics.hpp"
#include "stgn/training.hpp"
#include "oracles.hpp"

using namespace stgn;

namespace {

ParamStore decoder_store(std::size_t d_emb, std::size_t d_dec) {
  ParamStore ps;
  ps.add("dec.W1", d_dec, 2 * d_emb);
  ps.add("dec.b1", d_dec, 1);
  ps.add("dec.W2", 1, d_dec);
  ps.add("dec.b2", 1, 1);
  return ps;
}

struct Fixture {
  EventStore store;
  ChronoSplit split;
  std::vector<SemanticSet> sets;
  std::size_t d_s = 0;
};

Fixture small_planted(std::uint64_t seed = 1) {
  PlantedTraceOptions po;
  po.users = 40;
  po.items = 20;
  po.late_users = 8;
  po.events = 800;
  po.seed = seed;
  IngestOptions io;
  io.d_v = 4;
  io.seed = seed;
  Fixture f;
  f.store = ingest_trace(planted_trace(po), io).store;
  f.split = chronological_split(f.store);
  auto table = GenreEmbeddingTable::one_hot(f.store.catalog());
  f.sets = encode_genres(f.store.catalog(), table);
  f.d_s = table.width();
  return f;
}

TrainConfig small_config(const std::string& label, std::uint64_t seed = 1) {
  TrainConfig c = tiny_config(parse_variant(label));
  c.dims.d_v = 4;
  c.message_time_scale = 86400;
  c.batch_size = 50;
  c.epochs = 2;
  c.learning_rate = 1e-3;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Decoder, ZeroWeightsGiveHalf) {
  auto ps = decoder_store(2, 3);
  EXPECT_EQ(predict_preference({1, 2}, {3, 4}, ps), 0.5);
}

TEST(Decoder, MonotoneInFinalBias) {
  auto ps = decoder_store(2, 3);
  Real prev = 0;
  for (Real b : {-5.0, -1.0, 0.0, 2.0, 10.0, 40.0}) {
    ps.at("dec.b2").value[0] = b;
    const Real p = predict_preference({1, 2}, {3, 4}, ps);
    EXPECT_GT(p, prev);
    EXPECT_LT(p, 1.0);
    prev = p;
  }
  EXPECT_GT(prev, 1 - 1e-15);
}

TEST(Decoder, HandForwardPass) {
  auto ps = decoder_store(2, 2);
  ps.at("dec.W1").value = {1, 0, 0, 1,    // hidden 0: e_u[0] + e_i[1]
                           0, -1, 1, 0};  // hidden 1: -e_u[1] + e_i[0]
  ps.at("dec.b1").value = {0.5, 0};
  ps.at("dec.W2").value = {2, -1};
  ps.at("dec.b2").value = {0.25};
  // e_u = [1, 2], e_i = [3, -1]: hidden = ReLU([1 - 1 + 0.5, -2 + 3]) = [0.5, 1]
  // z = 2 * 0.5 - 1 * 1 + 0.25 = 0.25
  EXPECT_NEAR(predict_preference({1, 2}, {3, -1}, ps), 1 / (1 + std::exp(-0.25)), 1e-15);
}

TEST(Bce, HandValues) {
  EXPECT_NEAR(bce_loss(1, 0.5), std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_loss(0, 0.5), std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_loss(1, 0.9), 0.105361, 1e-6);
  EXPECT_THROW(bce_loss(1, 1.0), Error);
  EXPECT_THROW(bce_loss(0, 0.0), Error);
}

TEST(SampleNegative, RedrawSchemeOdds) {
  // P(other) = 1/2 + 1/2 * 1/2 = 3/4 with two items
  std::mt19937_64 rng(1);
  const std::vector<NodeId> items = {7, 9};
  int other = 0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) other += sample_negative(items, 7, rng) == 9;
  EXPECT_NEAR(Real(other) / n, 0.75, 0.005);
  EXPECT_GE(Real(other) / n, 0.5);
}

TEST(SampleNegative, SeededMembersOnly) {
  std::vector<NodeId> items = {3, 1, 4, 15, 9};
  std::mt19937_64 a(5), b(5);
  for (int k = 0; k < 500; ++k) {
    const auto x = sample_negative(items, 4, a);
    EXPECT_EQ(x, sample_negative(items, 4, b));
    EXPECT_NE(std::find(items.begin(), items.end(), x), items.end());
  }
  EXPECT_THROW(sample_negative({1}, 1, a), Error);
}

TEST(Metrics, ApExamples) {
  EXPECT_EQ(compute_ap({0.9, 0.8, 0.1, 0.05}, {1, 1, 0, 0}), 1.0);
  EXPECT_NEAR(compute_ap({0.9, 0.5, 0.1}, {1, 0, 1}), (1 + 2.0 / 3) / 2, 1e-15);
  EXPECT_EQ(compute_ap({0.7, 0.2}, {1, 0}), 1.0);
  EXPECT_THROW(compute_ap({0.1, 0.2}, {0, 0}), Error);
}

TEST(Metrics, AucExamples) {
  EXPECT_EQ(compute_auc({0.9, 0.8, 0.1}, {1, 1, 0}), 1.0);
  EXPECT_EQ(compute_auc({0.4, 0.4, 0.4, 0.4}, {1, 0, 1, 0}), 0.5);
  EXPECT_EQ(compute_auc({0.8, 0.4, 0.6, 0.2}, {1, 1, 0, 0}), 0.75);
  EXPECT_THROW(compute_auc({0.1, 0.2}, {1, 1}), Error);
}

TEST(Metrics, BruteForceRecountWithTies) {
  std::mt19937_64 rng(77);
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 2 + rng() % 19;
    std::vector<Real> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = Real(rng() % 5) / 4;  // coarse grid forces ties
      y[i] = int(rng() % 2);
    }
    y[0] = 1;
    y[1] = 0;
    EXPECT_EQ(compute_ap(s, y), stgn::testing::brute_ap(s, y)) << "instance " << inst;
    EXPECT_EQ(compute_auc(s, y), stgn::testing::brute_auc(s, y)) << "instance " << inst;
  }
}

TEST(GradCheck, DecoderOnly) {
  GradCheckOptions o;
  o.prefix = "dec.";
  EXPECT_LT(grad_check(tiny_config(parse_variant("TGN-L")), o).max_rel_error, 1e-6);
}

TEST(GradCheck, GruPath) {
  GradCheckOptions o;
  o.prefix = "gru.";
  for (const char* v : {"TGN-L", "TGN-M", "TGN-A"}) {
    auto r = grad_check(tiny_config(parse_variant(v)), o);
    EXPECT_GT(r.entries, 0u);
    EXPECT_LT(r.max_rel_error, 1e-5) << v << " worst " << r.worst;
  }
}

TEST(GradCheck, FullSemanticModel) {
  auto r = grad_check(tiny_config(parse_variant("M2-STGN-L+U+SPE")));
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(GradCheck, EveryVariantBothDepths) {
  for (std::size_t layers : {1u, 2u}) {
    auto all = all_variants();
    all.push_back(parse_variant("TGAT"));
    for (const auto& f : all) {
      auto r = grad_check(tiny_config(f, layers));
      EXPECT_LE(r.max_rel_error, 1e-4) << variant_label(f) << " l=" << layers << " " << r.worst;
    }
  }
}

TEST(GradCheck, RefusesWideModels) {
  auto c = tiny_config(parse_variant("TGN-L"));
  c.dims.d_m = 9;
  EXPECT_THROW(grad_check(c), Error);
}

TEST(Train, ZeroLearningRateKeepsParameters) {
  auto fx = small_planted();
  auto c = small_config("M2-STGN-L+U+SPE");
  c.learning_rate = 0;
  Model m(c, fx.d_s);
  const auto before = params_to_json(m.params()).dump();
  Engine e(m, fx.store, &fx.sets);
  auto r = train(m, e, fx.split.train);
  EXPECT_FALSE(r.aborted);
  EXPECT_EQ(r.curve.size(), 2u);
  EXPECT_EQ(params_to_json(m.params()).dump(), before);
}

TEST(Train, SameSeedSameCurve) {
  auto fx = small_planted();
  auto run = [&] {
    Model m(small_config("M1-STGN-A"), fx.d_s);
    Engine e(m, fx.store, &fx.sets);
    auto r = train(m, e, fx.split.train);
    std::vector<Real> losses;
    for (const auto& ep : r.curve) losses.push_back(ep.loss);
    return std::make_pair(losses, params_to_json(m.params()).dump());
  };
  auto a = run(), b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(Train, SmallStepDescendsOnSameBatch) {
  auto fx = small_planted(2);
  for (const char* v : {"TGN-L", "M2-STGN-M+U", "M2-STGN-A+U+SPE", "TGAT"}) {
    Model m(small_config(v), fx.d_s);
    Engine e(m, fx.store, &fx.sets);
    e.replay({0, 100}, 50);
    const EventRange batch{100, 150};
    std::vector<NodeId> negs;
    std::mt19937_64 rng(3);
    for (std::size_t i = batch.begin; i < batch.end; ++i) {
      negs.push_back(sample_negative(all_items(fx.store), fx.store.event(i).item_id, rng));
    }
    Real before = 0;
    {
      Tape t;
      m.params().zero_grad();
      auto g = e.forward(t, batch, &negs);
      before = g.loss.scalar();
      t.backward(g.loss);
    }
    // time frequencies see gaps in seconds, so curvature is large; keep the
    // step well inside the first-order regime and check the predicted drop
    const Real eps = 1e-8;
    Real g2 = 0;
    for (auto& [_, p] : m.params()) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        g2 += p.grad[i] * p.grad[i];
        p.value[i] -= eps * p.grad[i];
      }
    }
    Tape t;
    const Real after = e.forward(t, batch, &negs).loss.scalar();
    EXPECT_LT(after, before) << v;
    const Real ratio = (before - after) / (eps * g2);
    EXPECT_GT(ratio, 0.5) << v;
    EXPECT_LT(ratio, 1.5) << v;
  }
}

TEST(Evaluate, OracleAndConstantScorers) {
  auto fx = small_planted();
  EvalOptions o;
  o.scorer = ScorerKind::Oracle;
  auto r = evaluate(nullptr, fx.store, fx.split, fx.split.test, EvalMode::Transductive, o);
  EXPECT_EQ(r.ap, 1.0);
  EXPECT_EQ(r.auc, 1.0);
  o.scorer = ScorerKind::Constant;
  r = evaluate(nullptr, fx.store, fx.split, fx.split.test, EvalMode::Inductive, o);
  EXPECT_EQ(r.auc, 0.5);
}

TEST(Evaluate, EventCountsMatchSplit) {
  auto fx = small_planted();
  EvalOptions o;
  o.scorer = ScorerKind::Oracle;
  auto tr = evaluate(nullptr, fx.store, fx.split, fx.split.test, EvalMode::Transductive, o);
  EXPECT_EQ(tr.n_events, fx.split.test.size());
  std::size_t n_new = 0;
  for (std::size_t i = fx.split.test.begin; i < fx.split.test.end; ++i) {
    const auto& e = fx.store.event(i);
    n_new += fx.split.new_users.contains(e.user_id) || fx.split.new_items.contains(e.item_id);
  }
  ASSERT_GT(n_new, 0u);
  auto ind = evaluate(nullptr, fx.store, fx.split, fx.split.test, EvalMode::Inductive, o);
  EXPECT_EQ(ind.n_events, n_new);
}

TEST(Evaluate, InductiveWithoutNewNodesIsError) {
  auto fx = small_planted();
  ChronoSplit s = fx.split;
  s.new_users.clear();
  s.new_items.clear();
  EvalOptions o;
  o.scorer = ScorerKind::Oracle;
  EXPECT_THROW(evaluate(nullptr, fx.store, s, s.test, EvalMode::Inductive, o), Error);
}

TEST(Evaluate, LeavesParametersAloneAndRepeats) {
  auto fx = small_planted();
  Model m(small_config("M2-STGN-L+U"), fx.d_s);
  Engine e(m, fx.store, &fx.sets);
  train(m, e, fx.split.train);
  const auto before = params_to_json(m.params()).dump();
  EvalOptions o;
  o.batch_size = 50;
  auto a = evaluate(&e, fx.store, fx.split, fx.split.test, EvalMode::Transductive, o);
  auto b = evaluate(&e, fx.store, fx.split, fx.split.test, EvalMode::Transductive, o);
  EXPECT_EQ(params_to_json(m.params()).dump(), before);
  EXPECT_EQ(a.ap, b.ap);
  EXPECT_EQ(a.auc, b.auc);
  EXPECT_GE(a.ap, 0);
  EXPECT_LE(a.ap, 1);
}

TEST(Model, OnlyUsedTensorsExist) {
  Model tgn(tiny_config(parse_variant("TGN-L")), 3);
  EXPECT_FALSE(tgn.params().contains("sem.W_s"));
  EXPECT_FALSE(tgn.params().contains("aoi.W_q"));
  Model full(tiny_config(parse_variant("M2-STGN-A+U+SPE")), 3);
  for (const char* n : {"sem.W_s", "usattn.W_Q", "aoi.W_q", "spe.W_p", "fuse.W1", "gru.W_hZ"}) {
    EXPECT_TRUE(full.params().contains(n)) << n;
  }
  Model tgat(tiny_config(parse_variant("TGAT")), 0);
  EXPECT_FALSE(tgat.params().contains("gru.W_hZ"));
}
