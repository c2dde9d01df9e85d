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

#include <list>
#include <random>

#include "stgn/caching.hpp"
#include "oracles.hpp"

using namespace stgn;

namespace {

SimConfig one_hour() {
  SimConfig c;
  c.hours = 1;
  return c;
}

EventStore store_from(const std::vector<std::pair<Timestamp, std::string>>& reqs) {
  std::vector<RawRecord> rs;
  for (const auto& [t, item] : reqs) rs.push_back({t, "u" + std::to_string(rs.size() % 7), item, 600, {"g"}});
  IngestOptions o;
  o.min_requests = 0;
  o.min_duration = 0;
  return ingest_trace(rs, o).store;
}

}  // namespace

TEST(Popularity, SlotThresholdExamples) {
  EXPECT_EQ(predict_popularity_slot({0.999, 0.996, 0.3}, 0.995), 2u);
  EXPECT_EQ(predict_popularity_slot({0.5, 0.995, 0.1}, 0.995), 0u);
  EXPECT_EQ(predict_popularity_slot({0.995}, 0.995), 0u);
  EXPECT_EQ(predict_popularity_slot({}, 0.995), 0u);
}

TEST(Popularity, SlotIndexSetIncludesBothEnds) {
  EXPECT_EQ(slot_count(SimConfig{}), 61u);
  SimConfig c;
  c.delta_p = 7;
  EXPECT_EQ(slot_count(c), 515u);  // floor(3600 / 7) + 1
}

TEST(Popularity, Accumulation) {
  auto t = accumulate_popularity({{1, {0, 0, 0}}, {2, {1, 0, 2}}});
  EXPECT_EQ(t.at(1), 0u);
  EXPECT_EQ(t.at(2), 3u);
  EXPECT_EQ(t.at(99), 0u);
}

TEST(Ranking, Examples) {
  // a = 0, b = 1, c = 2
  auto t = accumulate_popularity({{0, {3}}, {1, {1}}, {2, {3}}});
  Recency r{{0, 10}, {1, 30}, {2, 20}};
  EXPECT_EQ(rank_candidates(t, r, {0, 1, 2}), (std::vector<NodeId>{2, 0, 1}));
  EXPECT_EQ(rank_candidates(t, r, {1}), (std::vector<NodeId>{1}));
  auto zero = accumulate_popularity({{0, {0}}, {1, {0}}, {2, {0}}});
  EXPECT_EQ(rank_candidates(zero, r, {0, 1, 2}), (std::vector<NodeId>{1, 2, 0}));
}

TEST(Ranking, AllZeroPopularityIsPureRecency) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<NodeId> cands;
    Recency rec;
    std::map<NodeId, std::vector<std::size_t>> counts;
    std::vector<Timestamp> used;
    for (std::size_t k = 0; k < n; ++k) {
      const NodeId id = NodeId(k * 3 + rng() % 3);
      cands.push_back(id);
      counts[id] = std::vector<std::size_t>(61, 0);
      Timestamp t;
      do {
        t = Timestamp(rng() % 100000);
      } while (std::find(used.begin(), used.end(), t) != used.end());
      used.push_back(t);
      rec[id] = t;
    }
    std::shuffle(cands.begin(), cands.end(), rng);
    auto want = cands;
    std::sort(want.begin(), want.end(), [&](NodeId a, NodeId b) { return rec[a] > rec[b]; });
    EXPECT_EQ(rank_candidates(accumulate_popularity(counts), rec, cands), want);
  }
}

TEST(Placement, FillsTiersTopDown) {
  std::vector<NodeId> r(20);
  std::iota(r.begin(), r.end(), 0);
  auto s = place_top_k(r, SimConfig{});
  EXPECT_EQ(s.tiers[0].size(), 5u);
  EXPECT_EQ(s.tiers[1].size(), 7u);
  EXPECT_EQ(s.tiers[2].size(), 8u);
  EXPECT_EQ(s.tier_of(4), 0);
  EXPECT_EQ(s.tier_of(5), 1);
  EXPECT_EQ(s.tier_of(12), 2);
  auto small = place_top_k({8, 9, 10}, SimConfig{});
  EXPECT_EQ(small.tiers[0].size(), 3u);
  EXPECT_TRUE(small.tiers[1].empty());
  EXPECT_TRUE(small.tiers[2].empty());
  EXPECT_THROW(place_top_k({1, 2, 1}, SimConfig{}), Error);
  r.push_back(99);
  EXPECT_EQ(place_top_k(r, SimConfig{}).tier_of(99), -1);
}

TEST(Simulate, HandExamples) {
  auto cfg = one_hour();
  std::vector<CacheState> only_a{place_top_k({0}, cfg)};
  // a b a c with only a cached
  std::vector<Request> reqs{{1, 0}, {2, 1}, {3, 0}, {4, 2}};
  auto r = simulate(reqs, only_a, 0, cfg);
  EXPECT_EQ(r.h, 0.5);
  EXPECT_EQ(r.hits() + r.misses, r.requests);
  EXPECT_EQ(simulate(reqs, {CacheState(cfg.tier_capacities)}, 0, cfg).h, 0.0);
  EXPECT_EQ(simulate(reqs, {place_top_k({0, 1, 2}, cfg)}, 0, cfg).h, 1.0);
  EXPECT_EQ(simulate(reqs, {place_top_k({0, 1, 2}, cfg)}, 0, cfg).tier_hits[0], 4u);
}

TEST(Simulate, PerHourSeries) {
  SimConfig cfg;
  std::vector<CacheState> pl(24, CacheState(cfg.tier_capacities));
  pl[3] = place_top_k({7}, cfg);
  auto r = simulate({{3 * 3600 + 1, 7}, {3 * 3600 + 2, 8}, {5 * 3600, 7}}, pl, 0, cfg);
  EXPECT_EQ(r.h_per_hour.size(), 24u);
  EXPECT_EQ(r.h_per_hour[3], 0.5);
  EXPECT_EQ(r.h_per_hour[5], 0.0);
  EXPECT_EQ(r.requests_per_hour[0], 0u);
}

TEST(Simulate, RandomTracesMatchRecountAndAccumulation) {
  std::mt19937_64 rng(1234);
  SimConfig cfg;
  cfg.hours = 4;
  cfg.delta_P = 100;
  cfg.delta_p = 10;
  for (int trace = 0; trace < 50; ++trace) {
    const std::size_t n_items = 5 + rng() % 40;
    std::vector<CacheState> pl;
    for (std::size_t h = 0; h < cfg.hours; ++h) {
      // random popularity per slot from random preference columns
      std::map<NodeId, std::vector<std::size_t>> counts;
      std::map<NodeId, std::size_t> recount_total;
      for (NodeId k = 0; k < n_items; ++k) {
        for (std::size_t s = 0; s < slot_count(cfg); ++s) {
          std::vector<Real> prefs(rng() % 6);
          for (auto& p : prefs) p = Real(rng() % 1000) / 1000;
          counts[k].push_back(predict_popularity_slot(prefs, 0.7));
          for (Real p : prefs) recount_total[k] += p > 0.7;
        }
      }
      auto table = accumulate_popularity(counts);
      for (NodeId k = 0; k < n_items; ++k) ASSERT_EQ(table.at(k), recount_total[k]);
      Recency rec;
      for (NodeId k = 0; k < n_items; ++k) rec[k] = Timestamp(rng() % 50);
      std::vector<NodeId> cands(n_items);
      std::iota(cands.begin(), cands.end(), 0);
      pl.push_back(place_top_k(rank_candidates(table, rec, cands), cfg));
      pl.back().check_invariants();
    }
    std::vector<Request> reqs(1 + rng() % 100);
    Timestamp t = 0;
    for (auto& q : reqs) {
      t += Timestamp(rng() % 8);
      q = {t, NodeId(rng() % n_items)};
    }
    auto r = simulate(reqs, pl, 0, cfg);
    auto [hits, n] = stgn::testing::recount_hits(reqs, pl, 0, cfg);
    EXPECT_EQ(r.hits(), hits);
    EXPECT_EQ(r.requests, n);
    EXPECT_EQ(r.h, n ? Real(hits) / Real(n) : 0.0);
  }
}

TEST(Lru, RepeatedItemMissesOnce) {
  auto cfg = one_hour();
  std::vector<Request> reqs;
  for (int k = 0; k < 100; ++k) reqs.push_back({Timestamp(k), 3});
  auto r = lru_baseline(reqs, 0, cfg);
  EXPECT_EQ(r.misses, 1u);
  EXPECT_EQ(r.tier_hits[0], 99u);
}

TEST(Lru, CyclicScanThrashes) {
  auto cfg = one_hour();
  std::vector<Request> reqs;
  for (int k = 0; k < 210; ++k) reqs.push_back({Timestamp(k), NodeId(k % 21)});
  EXPECT_EQ(lru_baseline(reqs, 0, cfg).h, 0.0);
}

TEST(Lru, HitCountsMonotoneInCapacity) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Request> reqs;
    for (int k = 0; k < 300; ++k) reqs.push_back({Timestamp(k), NodeId(rng() % 30)});
    std::size_t prev = 0;
    for (std::size_t tier = 0; tier < 3; ++tier) {
      for (std::size_t extra = 0; extra < 4; ++extra) {
        auto cfg = one_hour();
        cfg.tier_capacities[tier] += extra;
        const auto h = lru_baseline(reqs, 0, cfg).hits();
        if (extra > 0) EXPECT_GE(h, prev);
        prev = h;
      }
    }
  }
}

TEST(Simulate, HitCountsMonotoneInCapacity) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<NodeId> ranking(40);
    std::iota(ranking.begin(), ranking.end(), 0);
    std::shuffle(ranking.begin(), ranking.end(), rng);
    std::vector<Request> reqs;
    for (int k = 0; k < 200; ++k) reqs.push_back({Timestamp(k), NodeId(rng() % 40)});
    for (std::size_t tier = 0; tier < 3; ++tier) {
      std::size_t prev = 0;
      for (std::size_t extra = 0; extra < 5; ++extra) {
        auto cfg = one_hour();
        cfg.tier_capacities[tier] += extra;
        const auto h = simulate(reqs, {place_top_k(ranking, cfg)}, 0, cfg).hits();
        EXPECT_GE(h, prev);
        prev = h;
      }
    }
  }
}

TEST(Candidates, WindowSemantics) {
  auto s = store_from({{0, "x"}, {100, "y"}, {150, "y"}, {200, "z"}});
  auto one = build_candidates(s, 200, 60);  // (140, 200) holds only y
  EXPECT_EQ(one.size(), 1u);
  std::size_t prev = 0;
  for (Timestamp w : {60.0, 101.0, 150.0, 201.0, 1000.0}) {
    auto c = build_candidates(s, 200, w);
    EXPECT_GE(c.size(), prev);
    EXPECT_TRUE(std::includes(c.begin(), c.end(), one.begin(), one.end()));
    prev = c.size();
  }
  EXPECT_EQ(prev, 2u);  // z sits at the start time and is not history
  EXPECT_THROW(build_candidates(s, 200, 10), Error);
}

// With every predicted popularity at zero the ranking is the recency order,
// so the hourly placement equals an LRU cache frozen at each period start.
TEST(MatchedTrace, ZeroPopularityEqualsFrozenLru) {
  std::mt19937_64 rng(31);
  std::vector<std::pair<Timestamp, std::string>> reqs;
  Timestamp t = 0;
  // 50 h of history over 60 items, then 24 h of test traffic
  while (t < 74 * 3600) {
    t += Timestamp(1 + rng() % 400);
    const auto k = rng() % 4 == 0 ? rng() % 60 : rng() % 25;
    reqs.push_back({t, "i" + std::to_string(k)});
  }
  auto store = store_from(reqs);
  const Timestamp start = 50 * 3600;
  SimConfig cfg;
  PreferenceFn zero = [](const std::vector<NodeId>& u, const std::vector<NodeId>& i, Timestamp,
                         BatchView) { return std::vector<Vec>(u.size(), Vec(i.size(), 0.0)); };
  auto run = run_caching(store, start, cfg, {cfg.p_thre}, zero, {});

  // independent frozen LRU: a recency list over the whole history, with a
  // snapshot of its first 20 entries taken at each period start
  std::list<NodeId> lru;
  std::vector<std::size_t> tier_hits(3, 0);
  std::size_t n = 0;
  std::vector<std::vector<NodeId>> snap;
  std::size_t period = 0;
  for (const auto& e : store.events()) {
    while (e.timestamp >= start + Timestamp(period) * cfg.delta_P && period < cfg.hours) {
      snap.emplace_back(lru.begin(), std::next(lru.begin(), std::min<std::size_t>(20, lru.size())));
      ++period;
    }
    if (e.timestamp >= start && e.timestamp < start + 24 * 3600) {
      ++n;
      const auto& s = snap.back();
      auto it = std::find(s.begin(), s.end(), e.item_id);
      if (it != s.end()) {
        const auto rank = std::size_t(it - s.begin());
        ++tier_hits[rank < 5 ? 0 : rank < 12 ? 1 : 2];
      }
    }
    lru.remove(e.item_id);
    lru.push_front(e.item_id);
  }
  ASSERT_EQ(run.model.size(), 1u);
  EXPECT_EQ(run.model[0].requests, n);
  EXPECT_EQ(run.model[0].tier_hits, tier_hits);
}

TEST(Sweep, ArityAndDeterminism) {
  SimConfig base;
  base.hours = 1;
  auto cell = [](const SimConfig& c, const std::vector<Real>& ps) {
    std::vector<HitReport> out;
    for (Real p : ps) {
      // stand-in: cache holds items below a threshold-dependent id
      std::vector<NodeId> r;
      for (NodeId k = 0; k < NodeId(p * 10 + c.delta_p / 60); ++k) r.push_back(k);
      out.push_back(simulate({{1, 0}, {2, 5}, {3, 9}}, {place_top_k(r, c)}, 0, c));
    }
    return out;
  };
  auto rows = sweep(base, {{0.2, 0.5, 0.9}, {60, 120, 600}, {3600}}, cell);
  EXPECT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[0].config.p_thre, 0.2);
  EXPECT_EQ(rows[3].config.p_thre, 0.5);
  EXPECT_EQ(rows[1].config.delta_p, 120);
  auto one = sweep(base, {{0.5}, {60}, {3600}}, cell);
  ASSERT_EQ(one.size(), 1u);
  auto direct = cell(one[0].config, {0.5})[0];
  EXPECT_EQ(one[0].report.h, direct.h);
  EXPECT_EQ(one[0].report.tier_hits, direct.tier_hits);
  auto twice = sweep(base, {{0.5, 0.5}, {60}, {3600}}, cell);
  EXPECT_EQ(twice[0].report.tier_hits, twice[1].report.tier_hits);
  EXPECT_THROW(sweep(base, {{}, {60}, {3600}}, cell), Error);
}
