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

#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <vector>

#include "stgn/graph_store.hpp"
#include "stgn/model.hpp"

namespace stgn {

struct SimConfig {
  Timestamp delta_P = 3600;  // cache update period
  Timestamp delta_p = 60;    // prediction slot
  Real p_thre = 0.995;
  std::vector<std::size_t> tier_capacities{5, 7, 8};
  Timestamp candidate_window = 180000;  // 50 h of history forming the noise set
  std::size_t hours = 24;               // periods simulated

  void validate() const {
    STGN_CHECK(delta_p > 0 && delta_P > 0, "delta_p and delta_P must be positive");
    STGN_CHECK(delta_p <= delta_P, "delta_p must not exceed delta_P");
    STGN_CHECK(p_thre > 0 && p_thre < 1, "p_thre must lie in (0, 1)");
    STGN_CHECK(!tier_capacities.empty(), "need at least one cache tier");
    for (auto c : tier_capacities) STGN_CHECK(c > 0, "tier capacities must be positive");
    STGN_CHECK(candidate_window > 0, "candidate_window must be positive");
    STGN_CHECK(hours > 0, "hours must be positive");
  }
  [[nodiscard]] std::size_t total_capacity() const {
    std::size_t n = 0;
    for (auto c : tier_capacities) n += c;
    return n;
  }
};

// Slot indices {0, 1, ..., floor(delta_P / delta_p)}.
inline std::size_t slot_count(const SimConfig& cfg) {
  return static_cast<std::size_t>(std::floor(cfg.delta_P / cfg.delta_p)) + 1;
}

// Number of users whose predicted preference strictly exceeds the threshold.
inline std::size_t predict_popularity_slot(const std::vector<Real>& preferences, Real p_thre) {
  std::size_t n = 0;
  for (Real p : preferences) {
    if (p > p_thre) ++n;
  }
  return n;
}

struct PopularityTable {
  std::map<NodeId, std::vector<std::size_t>> per_slot;
  std::map<NodeId, std::size_t> total;

  [[nodiscard]] std::size_t at(NodeId item) const {
    auto it = total.find(item);
    return it == total.end() ? 0 : it->second;
  }
};

inline PopularityTable accumulate_popularity(
    const std::map<NodeId, std::vector<std::size_t>>& slot_counts) {
  PopularityTable t;
  t.per_slot = slot_counts;
  for (const auto& [item, slots] : slot_counts) {
    std::size_t s = 0;
    for (auto c : slots) s += c;
    t.total[item] = s;
  }
  return t;
}

using Recency = std::map<NodeId, Timestamp>;

// Descending popularity; ties go to the more recently requested item, then
// to the lower id. Items never requested rank last among equals.
inline std::vector<NodeId> rank_candidates(const PopularityTable& table, const Recency& recency,
                                           const std::vector<NodeId>& candidates) {
  auto last = [&](NodeId k) {
    auto it = recency.find(k);
    return it == recency.end() ? -std::numeric_limits<Timestamp>::infinity() : it->second;
  };
  std::vector<NodeId> out = candidates;
  std::sort(out.begin(), out.end(), [&](NodeId a, NodeId b) {
    const auto pa = table.at(a), pb = table.at(b);
    if (pa != pb) return pa > pb;
    const auto ra = last(a), rb = last(b);
    if (ra != rb) return ra > rb;
    return a < b;
  });
  return out;
}

// Tiered cache contents, Tier 1 first; each tier most-recently-used first.
struct CacheState {
  std::vector<std::size_t> capacities;
  std::vector<std::deque<NodeId>> tiers;

  explicit CacheState(std::vector<std::size_t> caps = {})
      : capacities(std::move(caps)), tiers(capacities.size()) {}

  // 0-based tier holding `item`, or -1.
  [[nodiscard]] int tier_of(NodeId item) const {
    for (std::size_t t = 0; t < tiers.size(); ++t) {
      if (std::find(tiers[t].begin(), tiers[t].end(), item) != tiers[t].end()) {
        return static_cast<int>(t);
      }
    }
    return -1;
  }

  void check_invariants() const {
    std::set<NodeId> seen;
    for (std::size_t t = 0; t < tiers.size(); ++t) {
      STGN_CHECK(tiers[t].size() <= capacities[t], "cache tier over capacity");
      for (auto k : tiers[t]) {
        STGN_CHECK(seen.insert(k).second, "item cached in two places");
      }
    }
  }
};

inline CacheState place_top_k(const std::vector<NodeId>& ranking, const SimConfig& cfg) {
  CacheState s(cfg.tier_capacities);
  std::set<NodeId> seen;
  for (auto k : ranking) STGN_CHECK(seen.insert(k).second, "place_top_k: duplicate item in ranking");
  std::size_t next = 0;
  for (std::size_t t = 0; t < s.tiers.size(); ++t) {
    while (s.tiers[t].size() < s.capacities[t] && next < ranking.size()) {
      s.tiers[t].push_back(ranking[next++]);
    }
  }
  return s;
}

struct Request {
  Timestamp t = 0;
  NodeId item = 0;
};

struct HitReport {
  std::vector<std::size_t> tier_hits;
  std::size_t misses = 0;
  std::size_t requests = 0;
  Real h = 0;
  std::vector<std::size_t> hits_per_hour;
  std::vector<std::size_t> requests_per_hour;
  std::vector<Real> h_per_hour;  // 0 for an hour without requests

  [[nodiscard]] std::size_t hits() const {
    std::size_t n = 0;
    for (auto x : tier_hits) n += x;
    return n;
  }
};

namespace detail {

inline HitReport empty_report(const SimConfig& cfg) {
  HitReport r;
  r.tier_hits.assign(cfg.tier_capacities.size(), 0);
  r.hits_per_hour.assign(cfg.hours, 0);
  r.requests_per_hour.assign(cfg.hours, 0);
  r.h_per_hour.assign(cfg.hours, 0);
  return r;
}

// Period index of a request, or -1 outside [start, start + hours * delta_P).
inline long period_of(Timestamp t, Timestamp start, const SimConfig& cfg) {
  if (t < start) return -1;
  const auto p = static_cast<long>(std::floor((t - start) / cfg.delta_P));
  return p < static_cast<long>(cfg.hours) ? p : -1;
}

inline void finish(HitReport& r) {
  r.h = r.requests > 0 ? static_cast<Real>(r.hits()) / static_cast<Real>(r.requests) : 0;
  for (std::size_t i = 0; i < r.h_per_hour.size(); ++i) {
    r.h_per_hour[i] = r.requests_per_hour[i] > 0
                          ? static_cast<Real>(r.hits_per_hour[i]) /
                                static_cast<Real>(r.requests_per_hour[i])
                          : 0;
  }
}

}  // namespace detail

// Replays requests against the placement of their period; each request
// probes Tier 1, 2, 3 in turn. Requests outside the simulated window are
// ignored.
inline HitReport simulate(const std::vector<Request>& requests,
                          const std::vector<CacheState>& placements, Timestamp start,
                          const SimConfig& cfg) {
  STGN_CHECK(placements.size() >= cfg.hours, "simulate: one placement per period required");
  auto r = detail::empty_report(cfg);
  for (const auto& q : requests) {
    const long p = detail::period_of(q.t, start, cfg);
    if (p < 0) continue;
    ++r.requests;
    ++r.requests_per_hour[p];
    const int tier = placements[p].tier_of(q.item);
    if (tier < 0) {
      ++r.misses;
    } else {
      ++r.tier_hits[tier];
      ++r.hits_per_hour[p];
    }
  }
  detail::finish(r);
  return r;
}

// Hierarchical LRU: a hit anywhere moves the item to the head of Tier 1, a
// miss inserts it there, and each tier's overflow tail drops one tier down;
// Tier 3's tail leaves the cache. `warmup` requests shape the initial state
// without being counted.
inline HitReport lru_baseline(const std::vector<Request>& requests, Timestamp start,
                              const SimConfig& cfg, const std::vector<Request>& warmup = {}) {
  CacheState s(cfg.tier_capacities);
  auto touch = [&](NodeId item) -> int {
    const int tier = s.tier_of(item);
    if (tier >= 0) {
      auto& q = s.tiers[tier];
      q.erase(std::find(q.begin(), q.end(), item));
    }
    s.tiers[0].push_front(item);
    for (std::size_t t = 0; t < s.tiers.size(); ++t) {
      if (s.tiers[t].size() <= s.capacities[t]) break;
      const NodeId tail = s.tiers[t].back();
      s.tiers[t].pop_back();
      if (t + 1 < s.tiers.size()) s.tiers[t + 1].push_front(tail);
    }
    return tier;
  };
  for (const auto& q : warmup) touch(q.item);
  auto r = detail::empty_report(cfg);
  for (const auto& q : requests) {
    const long p = detail::period_of(q.t, start, cfg);
    if (p < 0) continue;
    ++r.requests;
    ++r.requests_per_hour[p];
    const int tier = touch(q.item);
    if (tier < 0) {
      ++r.misses;
    } else {
      ++r.tier_hits[tier];
      ++r.hits_per_hour[p];
    }
  }
  detail::finish(r);
  return r;
}

// Items requested within `window` seconds before `start`.
inline std::set<NodeId> build_candidates(const EventStore& store, Timestamp start,
                                         Timestamp window) {
  std::set<NodeId> out;
  const auto lo = store.first_index_at_or_after(start - window);
  const auto hi = store.first_index_at_or_after(start);
  for (std::size_t i = lo; i < hi; ++i) out.insert(store.event(i).item_id);
  STGN_CHECK(!out.empty(), "build_candidates: no requests in the candidate window");
  return out;
}

inline std::vector<Request> requests_between(const EventStore& store, Timestamp from,
                                             Timestamp to) {
  std::vector<Request> out;
  for (std::size_t i = store.first_index_at_or_after(from);
       i < store.size() && store.event(i).timestamp < to; ++i) {
    out.push_back({store.event(i).timestamp, store.event(i).item_id});
  }
  return out;
}

// Last request time per item, over events [0, before_index).
inline Recency recency_before(const EventStore& store, std::size_t before_index) {
  Recency r;
  for (std::size_t i = 0; i < before_index && i < store.size(); ++i) {
    r[store.event(i).item_id] = store.event(i).timestamp;
  }
  return r;
}

// Preference matrix provider: probs[u][i] for the given users and items at
// t_hat, looking at the graph as of `view`.
using PreferenceFn = std::function<std::vector<Vec>(
    const std::vector<NodeId>& users, const std::vector<NodeId>& items, Timestamp t_hat,
    BatchView view)>;

struct CachingRun {
  Timestamp start = 0;
  std::vector<NodeId> candidates;
  std::vector<HitReport> model;  // one per threshold
  HitReport lru;
  std::vector<std::vector<std::vector<NodeId>>> rankings;  // [threshold][hour]
};

// Hour by hour from `start`: predict popularity of every candidate from the
// hour's active users over all slots, place the ranking, serve the hour's
// requests, then let `advance` fold the hour's events into the model state.
// Several thresholds share one pass; cfg.p_thre is ignored in favour of them.
inline CachingRun run_caching(const EventStore& store, Timestamp start, const SimConfig& cfg,
                              const std::vector<Real>& thresholds, const PreferenceFn& prefs,
                              const std::function<void(std::size_t, std::size_t)>& advance) {
  cfg.validate();
  STGN_CHECK(!thresholds.empty(), "run_caching: no thresholds");
  for (Real p : thresholds) STGN_CHECK(p > 0 && p < 1, "thresholds must lie in (0, 1)");
  CachingRun run;
  run.start = start;
  const Timestamp end = start + static_cast<Timestamp>(cfg.hours) * cfg.delta_P;
  auto cand = build_candidates(store, start, cfg.candidate_window);
  for (const auto& q : requests_between(store, start, end)) cand.insert(q.item);
  run.candidates.assign(cand.begin(), cand.end());
  const auto n_slots = slot_count(cfg);
  std::vector<std::vector<CacheState>> placements(thresholds.size());
  run.rankings.assign(thresholds.size(), {});
  for (std::size_t h = 0; h < cfg.hours; ++h) {
    const Timestamp tb = start + static_cast<Timestamp>(h) * cfg.delta_P;
    const auto lo = store.first_index_at_or_after(tb);
    const auto hi = store.first_index_at_or_after(tb + cfg.delta_P);
    std::set<NodeId> active;
    for (std::size_t i = lo; i < hi; ++i) active.insert(store.event(i).user_id);
    const std::vector<NodeId> users(active.begin(), active.end());
    std::vector<std::map<NodeId, std::vector<std::size_t>>> counts(thresholds.size());
    for (auto& c : counts) {
      for (auto k : run.candidates) c[k].assign(n_slots, 0);
    }
    if (!users.empty()) {
      for (std::size_t n = 0; n < n_slots; ++n) {
        const Timestamp t_hat = tb + static_cast<Timestamp>(n) * cfg.delta_p;
        const auto p = prefs(users, run.candidates, t_hat, BatchView{tb, lo});
        for (std::size_t c = 0; c < run.candidates.size(); ++c) {
          std::vector<Real> column(users.size());
          for (std::size_t u = 0; u < users.size(); ++u) column[u] = p[u][c];
          for (std::size_t t = 0; t < thresholds.size(); ++t) {
            counts[t][run.candidates[c]][n] = predict_popularity_slot(column, thresholds[t]);
          }
        }
      }
    }
    const auto recency = recency_before(store, lo);
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      auto ranking = rank_candidates(accumulate_popularity(counts[t]), recency, run.candidates);
      placements[t].push_back(place_top_k(ranking, cfg));
      run.rankings[t].push_back(std::move(ranking));
    }
    if (advance) advance(lo, hi);
  }
  const auto reqs = requests_between(store, start, end);
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    run.model.push_back(simulate(reqs, placements[t], start, cfg));
  }
  run.lru = lru_baseline(reqs, start, cfg, requests_between(store, start - cfg.candidate_window, start));
  return run;
}

// Model-driven caching: replays history up to `start` into `engine`, then
// uses it for predictions and advances it hour by hour.
inline CachingRun run_caching(Engine& engine, Timestamp start, const SimConfig& cfg,
                              const std::vector<Real>& thresholds, std::size_t batch_size) {
  const auto& store = engine.store();
  engine.reset();
  engine.replay({0, store.first_index_at_or_after(start)}, batch_size);
  PreferenceFn prefs = [&](const std::vector<NodeId>& users, const std::vector<NodeId>& items,
                           Timestamp t_hat, BatchView view) {
    return engine.preference_matrix(users, items, t_hat, view);
  };
  auto advance = [&](std::size_t lo, std::size_t hi) {
    if (hi > lo) engine.replay({lo, hi}, batch_size);
  };
  return run_caching(store, start, cfg, thresholds, prefs, advance);
}

struct SweepGrid {
  std::vector<Real> p_thre;
  std::vector<Timestamp> delta_p;
  std::vector<Timestamp> candidate_window;
};

struct SweepRow {
  SimConfig config;
  HitReport report;
};

// Cartesian runs over the grid, in (p_thre, delta_p, window) order. `cell`
// evaluates every threshold for one (delta_p, window) pair in one pass.
inline std::vector<SweepRow> sweep(
    const SimConfig& base, const SweepGrid& grid,
    const std::function<std::vector<HitReport>(const SimConfig&, const std::vector<Real>&)>& cell) {
  STGN_CHECK(!grid.p_thre.empty() && !grid.delta_p.empty() && !grid.candidate_window.empty(),
             "sweep: every grid axis needs at least one value");
  std::map<std::pair<std::size_t, std::size_t>, std::vector<HitReport>> done;
  for (std::size_t d = 0; d < grid.delta_p.size(); ++d) {
    for (std::size_t w = 0; w < grid.candidate_window.size(); ++w) {
      auto c = base;
      c.delta_p = grid.delta_p[d];
      c.candidate_window = grid.candidate_window[w];
      done[{d, w}] = cell(c, grid.p_thre);
    }
  }
  std::vector<SweepRow> rows;
  for (std::size_t p = 0; p < grid.p_thre.size(); ++p) {
    for (std::size_t d = 0; d < grid.delta_p.size(); ++d) {
      for (std::size_t w = 0; w < grid.candidate_window.size(); ++w) {
        auto c = base;
        c.p_thre = grid.p_thre[p];
        c.delta_p = grid.delta_p[d];
        c.candidate_window = grid.candidate_window[w];
        rows.push_back({c, done.at({d, w}).at(p)});
      }
    }
  }
  return rows;
}

}  // namespace stgn
