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

#include <random>
#include <string>
#include <vector>

#include "stgn/graph_store.hpp"

namespace stgn {

// A trace where taste is fully explained by genre: every user has one
// genre and only requests items carrying it. A block of users joins late so
// that the held-out window has unseen users.
struct PlantedTraceOptions {
  std::size_t users = 200;
  std::size_t items = 50;
  std::size_t genres = 5;
  std::size_t events = 5000;
  std::size_t late_users = 40;     // the last ids; silent before late_start
  double late_start = 0.7;         // fraction of the timeline
  double late_share = 0.5;         // chance a late-phase event goes to a late user
  Timestamp origin = 1600000000;   // first timestamp
  Timestamp spacing = 60;          // seconds between events
  double duration = 600;           // seconds watched, above the ingest cutoff
  std::uint64_t seed = 0;
};

inline std::string planted_genre(std::size_t g) { return "g" + std::to_string(g); }

// Item k carries genre k % G and, for odd k, also (k + 1) % G.
inline std::vector<std::string> planted_item_genres(std::size_t k, std::size_t genres) {
  std::vector<std::string> out{planted_genre(k % genres)};
  if (k % 2 == 1 && genres > 1) out.push_back(planted_genre((k + 1) % genres));
  return out;
}

inline std::size_t planted_user_genre(std::size_t u, std::size_t genres) { return u % genres; }

inline std::vector<RawRecord> planted_trace(const PlantedTraceOptions& o) {
  STGN_CHECK(o.genres > 0 && o.items >= o.genres && o.users > o.late_users,
             "planted_trace: inconsistent sizes");
  std::mt19937_64 rng(o.seed);
  // items per genre
  std::vector<std::vector<std::size_t>> by_genre(o.genres);
  for (std::size_t k = 0; k < o.items; ++k) {
    for (const auto& g : planted_item_genres(k, o.genres)) {
      by_genre[std::stoul(g.substr(1))].push_back(k);
    }
  }
  const std::size_t early_users = o.users - o.late_users;
  const auto late_from = static_cast<std::size_t>(o.late_start * static_cast<double>(o.events));
  std::uniform_int_distribution<std::size_t> early(0, early_users - 1);
  std::uniform_int_distribution<std::size_t> late(early_users, o.users - 1);
  std::bernoulli_distribution pick_late(o.late_share);
  std::vector<RawRecord> out;
  out.reserve(o.events);
  for (std::size_t n = 0; n < o.events; ++n) {
    const bool is_late = n >= late_from && o.late_users > 0 && pick_late(rng);
    const std::size_t u = is_late ? late(rng) : early(rng);
    const auto& pool = by_genre[planted_user_genre(u, o.genres)];
    std::uniform_int_distribution<std::size_t> item(0, pool.size() - 1);
    const std::size_t k = pool[item(rng)];
    RawRecord r;
    r.timestamp = o.origin + o.spacing * static_cast<Timestamp>(n);
    r.user = "u" + std::to_string(u);
    r.item = "i" + std::to_string(k);
    r.duration = o.duration;
    r.genres = planted_item_genres(k, o.genres);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace stgn
