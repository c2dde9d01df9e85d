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
#include <compare>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "stgn/error.hpp"
#include "stgn/params.hpp"

namespace stgn {

using Timestamp = double;
using NodeId = std::uint32_t;

enum class Role : std::uint8_t { User, Item };

struct NodeRef {
  Role role = Role::User;
  NodeId id = 0;
  auto operator<=>(const NodeRef&) const = default;
};

inline NodeRef user_node(NodeId id) { return {Role::User, id}; }
inline NodeRef item_node(NodeId id) { return {Role::Item, id}; }

// One request as it appears in a trace, before filtering and id assignment.
struct RawRecord {
  Timestamp timestamp = 0;
  std::string user;
  std::string item;
  double duration = 0;
  std::vector<std::string> genres;
};

struct InteractionEvent {
  std::size_t event_index = 0;
  NodeId user_id = 0;
  NodeId item_id = 0;
  Timestamp timestamp = 0;
  Vec edge_features;
  double duration = 0;
};

// Raw node features and genre tokens, indexed by dense id.
struct NodeCatalog {
  std::vector<std::string> user_names;
  std::vector<std::string> item_names;
  std::vector<Vec> user_raw_features;
  std::vector<Vec> item_raw_features;
  std::vector<std::vector<std::string>> item_genres;

  [[nodiscard]] std::size_t num_users() const { return user_names.size(); }
  [[nodiscard]] std::size_t num_items() const { return item_names.size(); }
};

struct EventRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  [[nodiscard]] std::size_t size() const { return end - begin; }
  [[nodiscard]] bool contains(std::size_t i) const {
    return i >= begin && i < end;
  }
  bool operator==(const EventRange&) const = default;
};

struct ChronoSplit {
  EventRange train, val, test;
  std::set<NodeId> new_users;
  std::set<NodeId> new_items;

  [[nodiscard]] bool is_new(NodeRef n) const {
    return n.role == Role::User ? new_users.contains(n.id)
                                : new_items.contains(n.id);
  }
};

struct IngestOptions {
  std::size_t d_v = 16;
  std::size_t d_e = 1;
  std::uint64_t seed = 0;
  // Users are kept only with strictly more requests than this.
  std::size_t min_requests = 4;
  // Records are kept only with a strictly longer duration (seconds).
  double min_duration = 180;
};

struct IngestReport {
  std::size_t records_total = 0;
  std::size_t malformed = 0;
  std::size_t dropped_short_duration = 0;
  std::size_t dropped_inactive_user_records = 0;
  std::size_t dropped_users = 0;
  std::size_t kept_events = 0;
  std::size_t users = 0;
  std::size_t items = 0;
  std::vector<std::string> rejects;  // first few malformed-record reasons
};

// Append-only, time-ordered bipartite event store with per-node indices.
class EventStore {
 public:
  EventStore() = default;
  EventStore(std::vector<InteractionEvent> events, NodeCatalog catalog)
      : events_(std::move(events)), catalog_(std::move(catalog)) {
    reindex();
  }

  [[nodiscard]] const std::vector<InteractionEvent>& events() const {
    return events_;
  }
  [[nodiscard]] const InteractionEvent& event(std::size_t i) const {
    return events_.at(i);
  }
  [[nodiscard]] const NodeCatalog& catalog() const { return catalog_; }
  [[nodiscard]] std::size_t size() const { return events_.size(); }
  [[nodiscard]] std::size_t num_users() const { return catalog_.num_users(); }
  [[nodiscard]] std::size_t num_items() const { return catalog_.num_items(); }

  // Indices of the up-to-n_max events incident to `node` with timestamp
  // strictly below `t` and event index below `before_index`, most recent
  // first (ties: higher event index first). Unknown nodes yield nothing.
  [[nodiscard]] std::vector<std::size_t> sample_recent_neighbors(
      NodeRef node, Timestamp t, std::size_t n_max,
      std::size_t before_index = std::numeric_limits<std::size_t>::max())
      const {
    const auto& index = node.role == Role::User ? by_user_ : by_item_;
    if (node.id >= index.size()) return {};
    const auto& list = index[node.id];
    // list is sorted by event index, hence also by timestamp.
    auto by_time = std::lower_bound(
        list.begin(), list.end(), t,
        [&](std::size_t e, Timestamp tt) { return events_[e].timestamp < tt; });
    auto by_idx = std::lower_bound(list.begin(), list.end(), before_index);
    auto stop = std::min(by_time, by_idx);
    std::vector<std::size_t> out;
    for (auto it = stop; it != list.begin() && out.size() < n_max;) {
      --it;
      out.push_back(*it);
    }
    return out;
  }

  // Event indices incident to a node, ascending.
  [[nodiscard]] const std::vector<std::size_t>& incident(NodeRef node) const {
    static const std::vector<std::size_t> empty;
    const auto& index = node.role == Role::User ? by_user_ : by_item_;
    return node.id < index.size() ? index[node.id] : empty;
  }

  // First event index whose timestamp is >= t.
  [[nodiscard]] std::size_t first_index_at_or_after(Timestamp t) const {
    auto it = std::lower_bound(
        events_.begin(), events_.end(), t,
        [](const InteractionEvent& e, Timestamp tt) { return e.timestamp < tt; });
    return static_cast<std::size_t>(it - events_.begin());
  }

 private:
  void reindex() {
    by_user_.assign(catalog_.num_users(), {});
    by_item_.assign(catalog_.num_items(), {});
    for (std::size_t i = 0; i < events_.size(); ++i) {
      const auto& e = events_[i];
      STGN_CHECK(e.event_index == i, "event_index must equal position");
      STGN_CHECK(i == 0 || events_[i - 1].timestamp <= e.timestamp,
                 "events must be time-ordered");
      STGN_CHECK(e.user_id < by_user_.size() && e.item_id < by_item_.size(),
                 "event references a node missing from the catalog");
      by_user_[e.user_id].push_back(i);
      by_item_[e.item_id].push_back(i);
    }
  }

  std::vector<InteractionEvent> events_;
  NodeCatalog catalog_;
  std::vector<std::vector<std::size_t>> by_user_;
  std::vector<std::vector<std::size_t>> by_item_;
};

struct IngestResult {
  EventStore store;
  IngestReport report;
};

namespace detail {

inline std::string validate_record(const RawRecord& r) {
  if (r.user.empty()) return "empty user";
  if (r.item.empty()) return "empty item";
  if (!std::isfinite(r.timestamp) || r.timestamp < 0) return "bad timestamp";
  if (!std::isfinite(r.duration) || r.duration < 0) return "bad duration";
  if (r.genres.empty()) return "empty genre list";
  for (const auto& g : r.genres) {
    if (g.empty()) return "empty genre token";
  }
  return {};
}

}  // namespace detail

// Filters a raw trace (duration filter first, then the per-user request
// count filter), orders the survivors by (timestamp, record order), assigns
// dense ids by first appearance and draws raw features uniformly in
// [-0.1, 0.1] from `opts.seed`.
inline IngestResult ingest_trace(const std::vector<RawRecord>& records,
                                 const IngestOptions& opts,
                                 std::size_t prior_malformed = 0,
                                 std::vector<std::string> prior_rejects = {}) {
  IngestReport report;
  report.records_total = records.size() + prior_malformed;
  report.malformed = prior_malformed;
  report.rejects = std::move(prior_rejects);

  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto why = detail::validate_record(records[i]);
    if (!why.empty()) {
      ++report.malformed;
      if (report.rejects.size() < 20) {
        report.rejects.push_back("record " + std::to_string(i) + ": " + why);
      }
      continue;
    }
    if (!(records[i].duration > opts.min_duration)) {
      ++report.dropped_short_duration;
      continue;
    }
    valid.push_back(i);
  }

  std::unordered_map<std::string, std::size_t> per_user;
  for (auto i : valid) ++per_user[records[i].user];
  std::vector<std::size_t> kept;
  for (auto i : valid) {
    if (per_user[records[i].user] > opts.min_requests) {
      kept.push_back(i);
    } else {
      ++report.dropped_inactive_user_records;
    }
  }
  for (const auto& [_, n] : per_user) {
    if (n <= opts.min_requests) ++report.dropped_users;
  }
  STGN_CHECK(!kept.empty(), "ingest: no events survive filtering");

  std::stable_sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
    return records[a].timestamp < records[b].timestamp;
  });

  NodeCatalog cat;
  std::unordered_map<std::string, NodeId> user_ids, item_ids;
  std::vector<InteractionEvent> events;
  events.reserve(kept.size());
  for (auto i : kept) {
    const auto& r = records[i];
    auto [uit, unew] = user_ids.try_emplace(r.user, NodeId(cat.user_names.size()));
    if (unew) cat.user_names.push_back(r.user);
    auto [iit, inew] = item_ids.try_emplace(r.item, NodeId(cat.item_names.size()));
    if (inew) {
      cat.item_names.push_back(r.item);
      cat.item_genres.push_back(r.genres);
    }
    InteractionEvent e;
    e.event_index = events.size();
    e.user_id = uit->second;
    e.item_id = iit->second;
    e.timestamp = r.timestamp;
    e.duration = r.duration;
    // Single behaviour type ("request"): one-hot slot 0.
    e.edge_features.assign(opts.d_e, 0);
    if (opts.d_e > 0) e.edge_features[0] = 1;
    events.push_back(std::move(e));
  }

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<Real> dist(-0.1, 0.1);
  auto draw = [&] {
    Vec v(opts.d_v);
    for (auto& x : v) x = dist(rng);
    return v;
  };
  for (std::size_t u = 0; u < cat.num_users(); ++u) {
    cat.user_raw_features.push_back(draw());
  }
  for (std::size_t k = 0; k < cat.num_items(); ++k) {
    cat.item_raw_features.push_back(draw());
  }

  report.kept_events = events.size();
  report.users = cat.num_users();
  report.items = cat.num_items();
  return {EventStore(std::move(events), std::move(cat)), std::move(report)};
}

// Event-count split at floor(0.6 N) and floor(0.8 N).
inline ChronoSplit chronological_split(const EventStore& store) {
  const std::size_t n = store.size();
  STGN_CHECK(n >= 5, "chronological_split: need at least 5 events");
  ChronoSplit s;
  const std::size_t a = n * 6 / 10;
  const std::size_t b = n * 8 / 10;
  s.train = {0, a};
  s.val = {a, b};
  s.test = {b, n};
  std::vector<char> seen_u(store.num_users(), 0), seen_i(store.num_items(), 0);
  for (std::size_t i = 0; i < a; ++i) {
    seen_u[store.event(i).user_id] = 1;
    seen_i[store.event(i).item_id] = 1;
  }
  for (std::size_t u = 0; u < seen_u.size(); ++u) {
    if (!seen_u[u]) s.new_users.insert(NodeId(u));
  }
  for (std::size_t k = 0; k < seen_i.size(); ++k) {
    if (!seen_i[k]) s.new_items.insert(NodeId(k));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Trace text format: `timestamp,user,item,duration,genres` per line, genres
// separated by '|'. Timestamps are epoch seconds or "YYYY-MM-DD HH:MM:SS"
// (UTC). A first line starting with "timestamp" is treated as a header.

struct TraceReadResult {
  std::vector<RawRecord> records;
  std::size_t malformed = 0;
  std::vector<std::string> rejects;
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, delim)) out.push_back(cur);
  if (!s.empty() && s.back() == delim) out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_number(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

inline bool parse_timestamp(const std::string& s, double& out) {
  if (parse_number(s, out)) return true;
  std::tm tm{};
  std::istringstream in(s);
  in >> std::get_time(&tm, "%Y-%m-%d %H:%M:%S");
  if (in.fail()) return false;
  out = static_cast<double>(timegm(&tm));
  return true;
}

}  // namespace detail

inline bool parse_trace_line(const std::string& line, RawRecord& rec,
                             std::string& why) {
  auto fields = detail::split(line, ',');
  if (fields.size() != 5) {
    why = "expected 5 fields, got " + std::to_string(fields.size());
    return false;
  }
  for (auto& f : fields) f = detail::trim(f);
  if (!detail::parse_timestamp(fields[0], rec.timestamp)) {
    why = "unparseable timestamp";
    return false;
  }
  rec.user = fields[1];
  rec.item = fields[2];
  if (!detail::parse_number(fields[3], rec.duration)) {
    why = "unparseable duration";
    return false;
  }
  rec.genres.clear();
  for (auto& g : detail::split(fields[4], '|')) {
    auto t = detail::trim(g);
    if (!t.empty()) rec.genres.push_back(t);
  }
  auto v = detail::validate_record(rec);
  if (!v.empty()) {
    why = v;
    return false;
  }
  return true;
}

inline TraceReadResult read_trace(std::istream& in) {
  TraceReadResult res;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = detail::trim(line);
    if (t.empty()) continue;
    if (lineno == 1 && t.rfind("timestamp", 0) == 0) continue;
    RawRecord rec;
    std::string why;
    if (parse_trace_line(t, rec, why)) {
      res.records.push_back(std::move(rec));
    } else {
      ++res.malformed;
      if (res.rejects.size() < 20) {
        res.rejects.push_back("line " + std::to_string(lineno) + ": " + why);
      }
    }
  }
  return res;
}

inline TraceReadResult read_trace_file(const std::string& path) {
  std::ifstream in(path);
  STGN_CHECK(in.good(), "cannot open trace file: " + path);
  return read_trace(in);
}

inline std::string format_trace_line(const RawRecord& r) {
  std::ostringstream out;
  out << std::setprecision(17) << r.timestamp << ',' << r.user << ','
      << r.item << ',' << r.duration << ',';
  for (std::size_t i = 0; i < r.genres.size(); ++i) {
    if (i) out << '|';
    out << r.genres[i];
  }
  return out.str();
}

// Re-expresses stored events as raw records (used for idempotence checks and
// for exporting a filtered trace).
inline std::vector<RawRecord> to_raw_records(const EventStore& store) {
  std::vector<RawRecord> out;
  out.reserve(store.size());
  const auto& cat = store.catalog();
  for (const auto& e : store.events()) {
    out.push_back({e.timestamp, cat.user_names[e.user_id],
                   cat.item_names[e.item_id], e.duration,
                   cat.item_genres[e.item_id]});
  }
  return out;
}

}  // namespace stgn
