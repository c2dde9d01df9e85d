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

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "stgn/caching.hpp"
#include "stgn/config.hpp"
#include "stgn/graph_store.hpp"
#include "stgn/model.hpp"
#include "stgn/training.hpp"

namespace stgn {

using json = nlohmann::ordered_json;

inline constexpr int kStoreVersion = 1;
inline constexpr int kCheckpointVersion = 1;
inline constexpr int kMemoryVersion = 1;

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string hash_json(const json& j) { return hex64(fnv1a64(j.dump())); }

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  STGN_CHECK(out.good(), "cannot write " + path);
  out << text;
  STGN_CHECK(out.good(), "write failed: " + path);
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  STGN_CHECK(in.good(), "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_json(const std::string& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

inline json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error("stgn: malformed JSON in " + path + ": " + e.what());
  }
}

// ------------------------------------------------------------------ store

inline json to_json(const EventStore& store) {
  const auto& cat = store.catalog();
  json users = json::array(), items = json::array(), events = json::array();
  for (std::size_t u = 0; u < cat.num_users(); ++u) {
    users.push_back({{"name", cat.user_names[u]}, {"features", cat.user_raw_features[u]}});
  }
  for (std::size_t k = 0; k < cat.num_items(); ++k) {
    items.push_back({{"name", cat.item_names[k]},
                     {"features", cat.item_raw_features[k]},
                     {"genres", cat.item_genres[k]}});
  }
  for (const auto& e : store.events()) {
    events.push_back({e.user_id, e.item_id, e.timestamp, e.duration, e.edge_features});
  }
  return {{"format", "stgn-store"},
          {"version", kStoreVersion},
          {"users", users},
          {"items", items},
          {"events", events}};
}

inline EventStore store_from_json(const json& j) {
  STGN_CHECK(j.value("format", "") == "stgn-store", "not an event store file");
  STGN_CHECK(j.value("version", 0) == kStoreVersion, "unsupported event store version");
  NodeCatalog cat;
  for (const auto& u : j.at("users")) {
    cat.user_names.push_back(u.at("name").get<std::string>());
    cat.user_raw_features.push_back(u.at("features").get<Vec>());
  }
  for (const auto& k : j.at("items")) {
    cat.item_names.push_back(k.at("name").get<std::string>());
    cat.item_raw_features.push_back(k.at("features").get<Vec>());
    cat.item_genres.push_back(k.at("genres").get<std::vector<std::string>>());
  }
  std::vector<InteractionEvent> events;
  for (const auto& e : j.at("events")) {
    InteractionEvent ev;
    ev.event_index = events.size();
    ev.user_id = e.at(0).get<NodeId>();
    ev.item_id = e.at(1).get<NodeId>();
    ev.timestamp = e.at(2).get<Timestamp>();
    ev.duration = e.at(3).get<double>();
    ev.edge_features = e.at(4).get<Vec>();
    events.push_back(std::move(ev));
  }
  return EventStore(std::move(events), std::move(cat));
}

inline json to_json(const IngestReport& r) {
  return {{"records_total", r.records_total},
          {"malformed", r.malformed},
          {"dropped_short_duration", r.dropped_short_duration},
          {"dropped_inactive_user_records", r.dropped_inactive_user_records},
          {"dropped_users", r.dropped_users},
          {"kept_events", r.kept_events},
          {"users", r.users},
          {"items", r.items},
          {"rejects", r.rejects}};
}

inline json to_json(const EventRange& r) { return {{"begin", r.begin}, {"end", r.end}}; }

inline EventRange range_from_json(const json& j) {
  return {j.at("begin").get<std::size_t>(), j.at("end").get<std::size_t>()};
}

inline json to_json(const ChronoSplit& s) {
  return {{"train", to_json(s.train)},
          {"val", to_json(s.val)},
          {"test", to_json(s.test)},
          {"new_users", s.new_users},
          {"new_items", s.new_items}};
}

inline ChronoSplit split_from_json(const json& j) {
  ChronoSplit s;
  s.train = range_from_json(j.at("train"));
  s.val = range_from_json(j.at("val"));
  s.test = range_from_json(j.at("test"));
  s.new_users = j.at("new_users").get<std::set<NodeId>>();
  s.new_items = j.at("new_items").get<std::set<NodeId>>();
  return s;
}

// ----------------------------------------------------------------- config

inline json to_json(const ModelDims& d) {
  return {{"d_v", d.d_v},         {"d_e", d.d_e},
          {"d_m", d.d_m},         {"d_T", d.d_T},
          {"d_h", d.d_h},         {"d_emb", d.d_emb},
          {"d_f", d.d_f},         {"d_attn", d.d_attn},
          {"n_heads", d.n_heads}, {"d_key", d.d_key},
          {"d_aoi", d.d_aoi},     {"spe_fourier", d.spe_fourier},
          {"spe_in", d.spe_in},   {"spe_mid", d.spe_mid},
          {"d_dec", d.d_dec}};
}

inline ModelDims dims_from_json(const json& j) {
  ModelDims d;
  d.d_v = j.at("d_v");
  d.d_e = j.at("d_e");
  d.d_m = j.at("d_m");
  d.d_T = j.at("d_T");
  d.d_h = j.at("d_h");
  d.d_emb = j.at("d_emb");
  d.d_f = j.at("d_f");
  d.d_attn = j.at("d_attn");
  d.n_heads = j.at("n_heads");
  d.d_key = j.at("d_key");
  d.d_aoi = j.at("d_aoi");
  d.spe_fourier = j.at("spe_fourier");
  d.spe_in = j.at("spe_in");
  d.spe_mid = j.at("spe_mid");
  d.d_dec = j.at("d_dec");
  return d;
}

inline json to_json(const VariantFlags& f) {
  return {{"label", variant_label(f)},
          {"aggregator", std::string(1, aggregator_letter(f.aggregator))},
          {"semantics", to_string(f.semantics)},
          {"structure_semantics", to_string(f.structure)},
          {"memory", f.memory}};
}

inline VariantFlags flags_from_json(const json& j) {
  VariantFlags f;
  f.aggregator = parse_aggregator(j.at("aggregator").get<std::string>());
  f.semantics = parse_temporal_semantics(j.at("semantics").get<std::string>());
  f.structure = parse_structural_semantics(j.at("structure_semantics").get<std::string>());
  f.memory = j.at("memory").get<bool>();
  validate(f);
  return f;
}

// The model-defining part of a training config; its hash ties checkpoints to
// the configuration that produced them.
inline json to_json(const TrainConfig& c) {
  return {{"dims", to_json(c.dims)},
          {"variant", to_json(c.flags)},
          {"layers", c.layers},
          {"neighbors", c.neighbors},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"negatives", c.negatives},
          {"seed", c.seed},
          {"aoi_capacity", c.aoi.capacity},
          {"aoi_max_age", c.aoi.max_age},
          {"message_capacity", c.message_capacity},
          {"message_time_scale", c.message_time_scale}};
}

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.dims = dims_from_json(j.at("dims"));
  c.flags = flags_from_json(j.at("variant"));
  c.layers = j.at("layers");
  c.neighbors = j.at("neighbors");
  c.batch_size = j.at("batch_size");
  c.epochs = j.at("epochs");
  c.learning_rate = j.at("learning_rate");
  c.negatives = j.at("negatives");
  c.seed = j.at("seed");
  c.aoi.capacity = j.at("aoi_capacity");
  c.aoi.max_age = j.at("aoi_max_age");
  c.message_capacity = j.at("message_capacity");
  c.message_time_scale = j.at("message_time_scale");
  c.validate();
  return c;
}

// Hash over the fields that shape the model (training schedule excluded).
inline std::string model_config_hash(const TrainConfig& c) {
  json j = to_json(c);
  j.erase("epochs");
  j.erase("learning_rate");
  j.erase("batch_size");
  j.erase("seed");
  j.erase("negatives");
  return hash_json(j);
}

// ------------------------------------------------------------- checkpoint

inline json params_to_json(const ParamStore& ps) {
  json out = json::object();
  for (const auto& [name, p] : ps) {
    out[name] = {{"rows", p.rows}, {"cols", p.cols}, {"values", p.value}};
  }
  return out;
}

inline json checkpoint_json(const Model& m, const std::string& semantic_source) {
  return {{"format", "stgn-checkpoint"},
          {"version", kCheckpointVersion},
          {"config_hash", model_config_hash(m.config())},
          {"variant", variant_label(m.config().flags)},
          {"semantic_width", m.semantic_width()},
          {"semantic_source", semantic_source},
          {"config", to_json(m.config())},
          {"params", params_to_json(m.params())}};
}

struct Checkpoint {
  TrainConfig config;
  std::size_t semantic_width = 0;
  std::string semantic_source;
  std::string config_hash;
  json params;
};

inline Checkpoint checkpoint_from_json(const json& j) {
  STGN_CHECK(j.value("format", "") == "stgn-checkpoint", "not a checkpoint file");
  STGN_CHECK(j.value("version", 0) == kCheckpointVersion, "unsupported checkpoint version");
  Checkpoint c;
  c.config = train_config_from_json(j.at("config"));
  c.semantic_width = j.at("semantic_width");
  c.semantic_source = j.value("semantic_source", "");
  c.config_hash = j.at("config_hash");
  STGN_CHECK(c.config_hash == model_config_hash(c.config),
             "checkpoint config hash does not match its config");
  c.params = j.at("params");
  return c;
}

// Loads tensor values into a model built from the same config.
inline void load_params(Model& m, const json& params) {
  std::size_t seen = 0;
  for (auto& [name, p] : m.params()) {
    STGN_CHECK(params.contains(name), "checkpoint lacks tensor " + name);
    const auto& t = params.at(name);
    STGN_CHECK(t.at("rows") == p.rows && t.at("cols") == p.cols,
               "checkpoint tensor shape mismatch for " + name);
    p.value = t.at("values").get<Vec>();
    STGN_CHECK(p.value.size() == p.rows * p.cols, "checkpoint tensor size mismatch for " + name);
    ++seen;
  }
  STGN_CHECK(seen == params.size(), "checkpoint holds tensors this model does not use");
}

inline json memory_json(const Engine& eng, const std::string& config_hash) {
  json nodes = json::array();
  for (const auto& [n, m] : eng.memory_snapshot()) {
    json last = std::isfinite(m.last_update) ? json(m.last_update) : json(nullptr);
    json consumed = m.last_consumed == kNoEvent ? json(nullptr) : json(m.last_consumed);
    nodes.push_back({{"role", n.role == Role::User ? "user" : "item"},
                     {"id", n.id},
                     {"last_update", last},
                     {"last_consumed", consumed},
                     {"mem", m.mem}});
  }
  return {{"format", "stgn-memory"},
          {"version", kMemoryVersion},
          {"config_hash", config_hash},
          {"nodes", nodes}};
}

inline std::vector<std::pair<NodeRef, MemoryState>> memory_from_json(const json& j) {
  STGN_CHECK(j.value("format", "") == "stgn-memory", "not a memory snapshot");
  STGN_CHECK(j.value("version", 0) == kMemoryVersion, "unsupported memory snapshot version");
  std::vector<std::pair<NodeRef, MemoryState>> out;
  for (const auto& n : j.at("nodes")) {
    NodeRef r{n.at("role") == "user" ? Role::User : Role::Item, n.at("id").get<NodeId>()};
    MemoryState m;
    m.mem = n.at("mem").get<Vec>();
    if (!n.at("last_update").is_null()) m.last_update = n.at("last_update");
    if (!n.at("last_consumed").is_null()) m.last_consumed = n.at("last_consumed");
    out.emplace_back(r, std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------- reports

inline json to_json(const EvalReport& r) {
  return {{"mode", to_string(r.mode)}, {"ap", r.ap}, {"auc", r.auc}, {"n_events", r.n_events}};
}

inline json to_json(const HitReport& r) {
  return {{"tier_hits", r.tier_hits},
          {"misses", r.misses},
          {"requests", r.requests},
          {"h", r.h},
          {"hits_per_hour", r.hits_per_hour},
          {"requests_per_hour", r.requests_per_hour},
          {"h_per_hour", r.h_per_hour}};
}

inline json to_json(const SimConfig& c) {
  return {{"delta_P", c.delta_P},
          {"delta_p", c.delta_p},
          {"p_thre", c.p_thre},
          {"tier_capacities", c.tier_capacities},
          {"candidate_window", c.candidate_window},
          {"hours", c.hours}};
}

}  // namespace stgn
