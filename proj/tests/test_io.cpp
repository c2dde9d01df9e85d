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

#include "stgn/io.hpp"
#include "stgn/synthetic.hpp"

using namespace stgn;

namespace {

EventStore planted_store() {
  PlantedTraceOptions po;
  po.users = 20;
  po.items = 10;
  po.late_users = 4;
  po.events = 300;
  IngestOptions io;
  io.d_v = 4;
  return ingest_trace(planted_trace(po), io).store;
}

}  // namespace

TEST(Io, StoreRoundTrip) {
  auto s = planted_store();
  const auto j = to_json(s);
  auto back = store_from_json(json::parse(j.dump()));
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_EQ(back.size(), s.size());
  EXPECT_EQ(back.catalog().item_genres, s.catalog().item_genres);
  EXPECT_THROW(store_from_json(json{{"format", "other"}}), Error);
}

TEST(Io, SplitRoundTrip) {
  auto s = planted_store();
  auto sp = chronological_split(s);
  auto back = split_from_json(json::parse(to_json(sp).dump()));
  EXPECT_EQ(back.train, sp.train);
  EXPECT_EQ(back.test, sp.test);
  EXPECT_EQ(back.new_users, sp.new_users);
  EXPECT_EQ(back.new_items, sp.new_items);
}

TEST(Io, ConfigRoundTripAndHash) {
  auto c = tiny_config(parse_variant("M2-STGN-A+U+SPE"), 2);
  c.seed = 9;
  c.learning_rate = 3e-4;
  auto back = train_config_from_json(json::parse(to_json(c).dump()));
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
  EXPECT_EQ(model_config_hash(back), model_config_hash(c));
  // schedule fields do not change the hash; shape fields do
  back.epochs = 99;
  back.seed = 1;
  EXPECT_EQ(model_config_hash(back), model_config_hash(c));
  back.dims.d_m = 7;
  EXPECT_NE(model_config_hash(back), model_config_hash(c));
}

TEST(Io, CheckpointRoundTrip) {
  auto c = tiny_config(parse_variant("M1-STGN-L+U"));
  c.seed = 4;
  Model m(c, 3);
  const auto j = json::parse(checkpoint_json(m, "one-hot").dump());
  auto ck = checkpoint_from_json(j);
  EXPECT_EQ(ck.semantic_width, 3u);
  EXPECT_EQ(ck.semantic_source, "one-hot");
  Model other(ck.config, ck.semantic_width);
  other.init(12345);
  load_params(other, ck.params);
  EXPECT_EQ(params_to_json(other.params()).dump(), params_to_json(m.params()).dump());
}

TEST(Io, CheckpointMismatchRefused) {
  Model m(tiny_config(parse_variant("M1-STGN-L")), 3);
  auto j = checkpoint_json(m, "one-hot");
  auto tampered = j;
  tampered["config"]["dims"]["d_m"] = 5;
  EXPECT_THROW(checkpoint_from_json(tampered), Error);
  // params of another variant do not load
  Model wider(tiny_config(parse_variant("M2-STGN-L")), 3);
  EXPECT_THROW(load_params(wider, j["params"]), Error);
  Model tgn(tiny_config(parse_variant("TGN-L")), 3);
  EXPECT_THROW(load_params(tgn, j["params"]), Error);
}

TEST(Io, MemorySnapshotRoundTrip) {
  auto s = planted_store();
  auto c = tiny_config(parse_variant("TGN-M"));
  c.message_time_scale = 3600;
  Model m(c, 0);
  Engine e(m, s, nullptr);
  e.replay({0, 150}, 50);
  const auto j = json::parse(memory_json(e, model_config_hash(c)).dump());
  Engine fresh(m, s, nullptr);
  fresh.restore_memory(memory_from_json(j));
  EXPECT_EQ(memory_json(fresh, "x")["nodes"].dump(), memory_json(e, "x")["nodes"].dump());
}

TEST(Io, IngestReportCounts) {
  std::vector<RawRecord> rs;
  for (int k = 0; k < 6; ++k) rs.push_back({Timestamp(k), "u", "i", k == 0 ? 10.0 : 600.0, {"g"}});
  auto r = to_json(ingest_trace(rs, IngestOptions{}).report);
  EXPECT_EQ(r["kept_events"], 5);
  EXPECT_EQ(r["dropped_short_duration"], 1);
  EXPECT_EQ(r["records_total"], 6);
}

TEST(Io, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(hex64(0xabcull), "0000000000000abc");
}
