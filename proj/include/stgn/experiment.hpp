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
#include <string>
#include <vector>

#include "stgn/config.hpp"
#include "stgn/graph_store.hpp"
#include "stgn/model.hpp"
#include "stgn/semantics.hpp"
#include "stgn/synthetic.hpp"
#include "stgn/training.hpp"

namespace stgn {

// Desk-scale widths for runs on the planted trace.
inline TrainConfig planted_config(const VariantFlags& flags, std::uint64_t seed,
                                  std::size_t epochs = 5) {
  TrainConfig c;
  c.flags = flags;
  c.seed = seed;
  auto& d = c.dims;
  d.d_m = 32;
  d.d_T = 16;
  d.d_h = 16;
  d.d_emb = 32;
  d.d_f = 32;
  d.d_attn = 32;
  d.d_dec = 32;
  d.d_aoi = 32;
  d.d_key = 16;
  c.learning_rate = 1e-3;
  c.epochs = epochs;
  c.batch_size = 100;
  return c;
}

struct PlantedRun {
  std::string label;
  std::uint64_t seed = 0;
  EvalReport inductive;
  EvalReport transductive;
  double seconds = 0;
};

// Ingests the planted trace for `seed`, trains each labelled variant on the
// first 60% and scores the last 20%.
inline std::vector<PlantedRun> run_planted(const std::vector<std::string>& labels,
                                           std::uint64_t seed, std::size_t epochs = 5) {
  PlantedTraceOptions po;
  po.seed = seed;
  IngestOptions io;
  io.seed = seed;
  auto ing = ingest_trace(planted_trace(po), io);
  const auto split = chronological_split(ing.store);
  const auto table = GenreEmbeddingTable::one_hot(ing.store.catalog());
  const auto sets = encode_genres(ing.store.catalog(), table);
  std::vector<PlantedRun> out;
  for (const auto& lab : labels) {
    const auto t0 = std::chrono::steady_clock::now();
    Model m(planted_config(parse_variant(lab), seed, epochs), table.width());
    Engine e(m, ing.store, &sets);
    auto tr = train(m, e, split.train);
    STGN_CHECK(!tr.aborted, "planted run diverged: " + tr.message);
    EvalOptions eo;
    eo.seed = seed;
    eo.batch_size = 100;
    PlantedRun r;
    r.label = lab;
    r.seed = seed;
    r.inductive = evaluate(&e, ing.store, split, split.test, EvalMode::Inductive, eo);
    r.transductive = evaluate(&e, ing.store, split, split.test, EvalMode::Transductive, eo);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

inline Real median(std::vector<Real> xs) {
  STGN_CHECK(!xs.empty(), "median of nothing");
  std::sort(xs.begin(), xs.end());
  const auto n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2;
}

}  // namespace stgn
