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
#include <string>
#include <string_view>
#include <vector>

#include "stgn/error.hpp"
#include "stgn/params.hpp"
#include "stgn/temporal.hpp"

namespace stgn {

enum class Aggregator { Last, Mean, Aoi };
enum class TemporalSemantics { Off, Sum, UsAttn };
enum class StructuralSemantics { Off, Sum, SumSpe };

struct VariantFlags {
  Aggregator aggregator = Aggregator::Last;
  TemporalSemantics semantics = TemporalSemantics::Off;
  StructuralSemantics structure = StructuralSemantics::Off;
  // Off runs the attention stack over zero memories (TGAT-style baseline).
  bool memory = true;

  bool operator==(const VariantFlags&) const = default;
  [[nodiscard]] bool uses_semantics() const {
    return semantics != TemporalSemantics::Off ||
           structure != StructuralSemantics::Off;
  }
};

inline char aggregator_letter(Aggregator a) {
  switch (a) {
    case Aggregator::Last: return 'L';
    case Aggregator::Mean: return 'M';
    case Aggregator::Aoi: return 'A';
  }
  return '?';
}

inline Aggregator parse_aggregator(std::string_view s) {
  if (s == "L" || s == "last") return Aggregator::Last;
  if (s == "M" || s == "mean") return Aggregator::Mean;
  if (s == "A" || s == "aoi") return Aggregator::Aoi;
  throw Error("stgn: unknown aggregator '" + std::string(s) + "'");
}

inline std::string to_string(TemporalSemantics s) {
  switch (s) {
    case TemporalSemantics::Off: return "off";
    case TemporalSemantics::Sum: return "sum";
    case TemporalSemantics::UsAttn: return "usattn";
  }
  return "?";
}

inline std::string to_string(StructuralSemantics s) {
  switch (s) {
    case StructuralSemantics::Off: return "off";
    case StructuralSemantics::Sum: return "sum";
    case StructuralSemantics::SumSpe: return "sum+spe";
  }
  return "?";
}

inline TemporalSemantics parse_temporal_semantics(std::string_view s) {
  if (s == "off") return TemporalSemantics::Off;
  if (s == "sum") return TemporalSemantics::Sum;
  if (s == "usattn") return TemporalSemantics::UsAttn;
  throw Error("stgn: unknown semantics mode '" + std::string(s) + "'");
}

inline StructuralSemantics parse_structural_semantics(std::string_view s) {
  if (s == "off") return StructuralSemantics::Off;
  if (s == "sum") return StructuralSemantics::Sum;
  if (s == "sum+spe") return StructuralSemantics::SumSpe;
  throw Error("stgn: unknown structure_semantics mode '" + std::string(s) + "'");
}

// Semantics in the structure requires semantics in the temporal path; the
// admissible combinations are exactly the TGN baselines and the six STGN
// families.
inline void validate(const VariantFlags& f) {
  if (!f.memory) {
    STGN_CHECK(!f.uses_semantics(), "memory-free baseline takes no semantics");
    return;
  }
  STGN_CHECK(!(f.semantics == TemporalSemantics::Off &&
               f.structure != StructuralSemantics::Off),
             "structural semantics without temporal semantics is not a "
             "model variant");
}

// Family label without the aggregator, e.g. "M2-STGN+U+SPE" or "TGN".
inline std::string family_label(const VariantFlags& f) {
  validate(f);
  if (!f.memory) return "TGAT";
  if (f.semantics == TemporalSemantics::Off) return "TGN";
  std::string s = f.structure == StructuralSemantics::Off ? "M1-STGN" : "M2-STGN";
  if (f.semantics == TemporalSemantics::UsAttn) s += "+U";
  if (f.structure == StructuralSemantics::SumSpe) s += "+SPE";
  return s;
}

// Full row label, e.g. "TGN-L", "M2-STGN-A+U+SPE".
inline std::string variant_label(const VariantFlags& f) {
  validate(f);
  if (!f.memory) return "TGAT";
  const std::string agg(1, aggregator_letter(f.aggregator));
  if (f.semantics == TemporalSemantics::Off) return "TGN-" + agg;
  std::string s = (f.structure == StructuralSemantics::Off ? "M1-STGN-" : "M2-STGN-") + agg;
  if (f.semantics == TemporalSemantics::UsAttn) s += "+U";
  if (f.structure == StructuralSemantics::SumSpe) s += "+SPE";
  return s;
}

inline VariantFlags parse_variant(std::string_view label) {
  const std::string s(label);
  VariantFlags f;
  if (s == "TGAT") {
    f.memory = false;
    return f;
  }
  std::string rest;
  if (s.rfind("TGN-", 0) == 0) {
    rest = s.substr(4);
  } else if (s.rfind("M1-STGN-", 0) == 0 || s.rfind("M2-STGN-", 0) == 0) {
    f.semantics = TemporalSemantics::Sum;
    f.structure = s[1] == '1' ? StructuralSemantics::Off : StructuralSemantics::Sum;
    rest = s.substr(8);
  } else {
    throw Error("stgn: unknown variant label '" + s + "'");
  }
  STGN_CHECK(!rest.empty(), "variant label lacks an aggregator: " + s);
  f.aggregator = parse_aggregator(rest.substr(0, 1));
  rest = rest.substr(1);
  if (rest.rfind("+U", 0) == 0) {
    STGN_CHECK(f.semantics != TemporalSemantics::Off, "TGN takes no +U: " + s);
    f.semantics = TemporalSemantics::UsAttn;
    rest = rest.substr(2);
  }
  if (rest == "+SPE") {
    STGN_CHECK(f.structure == StructuralSemantics::Sum, "+SPE needs M2: " + s);
    f.structure = StructuralSemantics::SumSpe;
    rest.clear();
  }
  STGN_CHECK(rest.empty(), "unparseable variant label '" + s + "'");
  return f;
}

struct LatticeRow {
  std::string family;
  VariantFlags flags;  // aggregator fixed to Last for STGN families
};

// The three TGN baselines followed by the six STGN families.
inline std::vector<LatticeRow> variant_lattice() {
  using TS = TemporalSemantics;
  using SS = StructuralSemantics;
  std::vector<LatticeRow> rows;
  for (auto a : {Aggregator::Last, Aggregator::Mean, Aggregator::Aoi}) {
    VariantFlags f{a, TS::Off, SS::Off, true};
    rows.push_back({variant_label(f), f});
  }
  const std::pair<TS, SS> families[] = {
      {TS::Sum, SS::Off},    {TS::Sum, SS::Sum},    {TS::UsAttn, SS::Off},
      {TS::UsAttn, SS::Sum}, {TS::Sum, SS::SumSpe}, {TS::UsAttn, SS::SumSpe}};
  for (auto [t, s] : families) {
    VariantFlags f{Aggregator::Last, t, s, true};
    rows.push_back({family_label(f), f});
  }
  return rows;
}

// Every aggregator x family combination (the 21 rows of the comparison table
// plus the three M2-STGN+SPE rows).
inline std::vector<VariantFlags> all_variants() {
  std::vector<VariantFlags> out;
  for (const auto& row : variant_lattice()) {
    if (row.flags.semantics == TemporalSemantics::Off) {
      out.push_back(row.flags);
      continue;
    }
    for (auto a : {Aggregator::Last, Aggregator::Mean, Aggregator::Aoi}) {
      auto f = row.flags;
      f.aggregator = a;
      out.push_back(f);
    }
  }
  return out;
}

struct ModelDims {
  std::size_t d_v = 16;      // raw node features
  std::size_t d_e = 1;       // edge features
  std::size_t d_m = 100;     // memory
  std::size_t d_T = 100;     // time encoding
  std::size_t d_h = 64;      // semantic hidden width
  std::size_t d_emb = 100;   // node embedding
  std::size_t d_f = 100;     // fused message
  std::size_t d_attn = 100;  // concatenated attention heads
  std::size_t n_heads = 2;
  std::size_t d_key = 64;    // user-specific attention key width
  std::size_t d_aoi = 100;   // AoI attention key width
  std::size_t spe_fourier = 256;  // D_h, must be even
  std::size_t spe_in = 64;        // D_m, output of the enhancement MLP
  std::size_t spe_mid = 64;       // hidden width of the output MLP
  std::size_t d_dec = 100;        // decoder hidden width

  [[nodiscard]] std::size_t d_msg() const { return 2 * d_v + d_e + 1; }
};

struct TrainConfig {
  ModelDims dims;
  VariantFlags flags;
  std::size_t layers = 1;
  std::size_t neighbors = 10;
  std::size_t batch_size = 200;
  std::size_t epochs = 20;
  Real learning_rate = 1e-4;
  std::size_t negatives = 1;
  std::uint64_t seed = 0;
  AoiConfig aoi;
  std::size_t message_capacity = 10;
  Real message_time_scale = 86400;  // seconds per unit in the message tau

  void validate() const {
    stgn::validate(flags);
    STGN_CHECK(layers == 1 || layers == 2, "layers must be 1 or 2");
    STGN_CHECK(batch_size > 0, "batch_size must be positive");
    STGN_CHECK(negatives >= 1, "negatives must be >= 1");
    STGN_CHECK(dims.spe_fourier % 2 == 0, "spe_fourier (D_h) must be even");
    STGN_CHECK(dims.n_heads > 0 && dims.d_attn % dims.n_heads == 0,
               "d_attn must be divisible by n_heads");
    STGN_CHECK(dims.d_T >= 1 && dims.d_m >= 1 && dims.d_emb >= 1,
               "widths must be positive");
    STGN_CHECK(message_time_scale > 0, "message_time_scale must be positive");
  }
};

}  // namespace stgn
