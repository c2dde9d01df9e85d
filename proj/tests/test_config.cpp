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

#include <set>

#include "stgn/config.hpp"

using namespace stgn;
using TS = TemporalSemantics;
using SS = StructuralSemantics;

TEST(VariantLattice, NineRowsInPublishedOrder) {
  const auto rows = variant_lattice();
  const std::vector<std::string> want = {"TGN-L",         "TGN-M",     "TGN-A",
                                         "M1-STGN",       "M2-STGN",   "M1-STGN+U",
                                         "M2-STGN+U",     "M2-STGN+SPE", "M2-STGN+U+SPE"};
  ASSERT_EQ(rows.size(), want.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].family, want[i]);
}

TEST(VariantLattice, StgnRowsMatchAggregatorColumns) {
  // temporal aggregator / structural aggregator per family
  const std::vector<std::tuple<std::string, TS, SS>> table = {
      {"M1-STGN", TS::Sum, SS::Off},         {"M2-STGN", TS::Sum, SS::Sum},
      {"M1-STGN+U", TS::UsAttn, SS::Off},    {"M2-STGN+U", TS::UsAttn, SS::Sum},
      {"M2-STGN+SPE", TS::Sum, SS::SumSpe},  {"M2-STGN+U+SPE", TS::UsAttn, SS::SumSpe}};
  const auto rows = variant_lattice();
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& r = rows[3 + i];
    EXPECT_EQ(r.family, std::get<0>(table[i]));
    EXPECT_EQ(r.flags.semantics, std::get<1>(table[i]));
    EXPECT_EQ(r.flags.structure, std::get<2>(table[i]));
    EXPECT_TRUE(r.flags.memory);
  }
}

TEST(VariantLattice, FlagsToLabelIsOneToOne) {
  const auto all = all_variants();
  EXPECT_EQ(all.size(), 21u);
  std::set<std::string> labels;
  for (const auto& f : all) {
    const auto l = variant_label(f);
    EXPECT_TRUE(labels.insert(l).second) << l;
    EXPECT_EQ(parse_variant(l), f) << l;
  }
}

TEST(VariantLattice, ComparisonTableLabelsParse) {
  for (const char* l : {"TGN-L", "TGN-M", "TGN-A", "M1-STGN-L", "M1-STGN-M", "M1-STGN-A",
                        "M2-STGN-L", "M2-STGN-M", "M2-STGN-A", "M1-STGN-L+U", "M1-STGN-M+U",
                        "M1-STGN-A+U", "M2-STGN-L+U", "M2-STGN-M+U", "M2-STGN-A+U",
                        "M2-STGN-L+U+SPE", "M2-STGN-M+U+SPE", "M2-STGN-A+U+SPE",
                        "M2-STGN-L+SPE", "M2-STGN-M+SPE", "M2-STGN-A+SPE"}) {
    EXPECT_EQ(variant_label(parse_variant(l)), l);
  }
  EXPECT_EQ(variant_label(parse_variant("TGAT")), "TGAT");
  EXPECT_FALSE(parse_variant("TGAT").memory);
}

TEST(VariantLattice, AllSemanticFlagsOffIsPlainTgn) {
  VariantFlags f;
  f.aggregator = Aggregator::Mean;
  EXPECT_EQ(variant_label(f), "TGN-M");
  EXPECT_FALSE(f.uses_semantics());
}

TEST(VariantLattice, RejectsInadmissibleCombinations) {
  EXPECT_THROW(parse_variant("TGN-L+U"), Error);
  EXPECT_THROW(parse_variant("M1-STGN-L+SPE"), Error);
  EXPECT_THROW(parse_variant("M2-STGN-X"), Error);
  EXPECT_THROW(parse_variant("STGN"), Error);
  VariantFlags f;
  f.structure = SS::Sum;
  EXPECT_THROW(validate(f), Error);
  f = {};
  f.memory = false;
  f.semantics = TS::Sum;
  EXPECT_THROW(validate(f), Error);
}

TEST(TrainConfigCheck, RejectsBadValues) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.layers = 3;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.dims.spe_fourier = 7;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.dims.d_attn = 5;
  EXPECT_THROW(c.validate(), Error);
}
