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

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "stgn/config.hpp"
#include "stgn/semantics.hpp"
#include "stgn/training.hpp"

namespace stgn {

// One line of the comparison table. Missing numbers render as "n/a".
struct ReportRow {
  std::string label;
  std::optional<EvalReport> transductive;
  std::optional<EvalReport> inductive;
  std::optional<double> training_seconds;
};

namespace detail {
inline std::string pct(const std::optional<EvalReport>& r, bool auc) {
  if (!r) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", 100 * (auc ? r->auc : r->ap));
  return buf;
}
}  // namespace detail

// Markdown table: AUC and AP (x100) per setting, then wall-clock training time.
inline std::string render_report_table(const std::vector<ReportRow>& rows) {
  std::string s =
      "| Model | AUC transductive | AUC inductive | AP transductive | AP inductive | "
      "Training time (s) |\n"
      "|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    std::string secs = "n/a";
    if (r.training_seconds && std::isfinite(*r.training_seconds)) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", *r.training_seconds);
      secs = buf;
    }
    s += "| " + r.label + " | " + detail::pct(r.transductive, true) + " | " +
         detail::pct(r.inductive, true) + " | " + detail::pct(r.transductive, false) + " | " +
         detail::pct(r.inductive, false) + " | " + secs + " |\n";
  }
  return s;
}

// Lattice key of a variant label: baselines keep their aggregator, STGN
// rows collapse to the family.
inline std::string lattice_key(const std::string& label) {
  const auto f = parse_variant(label);
  return f.memory && f.semantics == TemporalSemantics::Off ? variant_label(f) : family_label(f);
}

// One row per lattice variant, in lattice order, filled from `runs` by
// lattice key. Runs outside the lattice are appended after it.
inline std::vector<ReportRow> lattice_report(const std::vector<ReportRow>& runs) {
  std::vector<ReportRow> out;
  std::vector<bool> used(runs.size(), false);
  for (const auto& row : variant_lattice()) {
    ReportRow r;
    r.label = row.family;
    for (std::size_t k = 0; k < runs.size(); ++k) {
      if (!used[k] && lattice_key(runs[k].label) == row.family) {
        r = runs[k];
        if (runs[k].label != row.family) r.label = row.family + " (" + runs[k].label + ")";
        used[k] = true;
        break;
      }
    }
    out.push_back(std::move(r));
  }
  for (std::size_t k = 0; k < runs.size(); ++k) {
    if (!used[k]) out.push_back(runs[k]);
  }
  return out;
}

inline std::string similarity_csv(const SimilarityMatrix& m) {
  std::string s = "token";
  for (const auto& t : m.tokens) s += "," + t;
  s += "\n";
  char buf[40];
  for (std::size_t i = 0; i < m.tokens.size(); ++i) {
    s += m.tokens[i];
    for (Real v : m.values[i]) {
      std::snprintf(buf, sizeof buf, ",%.6f", v);
      s += buf;
    }
    s += "\n";
  }
  return s;
}

}  // namespace stgn
