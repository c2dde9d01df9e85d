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

// Acceptance runner: one PASS/FAIL line per criterion. Exits nonzero when
// any of criteria 1-9 fails; criterion 10 is informational.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "stgn/stgn.hpp"

using namespace stgn;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

Vec normal_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<Real> d(0, 1);
  Vec v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

Vec uniform_vec(std::size_t n, std::mt19937_64& rng, Real lo, Real hi) {
  std::uniform_real_distribution<Real> d(lo, hi);
  Vec v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

Real sum(const Vec& v) { return std::accumulate(v.begin(), v.end(), Real(0)); }

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Outcome gradients() {
  const auto t0 = Clock::now();
  Real worst = 0;
  std::string worst_label;
  std::size_t n = 0;
  auto variants = all_variants();
  variants.push_back(parse_variant("TGAT"));
  for (const auto& f : variants) {
    for (std::size_t layers : {1u, 2u}) {
      auto r = grad_check(tiny_config(f, layers));
      ++n;
      if (r.max_rel_error > worst) {
        worst = r.max_rel_error;
        worst_label = variant_label(f) + " l=" + std::to_string(layers);
      }
    }
  }
  const double secs = since(t0);
  return {worst <= 1e-4 && secs < 60,
          std::to_string(n) + " configurations, max rel error " + fmt("%.2e", worst) + " (" +
              worst_label + "), " + fmt("%.1f s", secs)};
}

Outcome spe_kernel() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  const std::size_t d = 8, d_h = 2048;
  Tape t;
  auto w = t.constant(normal_vec(d_h / 2 * d, rng), d_h / 2, d);
  Real dev = 0, norm_err = 0;
  for (int pair = 0; pair < 100; ++pair) {
    const auto a = uniform_vec(d, rng, -1, 1), b = uniform_vec(d, rng, -1, 1);
    auto ra = fourier_features(t.constant(a), w).value();
    auto rb = fourier_features(t.constant(b), w).value();
    Real dist2 = 0;
    for (std::size_t i = 0; i < d; ++i) dist2 += (a[i] - b[i]) * (a[i] - b[i]);
    dev += std::abs(std::inner_product(ra.begin(), ra.end(), rb.begin(), 0.0) -
                    0.5 * std::exp(-dist2 / 2));
    norm_err = std::max(norm_err, std::abs(std::inner_product(ra.begin(), ra.end(), ra.begin(), 0.0) - 0.5));
  }
  dev /= 100;
  const double secs = since(t0);
  return {dev <= 0.05 && norm_err <= 1e-6 && secs < 5,
          fmt("mean |kernel deviation| %.4f, max | |R|^2 - 0.5 | %.1e, %.2f s", dev, norm_err,
              secs)};
}

Outcome time_identities() {
  Real worst_norm = 0;
  for (std::size_t d : {1u, 4u, 100u}) {
    std::mt19937_64 rng(d);
    Tape t;
    auto phi = encode_time(0.0, t.constant(uniform_vec(d, rng, 0, 5))).value();
    worst_norm = std::max(worst_norm, std::abs(std::inner_product(phi.begin(), phi.end(), phi.begin(), 0.0) - 1));
  }
  Tape t;
  const Real hand = encode_time(1.0, t.constant({std::acos(Real(-1))})).value()[0];
  const Real hand_err = std::abs(hand + 1);
  return {worst_norm <= 1e-12 && hand_err <= 1e-12,
          fmt("max | |phi(0)|^2 - 1 | %.1e, |phi_pi(1) + 1| %.1e", worst_norm, hand_err)};
}

Outcome attention() {
  std::mt19937_64 rng(4);
  Real worst = 0;
  std::size_t softmaxes = 0;
  auto check = [&](const Vec& w) {
    worst = std::max(worst, std::abs(sum(w) - 1));
    ++softmaxes;
  };
  for (int trial = 0; trial < 1000; ++trial) {
    // user-specific attention over 1..8 genres
    {
      Tape t;
      const std::size_t n = 1 + rng() % 8, d_s = 1 + rng() % 6, d_k = 1 + rng() % 6,
                        d_e = 1 + rng() % 6, d_out = 1 + rng() % 6;
      std::vector<Var> g;
      for (std::size_t k = 0; k < n; ++k) g.push_back(t.constant(normal_vec(d_s, rng)));
      auto r = aggregate_usattn(g, t.constant(normal_vec(d_e, rng)),
                                t.constant(normal_vec(d_k * d_e, rng), d_k, d_e),
                                t.constant(normal_vec(d_k * d_s, rng), d_k, d_s),
                                t.constant(normal_vec(d_out * d_s, rng), d_out, d_s));
      check(r.alphas.value());
    }
    // age-of-information aggregation over 1..12 messages
    {
      Tape t;
      const std::size_t n = 1 + rng() % 12, d_msg = 1 + rng() % 6, d_m = 1 + rng() % 6,
                        d_a = 1 + rng() % 6;
      std::vector<TimedVar<Real>> msgs;
      for (std::size_t k = 0; k < n; ++k) {
        msgs.push_back({Timestamp(rng() % 1000), t.constant(normal_vec(d_msg, rng))});
      }
      AoiConfig cfg{1 + rng() % 10, 5000};
      auto r = aggregate_aoi(msgs, 1000.0, t.constant(normal_vec(d_m, rng)),
                             t.constant(normal_vec(d_a * d_m, rng), d_a, d_m),
                             t.constant(normal_vec(d_a * d_msg, rng), d_a, d_msg),
                             t.constant(normal_vec(d_m * d_msg, rng), d_m, d_msg), cfg);
      if (!r) return Outcome{false, "AoI returned no update with fresh messages"};
      check(r->weights.value());
    }
    // temporal graph attention, 1..3 heads over 1..10 neighbors
    {
      const std::size_t heads = 1 + rng() % 3, d_in = 1 + rng() % 6,
                        d_attn = heads * (1 + rng() % 3), d_out = 1 + rng() % 6;
      ParamStore ps;
      add_tgat_layer_params(ps, 0, heads, d_in, d_attn, d_out);
      for (auto& [_, p] : ps) p.value = normal_vec(p.size(), rng);
      Tape t;
      auto lv = TgatLayerVars<Real>::bind(t, ps, 0, heads);
      std::vector<Var> nb;
      for (std::size_t k = 0, n = 1 + rng() % 10; k < n; ++k) {
        nb.push_back(t.constant(normal_vec(d_in, rng)));
      }
      auto r = tgat_layer(t.constant(normal_vec(d_in, rng)), nb, lv);
      for (const auto& w : r.head_weights) check(w.value());
    }
  }
  return {worst <= 1e-6, std::to_string(softmaxes) + " softmaxes over 3000 configurations, max |sum - 1| " +
                             fmt("%.1e", worst)};
}

Outcome metric_oracles() {
  std::mt19937_64 rng(77);
  std::size_t bad = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 2 + rng() % 19;
    std::vector<Real> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = Real(rng() % 5) / 4;
      y[i] = int(rng() % 2);
    }
    y[0] = 1;
    y[1] = 0;
    if (compute_ap(s, y) != testing::brute_ap(s, y)) ++bad;
    if (compute_auc(s, y) != testing::brute_auc(s, y)) ++bad;
  }
  return {bad == 0, "200 instances with ties, " + std::to_string(bad) + " mismatches"};
}

Outcome caching_oracle() {
  std::mt19937_64 rng(1234);
  SimConfig cfg;
  cfg.hours = 4;
  cfg.delta_P = 100;
  cfg.delta_p = 10;
  std::size_t bad_hits = 0, bad_accum = 0;
  for (int trace = 0; trace < 50; ++trace) {
    const std::size_t n_items = 5 + rng() % 40;
    std::vector<CacheState> pl;
    std::vector<NodeId> cands(n_items);
    std::iota(cands.begin(), cands.end(), 0);
    for (std::size_t h = 0; h < cfg.hours; ++h) {
      std::map<NodeId, std::vector<std::size_t>> counts;
      std::map<NodeId, std::size_t> direct;
      for (NodeId k = 0; k < n_items; ++k) {
        for (std::size_t s = 0; s < slot_count(cfg); ++s) {
          std::vector<Real> prefs(rng() % 6);
          for (auto& p : prefs) p = Real(rng() % 1000) / 1000;
          counts[k].push_back(predict_popularity_slot(prefs, 0.7));
          for (Real p : prefs) direct[k] += p > 0.7;
        }
      }
      auto table = accumulate_popularity(counts);
      for (NodeId k = 0; k < n_items; ++k) bad_accum += table.at(k) != direct[k];
      Recency rec;
      for (NodeId k = 0; k < n_items; ++k) rec[k] = Timestamp(rng() % 50);
      pl.push_back(place_top_k(rank_candidates(table, rec, cands), cfg));
    }
    std::vector<Request> reqs(1 + rng() % 100);
    Timestamp t = 0;
    for (auto& q : reqs) {
      t += Timestamp(rng() % 8);
      q = {t, NodeId(rng() % n_items)};
    }
    auto r = simulate(reqs, pl, 0, cfg);
    auto [hits, n] = testing::recount_hits(reqs, pl, 0, cfg);
    const Real h = n ? Real(hits) / Real(n) : 0.0;
    bad_hits += r.hits() != hits || r.requests != n || r.h != h;
  }
  return {bad_hits == 0 && bad_accum == 0,
          "50 traces, " + std::to_string(bad_hits) + " hit-rate mismatches, " +
              std::to_string(bad_accum) + " accumulation mismatches"};
}

Outcome tie_degeneracy() {
  std::mt19937_64 rng(31);
  std::size_t bad = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    PopularityTable table;
    Recency rec;
    std::vector<NodeId> cands;
    for (NodeId k = 0; k < n; ++k) {
      table.total[k] = 0;
      if (rng() % 4) rec[k] = Timestamp(rng() % 20);  // some never requested
      cands.push_back(k);
    }
    std::shuffle(cands.begin(), cands.end(), rng);
    // recency order: most recent first, never-requested last, id within ties
    auto want = cands;
    auto last = [&](NodeId k) { return rec.count(k) ? rec.at(k) : -1e300; };
    std::sort(want.begin(), want.end(), [&](NodeId a, NodeId b) {
      return last(a) != last(b) ? last(a) > last(b) : a < b;
    });
    bad += rank_candidates(table, rec, cands) != want;
  }
  return {bad == 0, "500 candidate sets with all-zero popularity, " + std::to_string(bad) +
                        " orders differing from recency"};
}

Outcome semantic_benefit() {
  const std::vector<std::string> labels{"TGN-L", "M1-STGN-L", "M2-STGN-L"};
  std::vector<std::vector<Real>> ap(labels.size());
  double slowest = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto t0 = Clock::now();
    auto runs = run_planted(labels, seed);
    slowest = std::max(slowest, since(t0));
    for (std::size_t k = 0; k < labels.size(); ++k) ap[k].push_back(runs[k].inductive.ap);
  }
  const Real tgn = median(ap[0]), m1 = median(ap[1]), m2 = median(ap[2]);
  return {m1 >= tgn + 0.02 && m2 >= m1 && slowest < 300,
          fmt("median inductive AP TGN-L %.4f, M1-STGN-L %.4f, M2-STGN-L %.4f", tgn, m1, m2) +
              fmt(", slowest seed %.1f s", slowest)};
}

Outcome lattice() {
  const std::vector<std::string> want{"TGN-L",         "TGN-M",         "TGN-A",
                                      "M1-STGN",       "M2-STGN",       "M1-STGN+U",
                                      "M2-STGN+U",     "M2-STGN+SPE",   "M2-STGN+U+SPE"};
  const auto rows = variant_lattice();
  bool ok = rows.size() == want.size();
  std::set<std::string> flags_seen;
  for (std::size_t k = 0; ok && k < rows.size(); ++k) {
    ok = rows[k].family == want[k] && lattice_key(variant_label(rows[k].flags)) == want[k];
    flags_seen.insert(variant_label(rows[k].flags));
  }
  ok = ok && flags_seen.size() == want.size();
  // the report renders one body line per lattice row
  const auto table = render_report_table(lattice_report({}));
  const auto lines = std::count(table.begin(), table.end(), '\n');
  ok = ok && lines == static_cast<long>(want.size()) + 2;
  return {ok, std::to_string(rows.size()) + " lattice rows, report table with " +
                  std::to_string(lines - 2) + " rows"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", gradients},
      {2, "SPE kernel law", spe_kernel},
      {3, "time-encoding identities", time_identities},
      {4, "attention normalization", attention},
      {5, "metric oracles", metric_oracles},
      {6, "caching oracle", caching_oracle},
      {7, "tie degeneracy", tie_degeneracy},
      {8, "semantic benefit on planted trace", semantic_benefit},
      {9, "variant lattice", lattice},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf(
      "INFO 10 full-scale absolute scores: non-gating; Netflix-scale runs are supported through "
      "the stgn tool but not reproduced here\n");
  return failed == 0 ? 0 : 1;
}
