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

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "stgn/metrics.hpp"
#include "stgn/model.hpp"

namespace stgn {

// p = F(E_u, E_i) from the decoder tensors in `ps`.
inline Real predict_preference(const Vec& e_u, const Vec& e_i, const ParamStore& ps) {
  STGN_CHECK(e_u.size() == e_i.size(), "predict_preference: width mismatch");
  Tape tape;
  auto c = [&](const char* n) {
    const auto& p = ps.at(n);
    return tape.constant(p.value, p.rows, p.cols);
  };
  auto z = decoder_logit(tape.constant(e_u), tape.constant(e_i), c("dec.W1"), c("dec.b1"),
                         c("dec.W2"), c("dec.b2"));
  return open_unit(ad::sigmoid_value(z.scalar()));
}

inline Real bce_loss(int label, Real p) {
  STGN_CHECK(p > 0 && p < 1, "bce_loss: probability outside (0, 1)");
  STGN_CHECK(label == 0 || label == 1, "bce_loss: label must be 0 or 1");
  return label == 1 ? -std::log(p) : -std::log1p(-p);
}

// Uniform draw; a hit on the positive is redrawn once and then accepted.
inline NodeId sample_negative(const std::vector<NodeId>& items, NodeId positive,
                              std::mt19937_64& rng) {
  STGN_CHECK(items.size() >= 2, "sample_negative: need at least two items");
  std::uniform_int_distribution<std::size_t> pick(0, items.size() - 1);
  NodeId out = items[pick(rng)];
  if (out == positive) out = items[pick(rng)];
  return out;
}

inline std::vector<NodeId> all_items(const EventStore& store) {
  std::vector<NodeId> out(store.num_items());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = NodeId(k);
  return out;
}

struct EpochRecord {
  std::size_t epoch = 0;
  Real loss = 0;       // summed over the epoch
  Real mean_loss = 0;  // per scored pair
  std::size_t batches = 0;
  double seconds = 0;
};

struct TrainResult {
  std::vector<EpochRecord> curve;
  bool aborted = false;
  std::string message;
};

namespace detail {

inline std::map<std::string, Vec> snapshot(const ParamStore& ps) {
  std::map<std::string, Vec> out;
  for (const auto& [n, p] : ps) out.emplace(n, p.value);
  return out;
}

inline void restore(ParamStore& ps, const std::map<std::string, Vec>& snap) {
  for (auto& [n, p] : ps) p.value = snap.at(n);
}

}  // namespace detail

// Batch loop over `range`, repeated for cfg.epochs. Each batch is scored
// against memories as of its start, optimized, and only then folded into the
// running state. Memories restart from zero each epoch.
inline TrainResult train(Model& model, Engine& engine, EventRange range,
                         const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  const auto& cfg = model.config();
  STGN_CHECK(range.size() > 0, "train: empty event range");
  const auto& store = engine.store();
  const auto items = all_items(store);
  std::mt19937_64 rng(cfg.seed ^ 0x5eedf00dULL);
  Adam adam(cfg.learning_rate);
  TrainResult result;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    engine.reset();
    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t pairs = 0;
    for (std::size_t b = range.begin; b < range.end; b += cfg.batch_size) {
      const EventRange r{b, std::min(range.end, b + cfg.batch_size)};
      std::vector<NodeId> negs;
      for (std::size_t i = r.begin; i < r.end; ++i) {
        for (std::size_t k = 0; k < cfg.negatives; ++k) {
          negs.push_back(sample_negative(items, store.event(i).item_id, rng));
        }
      }
      const auto before = detail::snapshot(model.params());
      Tape tape;
      auto g = engine.forward(tape, r, &negs);
      const Real loss = g.loss.scalar();
      if (!std::isfinite(loss)) {
        result.aborted = true;
        result.message = "non-finite loss at epoch " + std::to_string(epoch) +
                         ", batch starting at event " + std::to_string(b);
        return result;
      }
      model.params().zero_grad();
      tape.backward(g.loss);
      adam.step(model.params());
      if (!model.params().all_finite()) {
        detail::restore(model.params(), before);
        result.aborted = true;
        result.message = "non-finite parameters after step at epoch " +
                         std::to_string(epoch);
        return result;
      }
      engine.commit(g);
      rec.loss += loss;
      pairs += r.size() * (1 + cfg.negatives);
      ++rec.batches;
    }
    rec.mean_loss = rec.loss / static_cast<Real>(pairs);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.curve.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

// ---------------------------------------------------------------- evaluation

enum class EvalMode { Transductive, Inductive };
enum class ScorerKind { Model, Oracle, Constant };

inline std::string to_string(EvalMode m) {
  return m == EvalMode::Transductive ? "transductive" : "inductive";
}
inline EvalMode parse_eval_mode(const std::string& s) {
  if (s == "transductive") return EvalMode::Transductive;
  if (s == "inductive") return EvalMode::Inductive;
  throw Error("stgn: unknown eval mode '" + s + "'");
}
inline ScorerKind parse_scorer(const std::string& s) {
  if (s == "model") return ScorerKind::Model;
  if (s == "oracle") return ScorerKind::Oracle;
  if (s == "constant") return ScorerKind::Constant;
  throw Error("stgn: unknown scorer '" + s + "'");
}

struct EvalReport {
  Real ap = 0;
  Real auc = 0;
  EvalMode mode = EvalMode::Transductive;
  std::size_t n_events = 0;
  double runtime_seconds = 0;
};

struct EvalOptions {
  ScorerKind scorer = ScorerKind::Model;
  std::uint64_t seed = 0;
  std::size_t batch_size = 200;
};

// Scores for one event: positive pair and one sampled negative.
struct ScoredEvent {
  std::size_t event_index = 0;
  Real pos = 0;
  Real neg = 0;
  bool touches_new = false;
};

// Replays [0, range.begin) into fresh state, then walks `range` batch by
// batch: score the positive and one negative per event, then fold the batch
// into memory. Parameters are never touched.
inline std::vector<ScoredEvent> score_range(Engine* engine, const EventStore& store,
                                            const ChronoSplit& split, EventRange range,
                                            const EvalOptions& opt) {
  STGN_CHECK(range.end <= store.size() && range.begin < range.end,
             "evaluate: bad event range");
  STGN_CHECK(opt.batch_size > 0, "evaluate: batch_size must be positive");
  const auto items = all_items(store);
  std::mt19937_64 rng(opt.seed ^ 0xe1a1ULL);
  std::vector<ScoredEvent> out;
  if (opt.scorer == ScorerKind::Model) {
    STGN_CHECK(engine != nullptr, "evaluate: model scorer needs an engine");
    engine->reset();
    engine->replay({0, range.begin}, opt.batch_size);
  }
  for (std::size_t b = range.begin; b < range.end; b += opt.batch_size) {
    const EventRange r{b, std::min(range.end, b + opt.batch_size)};
    std::vector<NodeId> negs;
    for (std::size_t i = r.begin; i < r.end; ++i) {
      negs.push_back(sample_negative(items, store.event(i).item_id, rng));
    }
    std::vector<Real> pos(r.size()), neg(r.size());
    if (opt.scorer == ScorerKind::Model) {
      Tape tape;
      auto g = engine->forward(tape, r, &negs);
      for (std::size_t k = 0; k < r.size(); ++k) {
        pos[k] = open_unit(ad::sigmoid_value(g.pos_logits[k].scalar()));
        neg[k] = open_unit(ad::sigmoid_value(g.neg_logits[k].scalar()));
      }
      engine->commit(g);
    } else {
      const bool oracle = opt.scorer == ScorerKind::Oracle;
      std::fill(pos.begin(), pos.end(), oracle ? 1.0 : 0.5);
      std::fill(neg.begin(), neg.end(), oracle ? 0.0 : 0.5);
    }
    for (std::size_t k = 0; k < r.size(); ++k) {
      const auto& e = store.event(r.begin + k);
      out.push_back({r.begin + k, pos[k], neg[k],
                     split.is_new(user_node(e.user_id)) || split.is_new(item_node(e.item_id))});
    }
  }
  return out;
}

inline EvalReport summarize(const std::vector<ScoredEvent>& scored, EvalMode mode) {
  std::vector<Real> scores;
  std::vector<int> labels;
  std::size_t n = 0;
  for (const auto& s : scored) {
    if (mode == EvalMode::Inductive && !s.touches_new) continue;
    ++n;
    scores.push_back(s.pos);
    labels.push_back(1);
    scores.push_back(s.neg);
    labels.push_back(0);
  }
  STGN_CHECK(n > 0, "evaluate: no events touch new nodes in inductive mode");
  EvalReport r;
  r.mode = mode;
  r.n_events = n;
  r.ap = compute_ap(scores, labels);
  r.auc = compute_auc(scores, labels);
  return r;
}

inline EvalReport evaluate(Engine* engine, const EventStore& store, const ChronoSplit& split,
                           EventRange range, EvalMode mode, const EvalOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  auto r = summarize(score_range(engine, store, split, range, opt), mode);
  r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// ------------------------------------------------------------ gradient check

struct GradCheckOptions {
  Real epsilon = 1e-5;
  std::string prefix;  // only tensors whose name starts with this
  std::uint64_t seed = 1;
  std::size_t max_retries = 3;
};

struct GradCheckResult {
  Real max_rel_error = 0;
  std::string worst;  // "name[index]"
  Real worst_analytic = 0;
  Real worst_numeric = 0;
  std::size_t entries = 0;
  std::size_t retries = 0;
};

// Widths small enough for an exhaustive finite-difference sweep.
inline TrainConfig tiny_config(VariantFlags flags, std::size_t layers = 1) {
  TrainConfig c;
  c.flags = flags;
  c.layers = layers;
  auto& d = c.dims;
  d.d_v = 4;
  d.d_e = 1;
  d.d_m = 6;
  d.d_T = 4;
  d.d_h = 5;
  d.d_emb = 6;
  d.d_f = 6;
  d.d_attn = 6;
  d.n_heads = 2;
  d.d_key = 4;
  d.d_aoi = 4;
  d.spe_fourier = 8;
  d.spe_in = 4;
  d.spe_mid = 5;
  d.d_dec = 6;
  c.neighbors = 3;
  c.message_time_scale = 1;
  return c;
}

namespace detail {

struct TinyTrace {
  EventStore store;
  std::vector<SemanticSet> semantics;
};

// Four events over two users and three multi-genre items, so that the last
// batch sees stored memories, pending messages and history neighbors.
inline TinyTrace tiny_trace(std::size_t d_v, std::uint64_t seed) {
  NodeCatalog cat;
  cat.user_names = {"u0", "u1"};
  cat.item_names = {"i0", "i1", "i2"};
  cat.item_genres = {{"a", "b"}, {"b", "c"}, {"a", "c"}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> dist(-1, 1);
  auto feat = [&] {
    Vec v(d_v);
    for (auto& x : v) x = dist(rng);
    return v;
  };
  for (int i = 0; i < 2; ++i) cat.user_raw_features.push_back(feat());
  for (int i = 0; i < 3; ++i) cat.item_raw_features.push_back(feat());
  const std::pair<NodeId, NodeId> pairs[] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}};
  const Timestamp times[] = {1.0, 2.3, 3.1, 4.7};
  std::vector<InteractionEvent> ev;
  for (std::size_t i = 0; i < 4; ++i) {
    ev.push_back({i, pairs[i].first, pairs[i].second, times[i], {1.0}, 600});
  }
  auto table = GenreEmbeddingTable::one_hot(cat);
  TinyTrace t{EventStore(std::move(ev), cat), {}};
  t.semantics = encode_genres(t.store.catalog(), table);
  return t;
}

inline bool tiny_enough(const TrainConfig& c) {
  const auto& d = c.dims;
  for (auto w : {d.d_v, d.d_e, d.d_m, d.d_T, d.d_h, d.d_emb, d.d_f, d.d_attn, d.d_key,
                 d.d_aoi, d.spe_fourier, d.spe_in, d.spe_mid, d.d_dec}) {
    if (w > 8) return false;
  }
  return true;
}

}  // namespace detail

// Analytic gradients of the summed BCE on the last two events of a tiny
// trace against central finite differences, for every trainable entry.
// Crossing a piecewise-linear kink during a probe re-draws the model and
// retries.
inline GradCheckResult grad_check(const TrainConfig& cfg, const GradCheckOptions& opt = {}) {
  STGN_CHECK(detail::tiny_enough(cfg), "grad_check: all widths must be <= 8");
  const auto trace = detail::tiny_trace(cfg.dims.d_v, opt.seed);
  const std::vector<NodeId> negs = {0, 0};
  for (std::size_t attempt = 0; attempt <= opt.max_retries; ++attempt) {
    auto c = cfg;
    c.seed = opt.seed + 7919 * attempt;
    Model model(c, trace.semantics.front().genre_vectors.front().size());
    // Probe away from the degenerate initial point: zero biases can leave
    // whole ReLU layers dead with gradients cancelling exactly, and the
    // log-spaced frequencies keep most time features constant over a few
    // seconds. Either way the true gradient falls below what a
    // finite difference can resolve.
    {
      std::mt19937_64 rng(c.seed);
      std::uniform_real_distribution<Real> w(0.2, 3.0), b(-0.5, 0.5);
      for (auto& [name, p] : model.params()) {
        if (name == "time.omega") {
          for (auto& v : p.value) v = w(rng);
        } else if (p.cols == 1) {
          for (auto& v : p.value) v = b(rng);
        }
      }
    }
    Engine eng(model, trace.store, &trace.semantics);
    for (std::size_t i = 0; i < 2; ++i) {
      Tape t;
      eng.commit(eng.forward(t, {i, i + 1}));
    }
    std::map<std::string, Vec> analytic;
    {
      Tape t;
      auto g = eng.forward(t, {2, 4}, &negs);
      model.params().zero_grad();
      t.backward(g.loss);
      for (const auto& [n, p] : model.params()) analytic.emplace(n, p.grad);
    }
    // The difference quotient is taken in extended precision so that its
    // rounding floor sits well below the smallest gradients being checked.
    using Wide = long double;
    BasicParamStore<Wide> wide(model.params());
    auto eval = [&](std::uint64_t& sig) {
      ad::Tape<Wide> t;
      auto g = eng.forward_with(t, wide, {2, 4}, &negs);
      sig = t.kink_signature();
      return g.loss.scalar();
    };
    std::uint64_t base_sig = 0;
    eval(base_sig);
    bool kinked = false;
    GradCheckResult r;
    r.retries = attempt;
    for (auto& [name, p] : wide) {
      if (name.rfind(opt.prefix, 0) != 0) continue;
      for (std::size_t k = 0; k < p.size() && !kinked; ++k) {
        const Wide orig = p.value[k];
        const Wide eps = opt.epsilon;
        std::uint64_t sp = 0, sm = 0;
        p.value[k] = orig + eps;
        const Wide lp = eval(sp);
        p.value[k] = orig - eps;
        const Wide lm = eval(sm);
        p.value[k] = orig;
        if (sp != base_sig || sm != base_sig) {
          kinked = true;
          break;
        }
        const Real fd = static_cast<Real>((lp - lm) / (2 * eps));
        const Real ga = analytic.at(name)[k];
        const Real rel = std::abs(ga - fd) / std::max(Real(1e-8), std::abs(ga) + std::abs(fd));
        ++r.entries;
        if (r.worst.empty() || rel > r.max_rel_error) {
          r.max_rel_error = rel;
          r.worst = name + "[" + std::to_string(k) + "]";
          r.worst_analytic = ga;
          r.worst_numeric = fd;
        }
      }
      if (kinked) break;
    }
    if (!kinked) {
      STGN_CHECK(r.entries > 0, "grad_check: no parameters match prefix '" + opt.prefix + "'");
      return r;
    }
  }
  throw Error("stgn: grad_check kept hitting activation kinks after " +
              std::to_string(opt.max_retries) + " retries");
}

}  // namespace stgn
