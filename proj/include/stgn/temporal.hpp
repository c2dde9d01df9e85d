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
#include <deque>
#include <limits>
#include <optional>
#include <vector>

#include "stgn/ad/ops.hpp"
#include "stgn/graph_store.hpp"
#include "stgn/params.hpp"

namespace stgn {

inline constexpr std::size_t kNoEvent = std::numeric_limits<std::size_t>::max();

// How the scalar timestamp is written into a raw message:
// tau = (T - origin) / scale.
struct MessageTimeScale {
  Timestamp origin = 0;
  Real scale = 1;
};

struct TemporalMessage {
  std::size_t event_index = 0;
  Timestamp timestamp = 0;
  NodeId user_id = 0;
  NodeId counterpart_item_id = 0;
  Vec raw;  // [v_u | v_i | e | tau]
  // Previous-round embeddings of both endpoints, kept for user-specific
  // attention when the message is fused later.
  Vec prev_user_embedding;
  Vec prev_item_embedding;
};

// Per-node bounded message history, oldest first.
class MessageBuffer {
 public:
  explicit MessageBuffer(std::size_t capacity = 10) : capacity_(capacity) {}

  void push(TemporalMessage m) {
    STGN_CHECK(msgs_.empty() || msgs_.back().timestamp <= m.timestamp,
               "MessageBuffer: messages must arrive in time order");
    msgs_.push_back(std::move(m));
    while (msgs_.size() > capacity_) msgs_.pop_front();
  }
  [[nodiscard]] const std::deque<TemporalMessage>& messages() const {
    return msgs_;
  }
  [[nodiscard]] std::size_t size() const { return msgs_.size(); }
  [[nodiscard]] bool empty() const { return msgs_.empty(); }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  void clear() { msgs_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<TemporalMessage> msgs_;
};

struct MemoryState {
  Vec mem;
  Timestamp last_update = -std::numeric_limits<Timestamp>::infinity();
  // Highest event index already folded into `mem`.
  std::size_t last_consumed = kNoEvent;
};

inline Vec build_raw_message(const InteractionEvent& e, const NodeCatalog& cat,
                             const MessageTimeScale& ts = {}) {
  Vec raw;
  const auto& vu = cat.user_raw_features.at(e.user_id);
  const auto& vi = cat.item_raw_features.at(e.item_id);
  raw.reserve(vu.size() + vi.size() + e.edge_features.size() + 1);
  raw.insert(raw.end(), vu.begin(), vu.end());
  raw.insert(raw.end(), vi.begin(), vi.end());
  raw.insert(raw.end(), e.edge_features.begin(), e.edge_features.end());
  raw.push_back((e.timestamp - ts.origin) / ts.scale);
  return raw;
}

inline TemporalMessage build_message(const InteractionEvent& e,
                                     const NodeCatalog& cat,
                                     const MessageTimeScale& ts = {}) {
  TemporalMessage m;
  m.event_index = e.event_index;
  m.timestamp = e.timestamp;
  m.user_id = e.user_id;
  m.counterpart_item_id = e.item_id;
  m.raw = build_raw_message(e, cat, ts);
  return m;
}

// Msg' = ReLU(W1_t Msg + W2_t S_k). `semantic` must be valid.
template <class T>
ad::Var<T> fuse_message(const ad::Var<T>& raw, const ad::Var<T>& semantic,
                        const ad::Var<T>& w1, const ad::Var<T>& w2) {
  STGN_CHECK(semantic.valid(),
             "fuse_message: semantic feature required when semantics are on");
  return ad::relu(ad::add(ad::matvec(w1, raw), ad::matvec(w2, semantic)));
}

// A message already mapped onto the tape (raw or fused form).
template <class T = Real>
struct TimedVar {
  Timestamp timestamp = 0;
  ad::Var<T> value;
};

// Latest message strictly before t_hat; nullopt means "no update".
template <class T>
std::optional<ad::Var<T>> aggregate_last(const std::vector<TimedVar<T>>& msgs,
                                         Timestamp t_hat) {
  const TimedVar<T>* best = nullptr;
  for (const auto& m : msgs) {
    if (m.timestamp < t_hat && (best == nullptr || m.timestamp >= best->timestamp)) {
      best = &m;
    }
  }
  if (best == nullptr) return std::nullopt;
  return best->value;
}

// Mean of every message strictly before t_hat.
template <class T>
std::optional<ad::Var<T>> aggregate_mean(const std::vector<TimedVar<T>>& msgs,
                                         Timestamp t_hat) {
  std::vector<ad::Var<T>> keep;
  for (const auto& m : msgs) {
    if (m.timestamp < t_hat) keep.push_back(m.value);
  }
  if (keep.empty()) return std::nullopt;
  return ad::mean(keep);
}

struct AoiConfig {
  std::size_t capacity = 10;           // M
  Timestamp max_age = 30.0 * 86400.0;  // A_max, seconds
};

template <class T = Real>
struct AoiResult {
  ad::Var<T> h;
  ad::Var<T> weights;
};

// Age-of-information filtered attention: keep past messages whose age
// t_hat - t_msg is at most A_max (the newest M of them), score each against
// the node memory and return the softmax-weighted sum of value projections.
template <class T>
std::optional<AoiResult<T>> aggregate_aoi(const std::vector<TimedVar<T>>& msgs,
                                          Timestamp t_hat, const ad::Var<T>& mem,
                                          const ad::Var<T>& w_q, const ad::Var<T>& w_k,
                                          const ad::Var<T>& w_v, const AoiConfig& cfg) {
  std::vector<const TimedVar<T>*> fresh;
  for (const auto& m : msgs) {
    if (m.timestamp < t_hat && t_hat - m.timestamp <= cfg.max_age) {
      fresh.push_back(&m);
    }
  }
  if (fresh.empty() || cfg.capacity == 0) return std::nullopt;
  std::stable_sort(fresh.begin(), fresh.end(),
                   [](const TimedVar<T>* a, const TimedVar<T>* b) {
                     return a->timestamp > b->timestamp;
                   });
  if (fresh.size() > cfg.capacity) fresh.resize(cfg.capacity);
  auto query = ad::matvec(w_q, mem);
  std::vector<ad::Var<T>> scores, values;
  for (const auto* m : fresh) {
    scores.push_back(ad::dot(query, ad::matvec(w_k, m->value)));
    values.push_back(ad::matvec(w_v, m->value));
  }
  auto weights = ad::softmax(ad::stack(scores));
  return AoiResult<T>{ad::weighted_sum(weights, values), weights};
}

template <class T = Real>
struct GruVars {
  ad::Var<T> w_hz, w_mz, b_z;
  ad::Var<T> w_hh, w_mh, b_h;
  ad::Var<T> w_hf, w_mf, b_f;

  static GruVars bind(ad::Tape<T>& tape, BasicParamStore<T>& ps) {
    return {tape.parameter(ps.at("gru.W_hZ")), tape.parameter(ps.at("gru.W_MZ")),
            tape.parameter(ps.at("gru.b_Z")),  tape.parameter(ps.at("gru.W_hH")),
            tape.parameter(ps.at("gru.W_MH")), tape.parameter(ps.at("gru.b_H")),
            tape.parameter(ps.at("gru.W_hF")), tape.parameter(ps.at("gru.W_MF")),
            tape.parameter(ps.at("gru.b_F"))};
  }
};

inline void add_gru_params(ParamStore& ps, std::size_t d_in, std::size_t d_m) {
  for (const char* g : {"Z", "H", "F"}) {
    ps.add(std::string("gru.W_h") + g, d_m, d_in);
    ps.add(std::string("gru.W_M") + g, d_m, d_m);
    ps.add(std::string("gru.b_") + g, d_m, 1);
  }
}

// F = sigmoid(W_hF h + W_MF Mem + b_F)
// H = tanh(W_hH h + W_MH (F * Mem) + b_H)
// Z = sigmoid(W_hZ h + W_MZ Mem + b_Z)
// Mem' = Z * H + (1 - Z) * Mem
template <class T>
ad::Var<T> update_memory(const ad::Var<T>& mem, const ad::Var<T>& h, const GruVars<T>& g) {
  using namespace ad;
  auto f = sigmoid(add(add(matvec(g.w_hf, h), matvec(g.w_mf, mem)), g.b_f));
  auto hh = tanh(add(add(matvec(g.w_hh, h), matvec(g.w_mh, hadamard(f, mem))), g.b_h));
  auto z = sigmoid(add(add(matvec(g.w_hz, h), matvec(g.w_mz, mem)), g.b_z));
  auto out = add(hadamard(z, hh), hadamard(one_minus(z), mem));
  for (T v : out.value()) {
    STGN_CHECK(std::isfinite(v), "update_memory: non-finite memory");
  }
  return out;
}

// Value-level convenience wrapper.
inline MemoryState update_memory(const MemoryState& state, const Vec& h,
                                 Timestamp t_hat, ParamStore& ps) {
  Tape tape;
  auto g = GruVars<Real>::bind(tape, ps);
  auto out = update_memory(tape.constant(state.mem), tape.constant(h), g);
  MemoryState next = state;
  next.mem = out.value();
  STGN_CHECK(t_hat >= state.last_update, "update_memory: time went backwards");
  next.last_update = t_hat;
  return next;
}

}  // namespace stgn
