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
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "stgn/ad/ops.hpp"
#include "stgn/config.hpp"
#include "stgn/graph_store.hpp"
#include "stgn/params.hpp"
#include "stgn/semantics.hpp"
#include "stgn/structural.hpp"
#include "stgn/temporal.hpp"

namespace stgn {

// Trainable parameters of one model variant. Only the tensors the variant
// actually uses are created.
class Model {
 public:
  Model(TrainConfig cfg, std::size_t d_s) : config_(std::move(cfg)), d_s_(d_s) {
    config_.validate();
    STGN_CHECK(!config_.flags.uses_semantics() || d_s_ > 0,
               "semantic variants need a genre embedding width");
    build();
    init(config_.seed);
  }

  [[nodiscard]] const TrainConfig& config() const { return config_; }
  [[nodiscard]] std::size_t semantic_width() const { return d_s_; }
  ParamStore& params() { return params_; }
  [[nodiscard]] const ParamStore& params() const { return params_; }

  [[nodiscard]] bool fuses_messages() const {
    return config_.flags.semantics != TemporalSemantics::Off;
  }
  [[nodiscard]] std::size_t message_width() const {
    return fuses_messages() ? config_.dims.d_f : config_.dims.d_msg();
  }
  [[nodiscard]] std::size_t memory_width() const {
    return config_.flags.memory ? config_.dims.d_m : config_.dims.d_v;
  }
  [[nodiscard]] std::size_t structural_block_width() const {
    return config_.flags.structure == StructuralSemantics::Off ? 0 : config_.dims.d_h;
  }
  [[nodiscard]] std::size_t augmented_width() const {
    return memory_width() + structural_block_width() + config_.dims.d_T;
  }

  // Re-draws every tensor from `seed`.
  void init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& [name, p] : params_) {
      if (name == "time.omega") {
        init_time_frequencies(p);
      } else if (name == "spe.W_p") {
        init_normal(p, rng, 1);
      } else if (p.cols == 1) {
        std::fill(p.value.begin(), p.value.end(), 0);
      } else {
        init_glorot(p, rng);
      }
    }
  }

 private:
  void build() {
    const auto& d = config_.dims;
    const auto& f = config_.flags;
    if (f.memory) add_gru_params(params_, message_width(), d.d_m);
    if (fuses_messages()) {
      params_.add("fuse.W1", d.d_f, d.d_msg());
      params_.add("fuse.W2", d.d_f, d.d_h);
    }
    if (f.semantics == TemporalSemantics::Sum || f.structure != StructuralSemantics::Off) {
      params_.add("sem.W_s", d.d_h, d_s_);
      params_.add("sem.b_s", d.d_h, 1);
    }
    if (f.semantics == TemporalSemantics::UsAttn) {
      params_.add("usattn.W_Q", d.d_key, d.d_h);
      params_.add("usattn.W_K", d.d_key, d_s_);
      params_.add("usattn.W_V", d.d_h, d_s_);
      params_.add("usattn.W_u", d.d_h, d.d_emb);
      params_.add("usattn.W_i", d.d_h, d.d_emb);
      params_.add("usattn.b_ui", d.d_h, 1);
    }
    if (f.memory && f.aggregator == Aggregator::Aoi) {
      params_.add("aoi.W_q", d.d_aoi, d.d_m);
      params_.add("aoi.W_k", d.d_aoi, message_width());
      params_.add("aoi.W_v", message_width(), message_width());
    }
    params_.add("time.omega", d.d_T, 1);
    if (f.structure == StructuralSemantics::SumSpe) {
      params_.add("spe.phi.W", d.spe_in, d.d_h);
      params_.add("spe.phi.b", d.spe_in, 1);
      params_.add("spe.W_p", d.spe_fourier / 2, d.spe_in);
      params_.add("spe.W1", d.spe_mid, d.spe_fourier);
      params_.add("spe.W2", d.d_h, d.spe_mid);
    }
    for (std::size_t l = 0; l < config_.layers; ++l) {
      const auto d_in = l == 0 ? augmented_width() : d.d_emb + d.d_T;
      add_tgat_layer_params(params_, l, d.n_heads, d_in, d.d_attn, d.d_emb);
    }
    params_.add("dec.W1", d.d_dec, 2 * d.d_emb);
    params_.add("dec.b1", d.d_dec, 1);
    params_.add("dec.W2", 1, d.d_dec);
    params_.add("dec.b2", 1, 1);
  }

  TrainConfig config_;
  std::size_t d_s_;
  ParamStore params_;
};

// Decoder F: p = sigmoid(W2 ReLU(W1 [E_u | E_i] + b1) + b2). Returns the logit.
template <class T>
ad::Var<T> decoder_logit(const ad::Var<T>& e_u, const ad::Var<T>& e_i, const ad::Var<T>& w1,
                         const ad::Var<T>& b1, const ad::Var<T>& w2, const ad::Var<T>& b2) {
  auto hidden = ad::relu(ad::add(ad::matvec(w1, ad::concat<T>({e_u, e_i})), b1));
  return ad::add(ad::matvec(w2, hidden), b2);
}

// Keeps a probability strictly inside (0, 1).
inline Real open_unit(Real p) {
  const Real lo = std::numeric_limits<Real>::min();
  const Real hi = std::nextafter(Real(1), Real(0));
  return std::clamp(p, lo, hi);
}

// Mutable per-node state carried across batches.
struct NodeState {
  MemoryState memory;
  MessageBuffer buffer;
  Vec prev_embedding;  // last embedding produced for this node
};

// When a batch looks at the graph: memories fold in messages strictly before
// `memory_time`; neighbors are drawn only from events below `bound_index`.
struct BatchView {
  Timestamp memory_time = 0;
  std::size_t bound_index = 0;
};

template <class T = Real>
struct MemoryUpdate {
  NodeRef node;
  ad::Var<T> mem;
  std::size_t last_consumed = kNoEvent;
};

template <class T = Real>
struct BatchGraph {
  EventRange range;
  BatchView view;
  std::vector<ad::Var<T>> user_embeddings;  // per positive event
  std::vector<ad::Var<T>> item_embeddings;
  std::vector<ad::Var<T>> pos_logits;
  std::vector<ad::Var<T>> neg_logits;  // events x negatives, row-major
  ad::Var<T> loss;                     // valid when negatives were supplied
  std::vector<MemoryUpdate<T>> updates;
};

// Runs the model over the event stream: owns memories, message buffers and
// previous-round embeddings; builds the per-batch computation on a Tape.
class Engine {
 public:
  Engine(Model& model, const EventStore& store,
         const std::vector<SemanticSet>* semantics)
      : model_(model), store_(store), semantics_(semantics) {
    if (model_.config().flags.uses_semantics()) {
      STGN_CHECK(semantics_ != nullptr && semantics_->size() == store_.num_items(),
                 "semantic variant needs one SemanticSet per item");
    }
    time_scale_.scale = model_.config().message_time_scale;
    time_scale_.origin = store_.size() > 0 ? store_.event(0).timestamp : 0;
    reset();
  }

  void reset() {
    const auto& cfg = model_.config();
    auto fresh = [&] {
      NodeState s;
      s.memory.mem.assign(cfg.dims.d_m, 0);
      s.buffer = MessageBuffer(cfg.message_capacity);
      s.prev_embedding.assign(cfg.dims.d_emb, 0);
      return s;
    };
    users_.assign(store_.num_users(), fresh());
    items_.assign(store_.num_items(), fresh());
  }

  [[nodiscard]] const NodeState& state(NodeRef n) const {
    return n.role == Role::User ? users_.at(n.id) : items_.at(n.id);
  }
  NodeState& state(NodeRef n) {
    return n.role == Role::User ? users_.at(n.id) : items_.at(n.id);
  }
  [[nodiscard]] const Model& model() const { return model_; }
  [[nodiscard]] const EventStore& store() const { return store_; }
  [[nodiscard]] const MessageTimeScale& time_scale() const { return time_scale_; }

  // Builds embeddings and logits for events in `range` against the state as
  // of the batch start. `negatives` (optional) holds the same number of item
  // ids for every event; when present the summed BCE loss is attached.
  BatchGraph<Real> forward(Tape& tape, EventRange range,
                           const std::vector<NodeId>* negatives = nullptr) {
    return forward_with(tape, model_.params(), range, negatives);
  }

  // Same, against an arbitrary parameter store (possibly of another scalar
  // type). The running state is read, never written.
  template <class T>
  BatchGraph<T> forward_with(ad::Tape<T>& tape, BasicParamStore<T>& ps, EventRange range,
                             const std::vector<NodeId>* negatives = nullptr) {
    STGN_CHECK(range.begin < range.end && range.end <= store_.size(),
               "forward: bad event range");
    BatchView view{store_.event(range.begin).timestamp, range.begin};
    Builder<T> b(*this, tape, ps, view);
    BatchGraph<T> g;
    g.range = range;
    g.view = view;
    std::size_t n_neg = 0;
    if (negatives != nullptr) {
      n_neg = negatives->size() / range.size();
      STGN_CHECK(n_neg >= 1 && negatives->size() == range.size() * n_neg,
                 "forward: negatives size mismatch");
    }
    std::vector<ad::Var<T>> losses;
    for (std::size_t i = range.begin; i < range.end; ++i) {
      const auto& e = store_.event(i);
      auto eu = b.embed(user_node(e.user_id), e.timestamp, model_.config().layers);
      auto ei = b.embed(item_node(e.item_id), e.timestamp, model_.config().layers);
      g.user_embeddings.push_back(eu);
      g.item_embeddings.push_back(ei);
      auto zp = b.logit(eu, ei);
      g.pos_logits.push_back(zp);
      if (negatives != nullptr) {
        losses.push_back(ad::bce_with_logit(zp, true));
        for (std::size_t k = 0; k < n_neg; ++k) {
          const NodeId neg = (*negatives)[(i - range.begin) * n_neg + k];
          auto en = b.embed(item_node(neg), e.timestamp, model_.config().layers);
          auto zn = b.logit(eu, en);
          g.neg_logits.push_back(zn);
          losses.push_back(ad::bce_with_logit(zn, false));
        }
      }
    }
    if (!losses.empty()) g.loss = ad::sum(losses);
    g.updates = std::move(b.updates);
    return g;
  }

  // Folds the batch into the running state: memories computed in the graph
  // become the stored memories, embeddings of the positive pairs become the
  // previous-round embeddings, and the batch's messages are appended to both
  // endpoints' buffers.
  void commit(const BatchGraph<Real>& g) {
    for (const auto& u : g.updates) {
      auto& st = state(u.node);
      st.memory.mem = u.mem.value();
      st.memory.last_update = std::max(st.memory.last_update, g.view.memory_time);
      st.memory.last_consumed = u.last_consumed;
    }
    for (std::size_t i = g.range.begin; i < g.range.end; ++i) {
      const auto& e = store_.event(i);
      const auto k = i - g.range.begin;
      if (k < g.user_embeddings.size()) {
        users_[e.user_id].prev_embedding = g.user_embeddings[k].value();
        items_[e.item_id].prev_embedding = g.item_embeddings[k].value();
      }
    }
    append_messages(g.range);
  }

  // Appends messages for a range without any forward pass.
  void append_messages(EventRange range) {
    const bool usattn = model_.config().flags.semantics == TemporalSemantics::UsAttn;
    for (std::size_t i = range.begin; i < range.end; ++i) {
      const auto& e = store_.event(i);
      auto m = build_message(e, store_.catalog(), time_scale_);
      if (usattn) {
        m.prev_user_embedding = users_[e.user_id].prev_embedding;
        m.prev_item_embedding = items_[e.item_id].prev_embedding;
      }
      users_[e.user_id].buffer.push(m);
      items_[e.item_id].buffer.push(std::move(m));
    }
  }

  // Forward + commit over a range in batches, without scoring.
  void replay(EventRange range, std::size_t batch_size) {
    for (std::size_t b = range.begin; b < range.end; b += batch_size) {
      Tape tape;
      const EventRange r{b, std::min(range.end, b + batch_size)};
      commit(forward(tape, r));
    }
  }

  // Preference probabilities for every (user, item) pair at time t_hat, with
  // memories as of view.memory_time and neighbors below view.bound_index.
  // Returns probs[u][i].
  std::vector<Vec> preference_matrix(const std::vector<NodeId>& users,
                                     const std::vector<NodeId>& items,
                                     Timestamp t_hat, BatchView view) {
    Tape tape;
    Builder<Real> b(*this, tape, model_.params(), view);
    const auto layers = model_.config().layers;
    const auto& ps = model_.params();
    const auto& w1 = ps.at("dec.W1");
    const auto& b1 = ps.at("dec.b1");
    const auto& w2 = ps.at("dec.W2");
    const Real b2 = ps.at("dec.b2").value[0];
    const auto d_emb = model_.config().dims.d_emb;
    const auto d_dec = w1.rows;
    // First decoder layer splits into a user half and an item half.
    auto half = [&](const Vec& e, std::size_t offset, bool with_bias) {
      Vec out(d_dec, 0);
      for (std::size_t r = 0; r < d_dec; ++r) {
        Real acc = with_bias ? b1.value[r] : 0;
        for (std::size_t c = 0; c < d_emb; ++c) acc += w1.at(r, offset + c) * e[c];
        out[r] = acc;
      }
      return out;
    };
    std::vector<Vec> user_part, item_part;
    for (auto u : users) {
      user_part.push_back(half(b.embed(user_node(u), t_hat, layers).value(), 0, true));
    }
    for (auto k : items) {
      item_part.push_back(half(b.embed(item_node(k), t_hat, layers).value(), d_emb, false));
    }
    std::vector<Vec> probs(users.size(), Vec(items.size(), 0));
    for (std::size_t a = 0; a < users.size(); ++a) {
      for (std::size_t c = 0; c < items.size(); ++c) {
        Real z = b2;
        for (std::size_t r = 0; r < d_dec; ++r) {
          const Real h = user_part[a][r] + item_part[c][r];
          if (h > 0) z += w2.value[r] * h;
        }
        probs[a][c] = open_unit(ad::sigmoid_value(z));
      }
    }
    return probs;
  }

  // Memory snapshot of every node (for checkpoint/restore).
  [[nodiscard]] std::vector<std::pair<NodeRef, MemoryState>> memory_snapshot() const {
    std::vector<std::pair<NodeRef, MemoryState>> out;
    for (std::size_t u = 0; u < users_.size(); ++u) {
      out.emplace_back(user_node(NodeId(u)), users_[u].memory);
    }
    for (std::size_t k = 0; k < items_.size(); ++k) {
      out.emplace_back(item_node(NodeId(k)), items_[k].memory);
    }
    return out;
  }

  void restore_memory(const std::vector<std::pair<NodeRef, MemoryState>>& snap) {
    for (const auto& [n, m] : snap) {
      STGN_CHECK(m.mem.size() == model_.config().dims.d_m,
                 "restore_memory: width mismatch");
      state(n).memory = m;
    }
  }

 private:
  // Per-batch graph construction with caches keyed by node / event / time.
  template <class T>
  class Builder {
   public:
    using V = ad::Var<T>;
    Builder(Engine& eng, ad::Tape<T>& tape, BasicParamStore<T>& ps, BatchView view)
        : eng_(eng), tape_(tape), view_(view), ps_(ps) {}

    std::vector<MemoryUpdate<T>> updates;

    V param(const char* name) { return tape_.parameter(ps_.at(name)); }

    V memory(NodeRef n) {
      if (auto it = mem_cache_.find(n); it != mem_cache_.end()) return it->second;
      const auto& cfg = eng_.model_.config();
      V out;
      if (!cfg.flags.memory) {
        const auto& cat = eng_.store_.catalog();
        out = constant_of(tape_, n.role == Role::User ? cat.user_raw_features.at(n.id)
                                                        : cat.item_raw_features.at(n.id));
      } else {
        const auto& st = eng_.state(n);
        auto stored = constant_of(tape_, st.memory.mem);
        out = stored;
        std::vector<TimedVar<T>> msgs;
        std::size_t newest_pending = kNoEvent;
        for (const auto& m : st.buffer.messages()) {
          if (m.timestamp >= view_.memory_time) continue;
          const bool pending = st.memory.last_consumed == kNoEvent ||
                               m.event_index > st.memory.last_consumed;
          if (pending) newest_pending = m.event_index;
        }
        if (newest_pending != kNoEvent) {
          for (const auto& m : st.buffer.messages()) {
            if (m.timestamp < view_.memory_time) {
              msgs.push_back({m.timestamp, message_value(m)});
            }
          }
          std::optional<V> h;
          switch (cfg.flags.aggregator) {
            case Aggregator::Last: h = aggregate_last(msgs, view_.memory_time); break;
            case Aggregator::Mean: h = aggregate_mean(msgs, view_.memory_time); break;
            case Aggregator::Aoi: {
              auto r = aggregate_aoi(msgs, view_.memory_time, stored, param("aoi.W_q"),
                                     param("aoi.W_k"), param("aoi.W_v"), cfg.aoi);
              if (r) h = r->h;
              break;
            }
          }
          if (h) {
            out = update_memory(stored, *h, gru());
            updates.push_back({n, out, newest_pending});
          }
        }
      }
      mem_cache_.emplace(n, out);
      return out;
    }

    // Raw message, or its semantics-enhanced form.
    V message_value(const TemporalMessage& m) {
      if (auto it = msg_cache_.find(m.event_index); it != msg_cache_.end()) {
        return it->second;
      }
      const auto& cfg = eng_.model_.config();
      V raw = constant_of(tape_, m.raw);
      V out = raw;
      if (cfg.flags.semantics != TemporalSemantics::Off) {
        V s_k;
        const auto& genres = genre_vars(m.counterpart_item_id);
        if (cfg.flags.semantics == TemporalSemantics::Sum) {
          s_k = sum_semantic(m.counterpart_item_id);
        } else {
          auto e_jk = user_specific_embedding(
              constant_of(tape_, m.prev_user_embedding),
              constant_of(tape_, m.prev_item_embedding),
              param("usattn.W_u"), param("usattn.W_i"), param("usattn.b_ui"));
          auto att = aggregate_usattn(genres, e_jk, param("usattn.W_Q"),
                                      param("usattn.W_K"), param("usattn.W_V"));
          s_k = skip_connect(att.s_jk, e_jk, genres.size());
        }
        out = fuse_message(raw, s_k, param("fuse.W1"), param("fuse.W2"));
      }
      msg_cache_.emplace(m.event_index, out);
      return out;
    }

    const std::vector<V>& genre_vars(NodeId item) {
      auto it = genre_cache_.find(item);
      if (it == genre_cache_.end()) {
        it = genre_cache_.emplace(item, genre_constants(tape_, (*eng_.semantics_)[item])).first;
      }
      return it->second;
    }

    V sum_semantic(NodeId item) {
      if (auto it = sum_cache_.find(item); it != sum_cache_.end()) return it->second;
      auto v = aggregate_sum(genre_vars(item), param("sem.W_s"), param("sem.b_s"));
      sum_cache_.emplace(item, v);
      return v;
    }

    // Semantic block attached to a node in the structural input; invalid when
    // the variant has none. Users carry zeros of the same width.
    V structural_block(NodeRef n) {
      const auto& cfg = eng_.model_.config();
      if (cfg.flags.structure == StructuralSemantics::Off) return {};
      if (n.role == Role::User) return tape_.zeros(cfg.dims.d_h);
      if (auto it = block_cache_.find(n.id); it != block_cache_.end()) return it->second;
      V v = sum_semantic(n.id);
      if (cfg.flags.structure == StructuralSemantics::SumSpe) {
        SpeVars<T> sp{param("spe.phi.W"), param("spe.phi.b"), param("spe.W_p"),
                   param("spe.W1"), param("spe.W2")};
        v = encode_semantic_position(v, sp).encoded;
      }
      block_cache_.emplace(n.id, v);
      return v;
    }

    // Representation of `n` at layer `layer` and time `t`.
    V embed(NodeRef n, Timestamp t, std::size_t layer) {
      const auto key = std::make_tuple(n.role, n.id, t, layer);
      if (auto it = emb_cache_.find(key); it != emb_cache_.end()) return it->second;
      V out;
      if (layer == 0) {
        std::vector<V> parts{memory(n)};
        if (auto s = structural_block(n); s.valid()) parts.push_back(s);
        out = ad::concat(parts);
      } else {
        const auto& cfg = eng_.model_.config();
        auto omega = param("time.omega");
        auto center = ad::concat<T>({embed(n, t, layer - 1), encode_time(0, omega)});
        std::vector<V> nbrs;
        for (auto idx : eng_.store_.sample_recent_neighbors(n, t, cfg.neighbors,
                                                            view_.bound_index)) {
          const auto& e = eng_.store_.event(idx);
          const NodeRef other = n.role == Role::User ? item_node(e.item_id)
                                                     : user_node(e.user_id);
          const Real dt = t - e.timestamp;
          STGN_CHECK(dt >= 0, "embed: neighbor interaction lies in the future");
          nbrs.push_back(ad::concat<T>(
              {embed(other, e.timestamp, layer - 1), encode_time(dt, omega)}));
        }
        out = tgat_layer(center, nbrs, layer_vars(layer - 1)).embedding;
      }
      emb_cache_.emplace(key, out);
      return out;
    }

    V logit(const V& eu, const V& ei) {
      return decoder_logit(eu, ei, param("dec.W1"), param("dec.b1"), param("dec.W2"),
                           param("dec.b2"));
    }

   private:
    const GruVars<T>& gru() {
      if (!gru_) gru_ = GruVars<T>::bind(tape_, ps_);
      return *gru_;
    }
    const TgatLayerVars<T>& layer_vars(std::size_t l) {
      while (layers_.size() <= l) {
        layers_.push_back(TgatLayerVars<T>::bind(tape_, ps_, layers_.size(),
                                              eng_.model_.config().dims.n_heads));
      }
      return layers_[l];
    }

    Engine& eng_;
    ad::Tape<T>& tape_;
    BatchView view_;
    BasicParamStore<T>& ps_;
    std::optional<GruVars<T>> gru_;
    std::vector<TgatLayerVars<T>> layers_;
    std::map<NodeRef, V> mem_cache_;
    std::unordered_map<std::size_t, V> msg_cache_;
    std::unordered_map<NodeId, std::vector<V>> genre_cache_;
    std::unordered_map<NodeId, V> sum_cache_;
    std::unordered_map<NodeId, V> block_cache_;
    std::map<std::tuple<Role, NodeId, Timestamp, std::size_t>, V> emb_cache_;
  };

  Model& model_;
  const EventStore& store_;
  const std::vector<SemanticSet>* semantics_;
  MessageTimeScale time_scale_;
  std::vector<NodeState> users_;
  std::vector<NodeState> items_;
};

}  // namespace stgn
