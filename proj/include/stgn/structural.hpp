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
#include <string>
#include <vector>

#include "stgn/ad/ops.hpp"
#include "stgn/graph_store.hpp"
#include "stgn/params.hpp"

namespace stgn {

// Phi(dt) = sqrt(1/d_T) [cos(w_1 dt), ..., cos(w_dT dt)]
template <class T>
ad::Var<T> encode_time(Real dt, const ad::Var<T>& omegas) {
  STGN_CHECK(omegas.size() >= 1, "encode_time: need at least one frequency");
  const T norm = std::sqrt(T(1) / static_cast<T>(omegas.size()));
  return ad::scale(ad::cos(ad::scale(omegas, static_cast<T>(dt))), norm);
}

// Log-spaced frequencies 10^(-9 i / (d_T - 1)), the usual starting point for
// learnable time encodings.
inline void init_time_frequencies(Param& omegas) {
  const auto n = omegas.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Real e = n > 1 ? Real(9) * static_cast<Real>(i) / static_cast<Real>(n - 1) : 0;
    omegas.value[i] = std::pow(Real(10), -e);
  }
}

// R = (1/sqrt(D_h)) [cos(W_p x) | sin(W_p x)], D_h = 2 * rows(W_p).
template <class T>
ad::Var<T> fourier_features(const ad::Var<T>& x, const ad::Var<T>& w_p) {
  auto proj = ad::matvec(w_p, x);
  const T d_h = static_cast<T>(2 * w_p.rows());
  return ad::scale(ad::concat<T>({ad::cos(proj), ad::sin(proj)}), T(1) / std::sqrt(d_h));
}

template <class T = Real>
struct SpeVars {
  ad::Var<T> phi_w, phi_b;  // invalid when the feature-enhancement layer is bypassed
  ad::Var<T> w_p, w1, w2;
};

template <class T = Real>
struct SpeOutput {
  ad::Var<T> fourier;  // R_k
  ad::Var<T> encoded;  // W2 GeLU(W1 R_k)
};

// Semantic positional encoding of an aggregated semantic vector.
template <class T>
SpeOutput<T> encode_semantic_position(const ad::Var<T>& s_k, const SpeVars<T>& p) {
  ad::Var<T> pos = s_k;
  if (p.phi_w.valid()) pos = ad::relu(ad::add(ad::matvec(p.phi_w, s_k), p.phi_b));
  auto r = fourier_features(pos, p.w_p);
  return {r, ad::matvec(p.w2, ad::gelu(ad::matvec(p.w1, r)))};
}

// [Mem | semantic block | Phi(dt)]; an invalid `semantic` omits the block.
template <class T>
ad::Var<T> augment_memory(const ad::Var<T>& mem, const ad::Var<T>& semantic, Real dt,
                          const ad::Var<T>& omegas) {
  STGN_CHECK(dt >= 0, "augment_memory: neighbor interaction lies in the future");
  std::vector<ad::Var<T>> parts{mem};
  if (semantic.valid()) parts.push_back(semantic);
  parts.push_back(encode_time(dt, omegas));
  return ad::concat(parts);
}

template <class T = Real>
struct TgatHeadVars {
  ad::Var<T> w_q, w_k, w_v;
};

template <class T = Real>
struct TgatLayerVars {
  std::vector<TgatHeadVars<T>> heads;
  ad::Var<T> w_o1, b_o1, w_o2, b_o2;

  static TgatLayerVars bind(ad::Tape<T>& tape, BasicParamStore<T>& ps, std::size_t layer,
                            std::size_t n_heads) {
    TgatLayerVars v;
    const std::string base = "tgat.l" + std::to_string(layer) + ".";
    for (std::size_t h = 0; h < n_heads; ++h) {
      const std::string hb = base + "h" + std::to_string(h) + ".";
      v.heads.push_back({tape.parameter(ps.at(hb + "W_Q")),
                         tape.parameter(ps.at(hb + "W_K")),
                         tape.parameter(ps.at(hb + "W_V"))});
    }
    v.w_o1 = tape.parameter(ps.at(base + "W_o1"));
    v.b_o1 = tape.parameter(ps.at(base + "b_o1"));
    v.w_o2 = tape.parameter(ps.at(base + "W_o2"));
    v.b_o2 = tape.parameter(ps.at(base + "b_o2"));
    return v;
  }
};

inline void add_tgat_layer_params(ParamStore& ps, std::size_t layer,
                                  std::size_t n_heads, std::size_t d_in,
                                  std::size_t d_attn, std::size_t d_out) {
  STGN_CHECK(n_heads > 0 && d_attn % n_heads == 0,
             "attention width must split evenly across heads");
  const std::size_t d_head = d_attn / n_heads;
  const std::string base = "tgat.l" + std::to_string(layer) + ".";
  for (std::size_t h = 0; h < n_heads; ++h) {
    const std::string hb = base + "h" + std::to_string(h) + ".";
    ps.add(hb + "W_Q", d_head, d_in);
    ps.add(hb + "W_K", d_head, d_in);
    ps.add(hb + "W_V", d_head, d_in);
  }
  ps.add(base + "W_o1", d_out, d_in + d_attn);
  ps.add(base + "b_o1", d_out, 1);
  ps.add(base + "W_o2", d_out, d_out);
  ps.add(base + "b_o2", d_out, 1);
}

template <class T = Real>
struct TgatOutput {
  ad::Var<T> embedding;
  std::vector<ad::Var<T>> head_weights;  // empty when there are no neighbors
};

// One temporal graph attention layer: multi-head scaled dot-product attention
// of the center against its neighbors, heads concatenated, then a two-layer
// feed-forward over [center | attended]. Without neighbors the attended
// block is zero.
template <class T>
TgatOutput<T> tgat_layer(const ad::Var<T>& center, const std::vector<ad::Var<T>>& neighbors,
                         const TgatLayerVars<T>& p) {
  auto& tape = center.tape();
  TgatOutput<T> out;
  std::vector<ad::Var<T>> heads;
  for (const auto& h : p.heads) {
    const auto d_head = h.w_q.rows();
    if (neighbors.empty()) {
      heads.push_back(tape.zeros(d_head));
      continue;
    }
    auto q = ad::matvec(h.w_q, center);
    const T inv = T(1) / std::sqrt(static_cast<T>(d_head));
    std::vector<ad::Var<T>> logits, values;
    for (const auto& n : neighbors) {
      logits.push_back(ad::scale(ad::dot(q, ad::matvec(h.w_k, n)), inv));
      values.push_back(ad::matvec(h.w_v, n));
    }
    auto w = ad::softmax(ad::stack(logits));
    out.head_weights.push_back(w);
    heads.push_back(ad::weighted_sum(w, values));
  }
  auto merged = ad::concat<T>({center, ad::concat(heads)});
  auto hidden = ad::relu(ad::add(ad::matvec(p.w_o1, merged), p.b_o1));
  out.embedding = ad::add(ad::matvec(p.w_o2, hidden), p.b_o2);
  return out;
}

}  // namespace stgn
