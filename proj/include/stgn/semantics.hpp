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
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stgn/ad/ops.hpp"
#include "stgn/graph_store.hpp"
#include "stgn/params.hpp"

namespace stgn {

enum class EmbeddingMode { OneHot, Table };

// Token -> vector lookup for genre strings. One-hot tables are built from a
// vocabulary; dense tables are loaded from the usual word-vector text format.
class GenreEmbeddingTable {
 public:
  static GenreEmbeddingTable one_hot(const std::set<std::string>& vocab) {
    GenreEmbeddingTable t;
    t.mode_ = EmbeddingMode::OneHot;
    t.width_ = vocab.size();
    std::size_t k = 0;
    for (const auto& tok : vocab) {
      Vec v(vocab.size(), 0);
      v[k++] = 1;
      t.vectors_.emplace(tok, std::move(v));
    }
    return t;
  }

  static GenreEmbeddingTable one_hot(const NodeCatalog& catalog) {
    std::set<std::string> vocab;
    for (const auto& gs : catalog.item_genres) vocab.insert(gs.begin(), gs.end());
    return one_hot(vocab);
  }

  // `token v1 v2 ... vD` per line; D is taken from the first entry and every
  // later line must match it.
  static GenreEmbeddingTable parse(std::istream& in) {
    GenreEmbeddingTable t;
    t.mode_ = EmbeddingMode::Table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::istringstream ls(line);
      std::string tok;
      if (!(ls >> tok)) continue;
      Vec v;
      std::string num;
      while (ls >> num) {
        double x = 0;
        STGN_CHECK(detail::parse_number(num, x),
                   "embedding table line " + std::to_string(lineno) +
                       ": bad number '" + num + "'");
        v.push_back(x);
      }
      STGN_CHECK(!v.empty(), "embedding table line " + std::to_string(lineno) +
                                 ": no vector components");
      if (t.vectors_.empty()) t.width_ = v.size();
      STGN_CHECK(v.size() == t.width_,
                 "embedding table line " + std::to_string(lineno) + ": width " +
                     std::to_string(v.size()) + " != " +
                     std::to_string(t.width_));
      t.vectors_.insert_or_assign(tok, std::move(v));
    }
    STGN_CHECK(!t.vectors_.empty(), "embedding table is empty");
    return t;
  }

  static GenreEmbeddingTable load(const std::string& path) {
    std::ifstream in(path);
    STGN_CHECK(in.good(), "cannot open embedding table: " + path);
    return parse(in);
  }

  [[nodiscard]] EmbeddingMode mode() const { return mode_; }
  [[nodiscard]] std::size_t width() const { return width_; }
  [[nodiscard]] std::size_t size() const { return vectors_.size(); }
  [[nodiscard]] bool contains(const std::string& tok) const {
    return vectors_.contains(tok);
  }
  [[nodiscard]] const Vec& at(const std::string& tok) const {
    auto it = vectors_.find(tok);
    STGN_CHECK(it != vectors_.end(), "unknown genre token: " + tok);
    return it->second;
  }
  [[nodiscard]] const std::map<std::string, Vec>& vectors() const {
    return vectors_;
  }

 private:
  EmbeddingMode mode_ = EmbeddingMode::OneHot;
  std::size_t width_ = 0;
  std::map<std::string, Vec> vectors_;
};

struct SemanticSet {
  NodeId item_id = 0;
  std::vector<Vec> genre_vectors;
  [[nodiscard]] std::size_t n_genres() const { return genre_vectors.size(); }
};

// One SemanticSet per item (indexed by item id), genre order preserved.
// Every unknown token is reported in a single error.
inline std::vector<SemanticSet> encode_genres(const NodeCatalog& catalog,
                                              const GenreEmbeddingTable& table) {
  std::set<std::string> unknown;
  std::vector<SemanticSet> out(catalog.num_items());
  for (std::size_t k = 0; k < catalog.num_items(); ++k) {
    out[k].item_id = NodeId(k);
    STGN_CHECK(!catalog.item_genres[k].empty(),
               "item " + catalog.item_names[k] + " has no genres");
    for (const auto& tok : catalog.item_genres[k]) {
      if (!table.contains(tok)) {
        unknown.insert(tok);
        continue;
      }
      out[k].genre_vectors.push_back(table.at(tok));
    }
  }
  if (!unknown.empty()) {
    std::string msg = "genre tokens missing from embedding table:";
    for (const auto& t : unknown) msg += " " + t;
    throw Error("stgn: " + msg);
  }
  return out;
}

template <class T>
std::vector<ad::Var<T>> genre_constants(ad::Tape<T>& tape, const SemanticSet& set) {
  std::vector<ad::Var<T>> out;
  out.reserve(set.n_genres());
  for (const auto& v : set.genre_vectors) out.push_back(constant_of(tape, v));
  return out;
}

// S_k = sum_n ReLU(W_s s_kn + b_s)
template <class T>
ad::Var<T> aggregate_sum(const std::vector<ad::Var<T>>& genres, const ad::Var<T>& w_s,
                         const ad::Var<T>& b_s) {
  STGN_CHECK(!genres.empty(), "aggregate_sum: empty semantic set");
  std::vector<ad::Var<T>> terms;
  terms.reserve(genres.size());
  for (const auto& s : genres) {
    terms.push_back(ad::relu(ad::add(ad::matvec(w_s, s), b_s)));
  }
  return ad::sum(terms);
}

// E_jk = LeakyReLU(W_u E'_u + W_i E'_i + b_ui), slope 0.01
template <class T>
ad::Var<T> user_specific_embedding(const ad::Var<T>& prev_user, const ad::Var<T>& prev_item,
                                   const ad::Var<T>& w_u, const ad::Var<T>& w_i,
                                   const ad::Var<T>& b_ui) {
  auto pre = ad::add(ad::add(ad::matvec(w_u, prev_user), ad::matvec(w_i, prev_item)),
                     b_ui);
  return ad::leaky_relu(pre, T(0.01));
}

template <class T = Real>
struct UsAttnResult {
  ad::Var<T> s_jk;    // user-specific semantic feature
  ad::Var<T> alphas;  // attention over the item's genres
};

// alpha_n = softmax_n <W_Q E_jk, W_K s_kn>;  S_jk = ReLU(sum_n alpha_n W_V s_kn)
// Projections are shared across genre slots.
template <class T>
UsAttnResult<T> aggregate_usattn(const std::vector<ad::Var<T>>& genres,
                                 const ad::Var<T>& e_jk, const ad::Var<T>& w_q,
                                 const ad::Var<T>& w_k, const ad::Var<T>& w_v) {
  STGN_CHECK(!genres.empty(), "aggregate_usattn: empty semantic set");
  auto query = ad::matvec(w_q, e_jk);
  std::vector<ad::Var<T>> logits, values;
  for (const auto& s : genres) {
    logits.push_back(ad::dot(query, ad::matvec(w_k, s)));
    values.push_back(ad::matvec(w_v, s));
  }
  auto alphas = ad::softmax(ad::stack(logits));
  return {ad::relu(ad::weighted_sum(alphas, values)), alphas};
}

// S_k = N_s * S_jk + E_jk
template <class T>
ad::Var<T> skip_connect(const ad::Var<T>& s_jk, const ad::Var<T>& e_jk, std::size_t n_genres) {
  STGN_CHECK(s_jk.size() == e_jk.size(), "skip_connect: shape mismatch");
  return ad::add(ad::scale(s_jk, static_cast<T>(n_genres)), e_jk);
}

struct SimilarityMatrix {
  std::vector<std::string> tokens;
  std::vector<Vec> values;  // square, row-major by token order
  std::vector<std::string> warnings;
};

// Pairwise cosine similarities. Zero vectors get 0 off-diagonal and 1 on the
// diagonal, with a warning.
inline SimilarityMatrix genre_similarity_matrix(
    const GenreEmbeddingTable& table, const std::vector<std::string>& tokens) {
  SimilarityMatrix m;
  m.tokens = tokens;
  std::vector<const Vec*> vs;
  std::vector<Real> norms;
  for (const auto& tok : tokens) {
    vs.push_back(&table.at(tok));
    Real n2 = 0;
    for (Real x : *vs.back()) n2 += x * x;
    norms.push_back(std::sqrt(n2));
    if (norms.back() == 0) m.warnings.push_back("zero vector for token " + tok);
  }
  const auto n = tokens.size();
  m.values.assign(n, Vec(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    m.values[i][i] = 1;
    for (std::size_t j = i + 1; j < n; ++j) {
      Real c = 0;
      if (norms[i] > 0 && norms[j] > 0) {
        Real d = 0;
        for (std::size_t k = 0; k < vs[i]->size(); ++k) d += (*vs[i])[k] * (*vs[j])[k];
        c = d / (norms[i] * norms[j]);
      }
      m.values[i][j] = m.values[j][i] = c;
    }
  }
  return m;
}

}  // namespace stgn
