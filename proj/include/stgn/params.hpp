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
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "stgn/ad/tape.hpp"
#include "stgn/error.hpp"

namespace stgn {

using Real = double;
using Param = ad::Param<Real>;
using Tape = ad::Tape<Real>;
using Var = ad::Var<Real>;
using Vec = std::vector<Real>;

template <class T>
using VarOf = ad::Var<T>;

// Named trainable tensors. Iteration order is the lexicographic name order,
// which is what checkpoints and gradient checks rely on.
template <class T>
class BasicParamStore {
 public:
  using ParamType = ad::Param<T>;

  BasicParamStore() = default;

  // Element-wise conversion from a store of another scalar type.
  template <class U>
  explicit BasicParamStore(const BasicParamStore<U>& other) {
    for (const auto& [name, p] : other) {
      auto& q = add(name, p.rows, p.cols);
      for (std::size_t i = 0; i < p.size(); ++i) q.value[i] = static_cast<T>(p.value[i]);
    }
  }

  ParamType& add(const std::string& name, std::size_t rows, std::size_t cols) {
    STGN_CHECK(!params_.contains(name), "duplicate parameter " + name);
    return params_.emplace(name, ParamType(name, rows, cols)).first->second;
  }
  [[nodiscard]] bool contains(const std::string& name) const {
    return params_.contains(name);
  }
  ParamType& at(const std::string& name) {
    auto it = params_.find(name);
    STGN_CHECK(it != params_.end(), "unknown parameter " + name);
    return it->second;
  }
  [[nodiscard]] const ParamType& at(const std::string& name) const {
    auto it = params_.find(name);
    STGN_CHECK(it != params_.end(), "unknown parameter " + name);
    return it->second;
  }
  void zero_grad() {
    for (auto& [_, p] : params_) p.zero_grad();
  }
  [[nodiscard]] std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, p] : params_) n += p.size();
    return n;
  }
  [[nodiscard]] std::size_t size() const { return params_.size(); }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  [[nodiscard]] auto begin() const { return params_.begin(); }
  [[nodiscard]] auto end() const { return params_.end(); }

  [[nodiscard]] bool all_finite() const {
    for (const auto& [_, p] : params_) {
      for (T v : p.value) {
        if (!std::isfinite(v)) return false;
      }
    }
    return true;
  }

 private:
  std::map<std::string, ParamType> params_;
};

using ParamStore = BasicParamStore<Real>;

// Copies a Vec onto a tape of any scalar type.
template <class T>
ad::Var<T> constant_of(ad::Tape<T>& tape, const Vec& v) {
  return tape.constant(std::vector<T>(v.begin(), v.end()));
}

// Glorot-uniform fill for a weight matrix.
inline void init_glorot(Param& p, std::mt19937_64& rng) {
  const Real limit = std::sqrt(Real(6) / static_cast<Real>(p.rows + p.cols));
  std::uniform_real_distribution<Real> dist(-limit, limit);
  for (auto& v : p.value) v = dist(rng);
}

inline void init_normal(Param& p, std::mt19937_64& rng, Real stddev = 1) {
  std::normal_distribution<Real> dist(0, stddev);
  for (auto& v : p.value) v = dist(rng);
}

// Adaptive-moment gradient descent over every tensor in a ParamStore.
class Adam {
 public:
  explicit Adam(Real lr, Real beta1 = 0.9, Real beta2 = 0.999,
                Real eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamStore& store) {
    ++t_;
    const Real c1 = 1 - std::pow(beta1_, static_cast<Real>(t_));
    const Real c2 = 1 - std::pow(beta2_, static_cast<Real>(t_));
    for (auto& [name, p] : store) {
      auto& st = state_[name];
      if (st.m.size() != p.size()) {
        st.m.assign(p.size(), 0);
        st.v.assign(p.size(), 0);
      }
      for (std::size_t i = 0; i < p.size(); ++i) {
        const Real g = p.grad[i];
        st.m[i] = beta1_ * st.m[i] + (1 - beta1_) * g;
        st.v[i] = beta2_ * st.v[i] + (1 - beta2_) * g * g;
        const Real mhat = st.m[i] / c1;
        const Real vhat = st.v[i] / c2;
        p.value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  [[nodiscard]] Real learning_rate() const { return lr_; }

 private:
  struct Moments {
    std::vector<Real> m, v;
  };
  Real lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace stgn
