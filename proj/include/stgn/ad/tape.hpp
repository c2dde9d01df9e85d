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
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stgn/error.hpp"

// Minimal tape-based reverse-mode differentiation over dense vectors and
// row-major matrices. Every recorded node owns its value; gradients are
// allocated lazily during the backward sweep and flushed into the Param
// objects that were bound as leaves.
namespace stgn::ad {

template <class T>
struct Param {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> value;
  std::vector<T> grad;

  Param() = default;
  Param(std::string n, std::size_t r, std::size_t c)
      : name(std::move(n)), rows(r), cols(c), value(r * c, T(0)),
        grad(r * c, T(0)) {}

  [[nodiscard]] std::size_t size() const { return value.size(); }
  T& at(std::size_t r, std::size_t c) { return value[r * cols + c]; }
  const T& at(std::size_t r, std::size_t c) const {
    return value[r * cols + c];
  }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

template <class T>
class Tape;

template <class T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  [[nodiscard]] bool valid() const { return tape_ != nullptr; }
  [[nodiscard]] Tape<T>& tape() const { return *tape_; }
  [[nodiscard]] std::size_t id() const { return id_; }
  [[nodiscard]] const std::vector<T>& value() const {
    return tape_->value(*this);
  }
  [[nodiscard]] std::size_t size() const { return value().size(); }
  [[nodiscard]] std::size_t rows() const { return tape_->rows(*this); }
  [[nodiscard]] std::size_t cols() const { return tape_->cols(*this); }
  [[nodiscard]] T scalar() const {
    STGN_CHECK(size() == 1, "scalar() on a non-scalar node");
    return value()[0];
  }
  [[nodiscard]] const std::vector<T>& grad() const {
    return tape_->grad(*this);
  }

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

template <class T>
class Tape {
 public:
  using BackFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(std::vector<T> v, std::size_t rows, std::size_t cols = 1) {
    STGN_CHECK(v.size() == rows * cols, "constant: shape mismatch");
    return push(std::move(v), rows, cols, nullptr);
  }
  Var<T> constant(std::vector<T> v) {
    const auto n = v.size();
    return push(std::move(v), n, 1, nullptr);
  }
  Var<T> zeros(std::size_t n) { return constant(std::vector<T>(n, T(0))); }

  // Binds a parameter as a leaf. Repeated binds of the same Param return the
  // same node so that gradients from every use accumulate in one place.
  Var<T> parameter(Param<T>& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
      return Var<T>(this, it->second);
    }
    auto v = push(p.value, p.rows, p.cols, nullptr);
    nodes_[v.id()].param = &p;
    param_nodes_.emplace(&p, v.id());
    return v;
  }

  Var<T> push(std::vector<T> value, std::size_t rows, std::size_t cols,
              BackFn back) {
    nodes_.push_back(Node{std::move(value), {}, rows, cols, std::move(back),
                          nullptr});
    return Var<T>(this, nodes_.size() - 1);
  }

  [[nodiscard]] const std::vector<T>& value(const Var<T>& v) const {
    return nodes_[v.id()].value;
  }
  [[nodiscard]] std::size_t rows(const Var<T>& v) const {
    return nodes_[v.id()].rows;
  }
  [[nodiscard]] std::size_t cols(const Var<T>& v) const {
    return nodes_[v.id()].cols;
  }
  [[nodiscard]] const std::vector<T>& grad(const Var<T>& v) const {
    return nodes_[v.id()].grad;
  }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  // Gradient buffer of node `id`, allocated on first touch.
  std::vector<T>& grad_of(std::size_t id) {
    auto& n = nodes_[id];
    if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), T(0));
    return n.grad;
  }
  const std::vector<T>& value_of(std::size_t id) const {
    return nodes_[id].value;
  }
  [[nodiscard]] bool has_grad(std::size_t id) const {
    return nodes_[id].grad.size() == nodes_[id].value.size() &&
           !nodes_[id].value.empty();
  }

  // Reverse sweep from a scalar root; accumulates into bound Params.
  void backward(const Var<T>& root) {
    STGN_CHECK(root.size() == 1, "backward: root must be scalar");
    grad_of(root.id())[0] += T(1);
    for (std::size_t i = root.id() + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (n.grad.size() != n.value.size()) continue;
      if (n.backward) n.backward(*this, i);
      if (n.param != nullptr) {
        for (std::size_t k = 0; k < n.grad.size(); ++k) {
          n.param->grad[k] += n.grad[k];
        }
      }
    }
  }

  // Piecewise-linear activations report their inputs here so that a finite
  // difference probe can tell whether a perturbation crossed a kink.
  void note_kink_inputs(std::span<const T> xs) {
    for (const T& x : xs) {
      const bool positive = x > T(0);
      kink_hash_ = (kink_hash_ ^ (positive ? 0x9eu : 0x3bu)) * 0x100000001b3ull;
      const T margin = std::abs(x);
      if (margin < kink_margin_) kink_margin_ = margin;
    }
  }
  [[nodiscard]] std::uint64_t kink_signature() const { return kink_hash_; }
  [[nodiscard]] T kink_margin() const { return kink_margin_; }

 private:
  struct Node {
    std::vector<T> value;
    std::vector<T> grad;
    std::size_t rows = 0;
    std::size_t cols = 1;
    BackFn backward;
    Param<T>* param = nullptr;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Param<T>*, std::size_t> param_nodes_;
  std::uint64_t kink_hash_ = 0xcbf29ce484222325ull;
  T kink_margin_ = std::numeric_limits<T>::infinity();
};

}  // namespace stgn::ad
