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
#include <functional>
#include <random>
#include <vector>

#include "stgn/ad/ops.hpp"
#include "stgn/params.hpp"

namespace stgn::testing {

using Build = std::function<Var(Tape&, const std::vector<Var>&)>;

struct Shape {
  std::size_t rows, cols;
};

// Reduces an op's output to a scalar with fixed random weights, so every
// output coordinate contributes to the gradient being checked.
inline Var project(Tape& tape, const Var& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> d(-1, 1);
  Vec w(y.size());
  for (auto& x : w) x = d(rng);
  return ad::dot(y, tape.constant(w));
}

// Largest |g_a - g_fd| / max(1e-8, |g_a| + |g_fd|) over every input entry.
inline Real max_rel_fd_error(const Build& build, std::vector<Param>& inputs,
                             Real eps = 1e-5) {
  auto loss = [&](std::vector<Param>& in, bool grad) {
    Tape tape;
    std::vector<Var> vars;
    for (auto& p : in) vars.push_back(tape.parameter(p));
    auto y = project(tape, build(tape, vars), 99);
    if (grad) tape.backward(y);
    return y.scalar();
  };
  for (auto& p : inputs) p.zero_grad();
  loss(inputs, true);
  Real worst = 0;
  for (auto& p : inputs) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Real x0 = p.value[i];
      p.value[i] = x0 + eps;
      const Real up = loss(inputs, false);
      p.value[i] = x0 - eps;
      const Real dn = loss(inputs, false);
      p.value[i] = x0;
      const Real fd = (up - dn) / (2 * eps);
      const Real ga = p.grad[i];
      worst = std::max(worst, std::abs(ga - fd) / std::max(Real(1e-8), std::abs(ga) + std::abs(fd)));
    }
  }
  return worst;
}

inline std::vector<Param> random_inputs(const std::vector<Shape>& shapes, std::uint64_t seed,
                                        Real lo = -1, Real hi = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> d(lo, hi);
  std::vector<Param> out;
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    Param p("x" + std::to_string(k), shapes[k].rows, shapes[k].cols);
    for (auto& v : p.value) v = d(rng);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace stgn::testing
