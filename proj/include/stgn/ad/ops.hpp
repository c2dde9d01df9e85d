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
#include <numbers>
#include <span>
#include <vector>

#include "stgn/ad/tape.hpp"

namespace stgn::ad {

namespace detail {

template <class T>
void check_same_tape(const Var<T>& a, const Var<T>& b) {
  STGN_CHECK(&a.tape() == &b.tape(), "operands live on different tapes");
}

template <class T, class Fwd, class Dfdx>
Var<T> unary(const Var<T>& a, Fwd fwd, Dfdx dfdx) {
  auto& tape = a.tape();
  const auto& x = a.value();
  std::vector<T> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  const std::size_t ia = a.id();
  return tape.push(std::move(y), a.rows(), a.cols(),
                   [ia, dfdx](Tape<T>& t, std::size_t self) {
                     const auto& gy = t.grad_of(self);
                     const auto& xv = t.value_of(ia);
                     const auto& yv = t.value_of(self);
                     auto& gx = t.grad_of(ia);
                     for (std::size_t i = 0; i < gy.size(); ++i) {
                       gx[i] += gy[i] * dfdx(xv[i], yv[i]);
                     }
                   });
}

}  // namespace detail

// y = W x, with W stored row-major as rows x cols.
template <class T>
Var<T> matvec(const Var<T>& w, const Var<T>& x) {
  detail::check_same_tape(w, x);
  const std::size_t r = w.rows(), c = w.cols();
  STGN_CHECK(x.size() == c, "matvec: shape mismatch (" + std::to_string(r) +
                                "x" + std::to_string(c) + " * " +
                                std::to_string(x.size()) + ")");
  const auto& wv = w.value();
  const auto& xv = x.value();
  std::vector<T> y(r, T(0));
  for (std::size_t i = 0; i < r; ++i) {
    T acc = T(0);
    const T* row = wv.data() + i * c;
    for (std::size_t j = 0; j < c; ++j) acc += row[j] * xv[j];
    y[i] = acc;
  }
  const std::size_t iw = w.id(), ix = x.id();
  return w.tape().push(std::move(y), r, 1,
                       [iw, ix, r, c](Tape<T>& t, std::size_t self) {
                         const auto gy = t.grad_of(self);
                         const auto& wv = t.value_of(iw);
                         const auto& xv = t.value_of(ix);
                         auto& gw = t.grad_of(iw);
                         for (std::size_t i = 0; i < r; ++i) {
                           if (gy[i] == T(0)) continue;
                           T* grow = gw.data() + i * c;
                           for (std::size_t j = 0; j < c; ++j) {
                             grow[j] += gy[i] * xv[j];
                           }
                         }
                         auto& gx = t.grad_of(ix);
                         for (std::size_t i = 0; i < r; ++i) {
                           if (gy[i] == T(0)) continue;
                           const T* row = wv.data() + i * c;
                           for (std::size_t j = 0; j < c; ++j) {
                             gx[j] += gy[i] * row[j];
                           }
                         }
                       });
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::check_same_tape(a, b);
  STGN_CHECK(a.size() == b.size(), "add: size mismatch");
  std::vector<T> y(a.value());
  const auto& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().push(std::move(y), a.rows(), a.cols(),
                       [ia, ib](Tape<T>& t, std::size_t self) {
                         const auto gy = t.grad_of(self);
                         auto& ga = t.grad_of(ia);
                         for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
                         auto& gb = t.grad_of(ib);
                         for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i];
                       });
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  detail::check_same_tape(a, b);
  STGN_CHECK(a.size() == b.size(), "sub: size mismatch");
  std::vector<T> y(a.value());
  const auto& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().push(std::move(y), a.rows(), a.cols(),
                       [ia, ib](Tape<T>& t, std::size_t self) {
                         const auto gy = t.grad_of(self);
                         auto& ga = t.grad_of(ia);
                         for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
                         auto& gb = t.grad_of(ib);
                         for (std::size_t i = 0; i < gy.size(); ++i) gb[i] -= gy[i];
                       });
}

// Elementwise product.
template <class T>
Var<T> hadamard(const Var<T>& a, const Var<T>& b) {
  detail::check_same_tape(a, b);
  STGN_CHECK(a.size() == b.size(), "hadamard: size mismatch");
  std::vector<T> y(a.value());
  const auto& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().push(std::move(y), a.rows(), a.cols(),
                       [ia, ib](Tape<T>& t, std::size_t self) {
                         const auto gy = t.grad_of(self);
                         const auto& av = t.value_of(ia);
                         const auto& bv = t.value_of(ib);
                         auto& ga = t.grad_of(ia);
                         for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv[i];
                         auto& gb = t.grad_of(ib);
                         for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av[i];
                       });
}

template <class T>
Var<T> scale(const Var<T>& a, T c) {
  return detail::unary<T>(
      a, [c](T x) { return c * x; }, [c](T, T) { return c; });
}

template <class T>
Var<T> one_minus(const Var<T>& a) {
  return detail::unary<T>(
      a, [](T x) { return T(1) - x; }, [](T, T) { return T(-1); });
}

template <class T>
Var<T> relu(const Var<T>& a) {
  a.tape().note_kink_inputs(std::span<const T>(a.value()));
  return detail::unary<T>(
      a, [](T x) { return x > T(0) ? x : T(0); },
      [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <class T>
Var<T> leaky_relu(const Var<T>& a, T slope = T(0.01)) {
  a.tape().note_kink_inputs(std::span<const T>(a.value()));
  return detail::unary<T>(
      a, [slope](T x) { return x > T(0) ? x : slope * x; },
      [slope](T x, T) { return x > T(0) ? T(1) : slope; });
}

template <class T>
T sigmoid_value(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <class T>
Var<T> sigmoid(const Var<T>& a) {
  return detail::unary<T>(
      a, [](T x) { return sigmoid_value(x); },
      [](T, T y) { return y * (T(1) - y); });
}

template <class T>
Var<T> tanh(const Var<T>& a) {
  return detail::unary<T>(
      a, [](T x) { return std::tanh(x); },
      [](T, T y) { return T(1) - y * y; });
}

// Exact (erf) form.
template <class T>
Var<T> gelu(const Var<T>& a) {
  return detail::unary<T>(
      a,
      [](T x) {
        return T(0.5) * x * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
      },
      [](T x, T) {
        const T cdf = T(0.5) * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
        const T pdf = std::exp(T(-0.5) * x * x) /
                      std::sqrt(T(2) * std::numbers::pi_v<T>);
        return cdf + x * pdf;
      });
}

template <class T>
Var<T> cos(const Var<T>& a) {
  return detail::unary<T>(
      a, [](T x) { return std::cos(x); }, [](T x, T) { return -std::sin(x); });
}

template <class T>
Var<T> sin(const Var<T>& a) {
  return detail::unary<T>(
      a, [](T x) { return std::sin(x); }, [](T x, T) { return std::cos(x); });
}

template <class T>
Var<T> concat(const std::vector<Var<T>>& parts) {
  STGN_CHECK(!parts.empty(), "concat: no operands");
  auto& tape = parts.front().tape();
  std::vector<T> y;
  std::vector<std::size_t> ids;
  for (const auto& p : parts) {
    detail::check_same_tape(parts.front(), p);
    const auto& v = p.value();
    y.insert(y.end(), v.begin(), v.end());
    ids.push_back(p.id());
  }
  const auto n = y.size();
  return tape.push(std::move(y), n, 1,
                   [ids](Tape<T>& t, std::size_t self) {
                     const auto gy = t.grad_of(self);
                     std::size_t off = 0;
                     for (auto id : ids) {
                       const auto len = t.value_of(id).size();
                       if (len == 0) continue;
                       auto& g = t.grad_of(id);
                       for (std::size_t i = 0; i < len; ++i) g[i] += gy[off + i];
                       off += len;
                     }
                   });
}

template <class T>
Var<T> dot(const Var<T>& a, const Var<T>& b) {
  detail::check_same_tape(a, b);
  STGN_CHECK(a.size() == b.size(), "dot: size mismatch");
  const auto& av = a.value();
  const auto& bv = b.value();
  T acc = T(0);
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().push({acc}, 1, 1, [ia, ib](Tape<T>& t, std::size_t self) {
    const T g = t.grad_of(self)[0];
    const auto& av = t.value_of(ia);
    const auto& bv = t.value_of(ib);
    auto& ga = t.grad_of(ia);
    for (std::size_t i = 0; i < av.size(); ++i) ga[i] += g * bv[i];
    auto& gb = t.grad_of(ib);
    for (std::size_t i = 0; i < bv.size(); ++i) gb[i] += g * av[i];
  });
}

// Packs scalar nodes into one vector.
template <class T>
Var<T> stack(const std::vector<Var<T>>& scalars) {
  return concat(scalars);
}

// Softmax with max subtraction.
template <class T>
Var<T> softmax(const Var<T>& a) {
  const auto& x = a.value();
  STGN_CHECK(!x.empty(), "softmax: empty input");
  const T mx = *std::max_element(x.begin(), x.end());
  std::vector<T> y(x.size());
  T z = T(0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - mx);
    z += y[i];
  }
  for (auto& v : y) v /= z;
  const std::size_t ia = a.id();
  const auto n = y.size();
  return a.tape().push(std::move(y), n, 1, [ia](Tape<T>& t, std::size_t self) {
    const auto gy = t.grad_of(self);
    const auto& y = t.value_of(self);
    T s = T(0);
    for (std::size_t i = 0; i < y.size(); ++i) s += gy[i] * y[i];
    auto& gx = t.grad_of(ia);
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] += y[i] * (gy[i] - s);
  });
}

// sum_n weights[n] * values[n]
template <class T>
Var<T> weighted_sum(const Var<T>& weights, const std::vector<Var<T>>& values) {
  STGN_CHECK(!values.empty(), "weighted_sum: no values");
  STGN_CHECK(weights.size() == values.size(), "weighted_sum: arity mismatch");
  const auto& w = weights.value();
  const auto d = values.front().size();
  std::vector<T> y(d, T(0));
  std::vector<std::size_t> ids;
  for (std::size_t n = 0; n < values.size(); ++n) {
    STGN_CHECK(values[n].size() == d, "weighted_sum: ragged values");
    const auto& v = values[n].value();
    for (std::size_t i = 0; i < d; ++i) y[i] += w[n] * v[i];
    ids.push_back(values[n].id());
  }
  const std::size_t iw = weights.id();
  return weights.tape().push(
      std::move(y), d, 1, [iw, ids](Tape<T>& t, std::size_t self) {
        const auto gy = t.grad_of(self);
        const auto w = t.value_of(iw);
        std::vector<T> gw(ids.size(), T(0));
        for (std::size_t n = 0; n < ids.size(); ++n) {
          const auto& v = t.value_of(ids[n]);
          auto& gv = t.grad_of(ids[n]);
          for (std::size_t i = 0; i < gy.size(); ++i) {
            gw[n] += gy[i] * v[i];
            gv[i] += gy[i] * w[n];
          }
        }
        auto& gwt = t.grad_of(iw);
        for (std::size_t n = 0; n < ids.size(); ++n) gwt[n] += gw[n];
      });
}

template <class T>
Var<T> sum(const std::vector<Var<T>>& values) {
  STGN_CHECK(!values.empty(), "sum: no operands");
  const auto d = values.front().size();
  std::vector<T> y(d, T(0));
  std::vector<std::size_t> ids;
  for (const auto& v : values) {
    STGN_CHECK(v.size() == d, "sum: ragged operands");
    const auto& vv = v.value();
    for (std::size_t i = 0; i < d; ++i) y[i] += vv[i];
    ids.push_back(v.id());
  }
  return values.front().tape().push(
      std::move(y), d, 1, [ids](Tape<T>& t, std::size_t self) {
        const auto gy = t.grad_of(self);
        for (auto id : ids) {
          auto& g = t.grad_of(id);
          for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i];
        }
      });
}

template <class T>
Var<T> mean(const std::vector<Var<T>>& values) {
  return scale(sum(values), T(1) / static_cast<T>(values.size()));
}

// Binary cross entropy evaluated on the logit: softplus(-z) for a positive
// label, softplus(z) for a negative one. Equal to -[p log s + (1-p) log(1-s)]
// with s = sigmoid(z), without forming log(s) explicitly.
template <class T>
Var<T> bce_with_logit(const Var<T>& z, bool positive) {
  STGN_CHECK(z.size() == 1, "bce_with_logit: scalar logit expected");
  auto softplus = [](T x) {
    return x > T(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  };
  const T zv = z.scalar();
  const T y = positive ? softplus(-zv) : softplus(zv);
  const std::size_t iz = z.id();
  return z.tape().push({y}, 1, 1,
                       [iz, positive](Tape<T>& t, std::size_t self) {
                         const T g = t.grad_of(self)[0];
                         const T s = sigmoid_value(t.value_of(iz)[0]);
                         t.grad_of(iz)[0] += g * (positive ? s - T(1) : s);
                       });
}

}  // namespace stgn::ad
