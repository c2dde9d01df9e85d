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
#include <numeric>
#include <vector>

#include "stgn/error.hpp"
#include "stgn/params.hpp"

namespace stgn {

// Average precision: mean over positives of precision at the positive's rank.
// Descending score; equal scores keep input order.
inline Real compute_ap(const std::vector<Real>& scores, const std::vector<int>& labels) {
  STGN_CHECK(scores.size() == labels.size(), "compute_ap: size mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t seen_pos = 0;
  Real total = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (labels[order[r]] != 0) {
      ++seen_pos;
      total += static_cast<Real>(seen_pos) / static_cast<Real>(r + 1);
    }
  }
  STGN_CHECK(seen_pos > 0, "compute_ap: no positives");
  return total / static_cast<Real>(seen_pos);
}

// Mann-Whitney AUC: share of (pos, neg) pairs ordered correctly, ties
// counting one half. Runs in O(n log n) by sweeping tie groups.
inline Real compute_auc(const std::vector<Real>& scores, const std::vector<int>& labels) {
  STGN_CHECK(scores.size() == labels.size(), "compute_auc: size mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // twice the count, to stay in integers
  unsigned long long twice = 0, neg_below = 0, n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    unsigned long long p = 0, n = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] != 0 ? p : n) += 1;
      ++j;
    }
    twice += p * (2 * neg_below + n);
    neg_below += n;
    n_pos += p;
    n_neg += n;
    i = j;
  }
  STGN_CHECK(n_pos > 0 && n_neg > 0, "compute_auc: need both classes");
  return (static_cast<Real>(twice) / 2) / static_cast<Real>(n_pos * n_neg);
}

}  // namespace stgn
