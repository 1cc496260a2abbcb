// tests/test_support.h

// Copyright 2026  The espum Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Random fixtures and brute-force oracles shared by the unit tests and the
// acceptance binary. Everything here is deliberately naive.

#ifndef ESPUM_TESTS_TEST_SUPPORT_H_
#define ESPUM_TESTS_TEST_SUPPORT_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "espum/corpus.h"
#include "espum/stats.h"
#include "espum/tensor.h"
#include "espum/util.h"

namespace espum::testing {

inline PhonemeCorpus RandomCorpus(Rng &rng, int vocab, int max_len, int n_seq,
                                  int min_len = 1) {
  PhonemeCorpus c;
  for (int i = 0; i < n_seq; ++i) {
    int len = min_len + static_cast<int>(rng.Below(max_len - min_len + 1));
    PhonemeSequence s;
    for (int j = 0; j < len; ++j) s.push_back(static_cast<int>(rng.Below(vocab)));
    c.sequences.push_back(s);
  }
  return c;
}

// Random row-stochastic matrix.
inline Tensor RandomRows(Rng &rng, int rows, int vocab) {
  Tensor t = Tensor::Matrix(rows, vocab);
  for (int r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (int v = 0; v < vocab; ++v) {
      t(r, v) = std::exp(2.0 * rng.Normal());
      sum += t(r, v);
    }
    for (int v = 0; v < vocab; ++v) t(r, v) /= sum;
  }
  return t;
}

inline SkipSpec RandomSpec(Rng &rng, int max_order, int max_offset) {
  SkipSpec s;
  int n = 2 + static_cast<int>(rng.Below(max_order - 1));
  for (int i = 1; i < n; ++i) s.offsets.push_back(1 + static_cast<int>(rng.Below(max_offset)));
  return s;
}

// Brute-force skipgram counts: every anchor, every tuple, as a map.
inline std::map<std::vector<int>, double> BruteSkipgrams(
    const PhonemeCorpus &c, const std::vector<int> &offsets) {
  std::map<std::vector<int>, double> counts;
  double total = 0;
  for (const auto &s : c.sequences) {
    for (std::size_t t = 0; t < s.size(); ++t) {
      std::vector<int> tuple{s[t]};
      std::size_t pos = t;
      bool ok = true;
      for (int k : offsets) {
        pos += k;
        if (pos >= s.size()) { ok = false; break; }
        tuple.push_back(s[pos]);
      }
      if (!ok) continue;
      counts[tuple] += 1;
      total += 1;
    }
  }
  for (auto &[k, v] : counts) v /= total;
  return counts;
}

// Expected tuple probabilities under independent rows, pooled over anchors.
inline std::map<std::vector<int>, double> BruteExpectedSkipgrams(
    const std::vector<Tensor> &batch, const std::vector<int> &offsets,
    int vocab) {
  std::map<std::vector<int>, double> out;
  double anchors = 0;
  const int n = static_cast<int>(offsets.size()) + 1;
  for (const auto &rows : batch) {
    const int len = static_cast<int>(rows.rows());
    for (int t = 0; t < len; ++t) {
      std::vector<int> pos{t};
      for (int k : offsets) pos.push_back(pos.back() + k);
      if (pos.back() >= len) continue;
      anchors += 1;
      std::vector<int> tuple(n, 0);
      std::function<void(int, double)> rec = [&](int i, double p) {
        if (i == n) {
          out[tuple] += p;
          return;
        }
        for (int a = 0; a < vocab; ++a) {
          tuple[i] = a;
          rec(i + 1, p * rows(pos[i], a));
        }
      };
      rec(0, 1.0);
    }
  }
  for (auto &[k, v] : out) v /= anchors;
  return out;
}

// Maximum one-to-one matching of hyp to ref within the tolerance, by
// exhaustive search.
inline int BruteMaxMatching(const std::vector<int> &ref,
                            const std::vector<int> &hyp, int tol) {
  std::vector<bool> used(ref.size(), false);
  std::function<int(std::size_t)> rec = [&](std::size_t h) -> int {
    if (h == hyp.size()) return 0;
    int best = rec(h + 1);
    for (std::size_t r = 0; r < ref.size(); ++r) {
      if (used[r] || std::abs(ref[r] - hyp[h]) > tol) continue;
      used[r] = true;
      best = std::max(best, 1 + rec(h + 1));
      used[r] = false;
    }
    return best;
  };
  return rec(0);
}

inline int BruteCovered(const std::vector<int> &points,
                        const std::vector<int> &against, int tol) {
  int n = 0;
  for (int p : points)
    for (int q : against)
      if (std::abs(p - q) <= tol) {
        ++n;
        break;
      }
  return n;
}

// Pools frames uniformly within hard segments delimited by boundary flags.
inline Tensor BrutePool(const std::vector<std::uint8_t> &flags,
                        const Tensor &frames) {
  std::vector<int> seg(flags.size(), 0);
  for (std::size_t t = 1; t < flags.size(); ++t) seg[t] = seg[t - 1] + (flags[t] ? 1 : 0);
  int l = seg.back() + 1;
  Tensor out = Tensor::Matrix(l, frames.cols());
  std::vector<int> count(l, 0);
  for (std::size_t t = 0; t < flags.size(); ++t) {
    ++count[seg[t]];
    for (std::size_t d = 0; d < frames.cols(); ++d) out(seg[t], d) += frames(t, d);
  }
  for (int i = 0; i < l; ++i)
    for (std::size_t d = 0; d < frames.cols(); ++d) out(i, d) /= count[i];
  return out;
}

// Classic Levenshtein by full dynamic programming.
inline int BruteEditDistance(const std::vector<int> &a, const std::vector<int> &b) {
  std::vector<std::vector<int>> d(a.size() + 1, std::vector<int>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d[a.size()][b.size()];
}

}  // namespace espum::testing

#endif  // ESPUM_TESTS_TEST_SUPPORT_H_
