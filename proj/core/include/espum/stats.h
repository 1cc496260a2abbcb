// core/include/espum/stats.h

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

// N-skipgram and positional-unigram statistics.
//
// An N-skipgram with offsets k = (k_1, ..., k_{N-1}) is the joint
// distribution of (y_t, y_{t+k_1}, ..., y_{t+k_1+...+k_{N-1}}), pooled over
// every anchor t that fits inside its sequence and over all sequences of a
// corpus (or batch). A plain bigram is N = 2, k = (1).
//
// Two estimators share each statistic: counting over label sequences, and
// the expectation over per-position probability rows (the model side).
// On one-hot rows the two agree exactly.

#ifndef ESPUM_STATS_H_
#define ESPUM_STATS_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "espum/corpus.h"
#include "espum/tensor.h"

namespace espum {

struct SkipSpec {
  std::vector<int> offsets;  // N - 1 positive offsets

  int order() const { return static_cast<int>(offsets.size()) + 1; }
  int span() const;  // sum of offsets
  std::string ToString() const;  // "2:1", "3:2,2"
  bool operator==(const SkipSpec &) const = default;
  auto operator<=>(const SkipSpec &) const = default;
};

// A skip-size set; entries are unique with offsets >= 1.
using SkipSizeSet = std::vector<SkipSpec>;

void ValidateSkipSizeSet(const SkipSizeSet &set);
// Parses "2:1 2:2 3:1,1" (whitespace separated order:offsets entries).
SkipSizeSet ParseSkipSizeSet(const std::string &text);
std::string FormatSkipSizeSet(const SkipSizeSet &set);

// Bigram skip sizes 1..max_bigram_skip and trigram skip sizes
// (s, s) for s in 1..max_trigram_skip.
SkipSizeSet UniformSkipSizes(int max_bigram_skip, int max_trigram_skip);

class SkipgramDist {
 public:
  // Tuples are keyed by their base-|V| encoding, which orders keys
  // lexicographically by tuple. Orders up to 3 are stored densely.
  static constexpr int kMaxDenseOrder = 3;

  SkipgramDist() = default;
  SkipgramDist(int vocab_size, SkipSpec spec);

  int vocab_size() const { return vocab_size_; }
  int order() const { return spec_.order(); }
  const SkipSpec &spec() const { return spec_; }
  const std::vector<int> &offsets() const { return spec_.offsets; }
  bool is_dense() const { return order() <= kMaxDenseOrder; }
  bool truncated() const { return truncated_; }
  void set_truncated(bool t) { truncated_ = t; }

  std::uint64_t tuple_count() const { return tuple_count_; }
  std::uint64_t Encode(std::span<const int> tuple) const;
  std::vector<int> Decode(std::uint64_t key) const;

  double Get(std::uint64_t key) const;
  double Prob(std::span<const int> tuple) const { return Get(Encode(tuple)); }
  void Add(std::uint64_t key, double value);
  void Set(std::uint64_t key, double value);
  void Scale(double factor);

  double total_mass() const;
  // Number of stored probability slots (dense slots or sparse entries).
  std::size_t stored_entries() const;

  // Visits stored entries in key order; dense storage skips exact zeros
  // unless `include_zeros`.
  template <typename F>
  void ForEach(F &&fn, bool include_zeros = false) const {
    if (is_dense()) {
      for (std::size_t k = 0; k < dense_.size(); ++k)
        if (include_zeros || dense_[k] != 0.0) fn(std::uint64_t{k}, dense_[k]);
    } else {
      for (const auto &[k, v] : sparse_) fn(k, v);
    }
  }

  // Raw dense storage (orders <= 3).
  std::vector<double> &dense() { return dense_; }
  const std::vector<double> &dense() const { return dense_; }

 private:
  int vocab_size_ = 0;
  SkipSpec spec_;
  std::uint64_t tuple_count_ = 0;
  bool truncated_ = false;
  std::vector<double> dense_;
  std::map<std::uint64_t, double> sparse_;
};

// probs is positions x vocab; row l sums to mass[l], the fraction of
// sequences long enough to have a symbol at position l.
struct PositionalUnigram {
  int positions = 0;
  int vocab_size = 0;
  std::vector<double> probs;
  std::vector<double> mass;

  double At(int l, int v) const {
    return probs[static_cast<std::size_t>(l) * vocab_size + v];
  }
  std::size_t stored_entries() const { return probs.size(); }
};

// Counting estimators over label sequences. Throws kNoSupport when no
// sequence can host a single skipgram.
SkipgramDist CountSkipgrams(const PhonemeCorpus &corpus, int vocab_size,
                            const SkipSpec &spec);
PositionalUnigram CountPositionalUnigram(const PhonemeCorpus &corpus,
                                         int vocab_size, int positions);

// Keeps the K most probable tuples (ties: lexicographically smaller tuple
// first). The kept mass is not renormalized.
SkipgramDist TopK(const SkipgramDist &dist, std::size_t k);

// Expected statistics of a batch of per-position probability rows
// (each tensor is length x vocab). If `support` is given, only its tuples
// are computed; this is how truncated high-order targets are matched
// without materializing |V|^N entries.
SkipgramDist ExpectedSkipgrams(std::span<const Tensor> batch,
                               const SkipSpec &spec,
                               const SkipgramDist *support = nullptr);
// Accumulates d(loss)/d(rows) into `grads` (same shapes as `batch`) given
// d(loss)/d(probability) for every tuple of `upstream`.
void ExpectedSkipgramsBackward(std::span<const Tensor> batch,
                               const SkipgramDist &upstream,
                               std::span<Tensor> grads);

PositionalUnigram ExpectedPositionalUnigram(std::span<const Tensor> batch,
                                            int positions);
void ExpectedPositionalUnigramBackward(std::span<const Tensor> batch,
                                       const PositionalUnigram &upstream,
                                       std::span<Tensor> grads);

// Sum of absolute differences over the union of both supports, missing
// entries counted as 0. Throws kShapeMismatch on order/offset/vocab
// mismatch.
double L1Distance(const SkipgramDist &a, const SkipgramDist &b);
// Summed over positions.
double L1Distance(const PositionalUnigram &a, const PositionalUnigram &b);

// "sym sym<TAB>prob" lines, most probable first, ties lexicographic.
void WriteSkipgramDist(const SkipgramDist &dist, const Vocab &vocab,
                       std::ostream &out);
void WritePositionalUnigram(const PositionalUnigram &uni, const Vocab &vocab,
                            std::ostream &out);

}  // namespace espum

#endif  // ESPUM_STATS_H_
