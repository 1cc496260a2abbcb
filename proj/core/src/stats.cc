// core/src/stats.cc

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

#include "espum/stats.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

#include "espum/error.h"
#include "espum/util.h"

namespace espum {

int SkipSpec::span() const {
  return std::accumulate(offsets.begin(), offsets.end(), 0);
}

std::string SkipSpec::ToString() const {
  std::string s = std::to_string(order()) + ":";
  for (std::size_t i = 0; i < offsets.size(); ++i)
    s += (i ? "," : "") + std::to_string(offsets[i]);
  return s;
}

void ValidateSkipSizeSet(const SkipSizeSet &set) {
  std::set<SkipSpec> seen;
  for (const auto &s : set) {
    if (s.offsets.empty())
      throw Error(ErrorCode::kInvalidArgument, "skipgram order must be >= 2");
    for (int k : s.offsets)
      if (k < 1)
        throw Error(ErrorCode::kInvalidArgument,
                    "skip offsets must be >= 1 in " + s.ToString());
    if (!seen.insert(s).second)
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate skip size " + s.ToString());
  }
}

SkipSizeSet ParseSkipSizeSet(const std::string &text) {
  SkipSizeSet set;
  for (auto tok : SplitWhitespace(text)) {
    auto colon = tok.find(':');
    long long order;
    if (colon == std::string_view::npos || !ParseInt(tok.substr(0, colon), order))
      throw Error(ErrorCode::kConfig,
                  "bad skip size '" + std::string(tok) + "', want N:k1,...");
    SkipSpec spec;
    std::string_view rest = tok.substr(colon + 1);
    while (true) {
      auto comma = rest.find(',');
      long long k;
      if (!ParseInt(rest.substr(0, comma), k))
        throw Error(ErrorCode::kConfig,
                    "bad skip offsets in '" + std::string(tok) + "'");
      spec.offsets.push_back(static_cast<int>(k));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (spec.order() != order)
      throw Error(ErrorCode::kConfig, "'" + std::string(tok) + "' needs " +
                                          std::to_string(order - 1) +
                                          " offsets");
    set.push_back(std::move(spec));
  }
  ValidateSkipSizeSet(set);
  return set;
}

std::string FormatSkipSizeSet(const SkipSizeSet &set) {
  std::string s;
  for (std::size_t i = 0; i < set.size(); ++i)
    s += (i ? " " : "") + set[i].ToString();
  return s;
}

SkipSizeSet UniformSkipSizes(int max_bigram_skip, int max_trigram_skip) {
  SkipSizeSet set;
  for (int k = 1; k <= max_bigram_skip; ++k) set.push_back({{k}});
  for (int k = 1; k <= max_trigram_skip; ++k) set.push_back({{k, k}});
  return set;
}

SkipgramDist::SkipgramDist(int vocab_size, SkipSpec spec)
    : vocab_size_(vocab_size), spec_(std::move(spec)) {
  if (vocab_size_ < 1)
    throw Error(ErrorCode::kInvalidArgument, "vocab size must be positive");
  if (spec_.offsets.empty())
    throw Error(ErrorCode::kInvalidArgument, "skipgram order must be >= 2");
  for (int k : spec_.offsets)
    if (k < 1)
      throw Error(ErrorCode::kInvalidArgument, "skip offsets must be >= 1");
  double count = std::pow(static_cast<double>(vocab_size_), order());
  if (count > 9.0e15)
    throw Error(ErrorCode::kInvalidArgument, "tuple space too large to key");
  tuple_count_ = 1;
  for (int i = 0; i < order(); ++i) tuple_count_ *= vocab_size_;
  if (is_dense()) dense_.assign(tuple_count_, 0.0);
}

std::uint64_t SkipgramDist::Encode(std::span<const int> tuple) const {
  if (static_cast<int>(tuple.size()) != order())
    throw Error(ErrorCode::kShapeMismatch, "tuple arity mismatch");
  std::uint64_t key = 0;
  for (int y : tuple) {
    if (y < 0 || y >= vocab_size_)
      throw Error(ErrorCode::kRange, "symbol outside vocab");
    key = key * vocab_size_ + y;
  }
  return key;
}

std::vector<int> SkipgramDist::Decode(std::uint64_t key) const {
  std::vector<int> tuple(order());
  for (int i = order() - 1; i >= 0; --i) {
    tuple[i] = static_cast<int>(key % vocab_size_);
    key /= vocab_size_;
  }
  return tuple;
}

double SkipgramDist::Get(std::uint64_t key) const {
  if (is_dense()) return dense_[key];
  auto it = sparse_.find(key);
  return it == sparse_.end() ? 0.0 : it->second;
}

void SkipgramDist::Add(std::uint64_t key, double value) {
  if (is_dense())
    dense_[key] += value;
  else
    sparse_[key] += value;
}

void SkipgramDist::Set(std::uint64_t key, double value) {
  if (is_dense())
    dense_[key] = value;
  else
    sparse_[key] = value;
}

void SkipgramDist::Scale(double factor) {
  for (double &v : dense_) v *= factor;
  for (auto &[k, v] : sparse_) v *= factor;
}

double SkipgramDist::total_mass() const {
  double total = 0.0;
  ForEach([&](std::uint64_t, double v) { total += v; });
  return total;
}

std::size_t SkipgramDist::stored_entries() const {
  return is_dense() ? dense_.size() : sparse_.size();
}

SkipgramDist CountSkipgrams(const PhonemeCorpus &corpus, int vocab_size,
                            const SkipSpec &spec) {
  SkipgramDist dist(vocab_size, spec);
  const int span = spec.span();
  const int n = spec.order();
  std::vector<int> positions(n, 0);
  for (int i = 1; i < n; ++i) positions[i] = positions[i - 1] + spec.offsets[i - 1];
  std::uint64_t count = 0;
  for (const auto &seq : corpus.sequences) {
    const int len = static_cast<int>(seq.size());
    for (int t = 0; t + span < len; ++t) {
      std::uint64_t key = 0;
      for (int i = 0; i < n; ++i) {
        int y = seq[t + positions[i]];
        if (y < 0 || y >= vocab_size)
          throw Error(ErrorCode::kRange, "phoneme id outside vocab");
        key = key * vocab_size + y;
      }
      dist.Add(key, 1.0);
      ++count;
    }
  }
  if (count == 0)
    throw Error(ErrorCode::kNoSupport, "no sequence is long enough for skip " +
                                           spec.ToString());
  dist.Scale(1.0 / static_cast<double>(count));
  return dist;
}

PositionalUnigram CountPositionalUnigram(const PhonemeCorpus &corpus,
                                         int vocab_size, int positions) {
  if (positions < 1)
    throw Error(ErrorCode::kInvalidArgument, "positions must be >= 1");
  if (corpus.sequences.empty())
    throw Error(ErrorCode::kEmptyCorpus, "empty corpus");
  PositionalUnigram uni;
  uni.positions = positions;
  uni.vocab_size = vocab_size;
  uni.probs.assign(static_cast<std::size_t>(positions) * vocab_size, 0.0);
  uni.mass.assign(positions, 0.0);
  const double w = 1.0 / static_cast<double>(corpus.size());
  for (const auto &seq : corpus.sequences) {
    int upto = std::min<int>(positions, static_cast<int>(seq.size()));
    for (int l = 0; l < upto; ++l) {
      if (seq[l] < 0 || seq[l] >= vocab_size)
        throw Error(ErrorCode::kRange, "phoneme id outside vocab");
      uni.probs[static_cast<std::size_t>(l) * vocab_size + seq[l]] += w;
      uni.mass[l] += w;
    }
  }
  return uni;
}

SkipgramDist TopK(const SkipgramDist &dist, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "top-K needs K >= 1");
  std::vector<std::pair<std::uint64_t, double>> entries;
  dist.ForEach([&](std::uint64_t key, double v) { entries.emplace_back(key, v); });
  if (k >= entries.size()) return dist;
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });
  SkipgramDist out(dist.vocab_size(), dist.spec());
  for (std::size_t i = 0; i < k; ++i) out.Set(entries[i].first, entries[i].second);
  out.set_truncated(true);
  return out;
}

namespace {

void CheckRows(std::span<const Tensor> batch, int vocab) {
  for (const auto &rows : batch)
    if (rows.rank() != 2 || static_cast<int>(rows.cols()) != vocab)
      throw Error(ErrorCode::kShapeMismatch,
                  "batch rows must be length x " + std::to_string(vocab) +
                      ", got " + rows.ShapeString());
}

std::vector<int> OffsetsFromAnchor(const SkipSpec &spec) {
  std::vector<int> pos(spec.order(), 0);
  for (int i = 1; i < spec.order(); ++i) pos[i] = pos[i - 1] + spec.offsets[i - 1];
  return pos;
}

std::uint64_t AnchorCount(std::span<const Tensor> batch, const SkipSpec &spec) {
  std::uint64_t count = 0;
  const std::size_t span = static_cast<std::size_t>(spec.span());
  for (const auto &rows : batch)
    if (rows.rows() > span) count += rows.rows() - span;
  return count;
}

int BatchVocab(std::span<const Tensor> batch) {
  if (batch.empty()) throw Error(ErrorCode::kNoSupport, "empty batch");
  return static_cast<int>(batch.front().cols());
}

// Product of the tuple's probabilities at one anchor.
double TupleProduct(std::span<const std::size_t> row_index,
                    const Tensor &rows, std::span<const int> tuple) {
  double p = 1.0;
  for (std::size_t i = 0; i < tuple.size() && p != 0.0; ++i)
    p *= rows(row_index[i], tuple[i]);
  return p;
}

}  // namespace

SkipgramDist ExpectedSkipgrams(std::span<const Tensor> batch,
                               const SkipSpec &spec,
                               const SkipgramDist *support) {
  const int v = BatchVocab(batch);
  CheckRows(batch, v);
  SkipgramDist dist(v, spec);
  const std::uint64_t count = AnchorCount(batch, spec);
  if (count == 0)
    throw Error(ErrorCode::kNoSupport, "no sequence is long enough for skip " +
                                           spec.ToString());
  const auto pos = OffsetsFromAnchor(spec);
  const std::size_t span = static_cast<std::size_t>(spec.span());
  const std::size_t vv = static_cast<std::size_t>(v);

  if (support != nullptr) {
    if (support->vocab_size() != v || support->spec() != spec)
      throw Error(ErrorCode::kShapeMismatch, "support does not match skip spec");
    std::vector<std::pair<std::uint64_t, std::vector<int>>> tuples;
    support->ForEach(
        [&](std::uint64_t key, double) { tuples.emplace_back(key, dist.Decode(key)); });
    std::vector<double> acc(tuples.size(), 0.0);
    std::vector<std::size_t> idx(pos.size());
    for (const auto &rows : batch) {
      for (std::size_t t = 0; t + span < rows.rows(); ++t) {
        for (std::size_t i = 0; i < pos.size(); ++i) idx[i] = t + pos[i];
        for (std::size_t j = 0; j < tuples.size(); ++j)
          acc[j] += TupleProduct(idx, rows, tuples[j].second);
      }
    }
    for (std::size_t j = 0; j < tuples.size(); ++j)
      dist.Set(tuples[j].first, acc[j] / static_cast<double>(count));
    dist.set_truncated(support->truncated());
    return dist;
  }

  if (spec.order() == 2) {
    auto &p = dist.dense();
    for (const auto &rows : batch) {
      for (std::size_t t = 0; t + span < rows.rows(); ++t) {
        auto x = rows.Row(t + pos[0]);
        auto y = rows.Row(t + pos[1]);
        for (std::size_t a = 0; a < vv; ++a) {
          const double xa = x[a];
          if (xa == 0.0) continue;
          double *out = p.data() + a * vv;
          for (std::size_t b = 0; b < vv; ++b) out[b] += xa * y[b];
        }
      }
    }
  } else if (spec.order() == 3) {
    auto &p = dist.dense();
    for (const auto &rows : batch) {
      for (std::size_t t = 0; t + span < rows.rows(); ++t) {
        auto x = rows.Row(t + pos[0]);
        auto y = rows.Row(t + pos[1]);
        auto z = rows.Row(t + pos[2]);
        for (std::size_t a = 0; a < vv; ++a) {
          const double xa = x[a];
          if (xa == 0.0) continue;
          for (std::size_t b = 0; b < vv; ++b) {
            const double xy = xa * y[b];
            if (xy == 0.0) continue;
            double *out = p.data() + (a * vv + b) * vv;
            for (std::size_t c = 0; c < vv; ++c) out[c] += xy * z[c];
          }
        }
      }
    }
  } else {
    // Full enumeration for high orders; only sensible for small vocabularies.
    const int n = spec.order();
    std::vector<int> tuple(n);
    std::vector<std::size_t> idx(n);
    std::vector<double> acc(dist.tuple_count(), 0.0);
    for (const auto &rows : batch) {
      for (std::size_t t = 0; t + span < rows.rows(); ++t) {
        for (int i = 0; i < n; ++i) idx[i] = t + pos[i];
        std::fill(tuple.begin(), tuple.end(), 0);
        for (std::uint64_t key = 0; key < dist.tuple_count(); ++key) {
          acc[key] += TupleProduct(idx, rows, tuple);
          for (int i = n - 1; i >= 0; --i) {
            if (++tuple[i] < v) break;
            tuple[i] = 0;
          }
        }
      }
    }
    for (std::uint64_t key = 0; key < acc.size(); ++key)
      if (acc[key] != 0.0) dist.Set(key, acc[key]);
  }
  dist.Scale(1.0 / static_cast<double>(count));
  return dist;
}

void ExpectedSkipgramsBackward(std::span<const Tensor> batch,
                               const SkipgramDist &upstream,
                               std::span<Tensor> grads) {
  const int v = BatchVocab(batch);
  CheckRows(batch, v);
  if (grads.size() != batch.size())
    throw Error(ErrorCode::kShapeMismatch, "gradient batch size mismatch");
  for (std::size_t i = 0; i < batch.size(); ++i)
    if (!grads[i].SameShape(batch[i]))
      throw Error(ErrorCode::kShapeMismatch, "gradient shape mismatch");
  if (upstream.vocab_size() != v)
    throw Error(ErrorCode::kShapeMismatch, "upstream vocab mismatch");
  const SkipSpec &spec = upstream.spec();
  const std::uint64_t count = AnchorCount(batch, spec);
  if (count == 0) return;
  const double scale = 1.0 / static_cast<double>(count);
  const auto pos = OffsetsFromAnchor(spec);
  const std::size_t span = static_cast<std::size_t>(spec.span());
  const std::size_t vv = static_cast<std::size_t>(v);

  if (upstream.is_dense() && spec.order() == 2) {
    const auto &g = upstream.dense();
    for (std::size_t s = 0; s < batch.size(); ++s) {
      const Tensor &rows = batch[s];
      Tensor &grad = grads[s];
      for (std::size_t t = 0; t + span < rows.rows(); ++t) {
        auto x = rows.Row(t + pos[0]);
        auto y = rows.Row(t + pos[1]);
        auto gx = grad.Row(t + pos[0]);
        auto gy = grad.Row(t + pos[1]);
        for (std::size_t a = 0; a < vv; ++a) {
          const double *ga = g.data() + a * vv;
          double dot = 0.0;
          for (std::size_t b = 0; b < vv; ++b) {
            dot += ga[b] * y[b];
            gy[b] += scale * ga[b] * x[a];
          }
          gx[a] += scale * dot;
        }
      }
    }
    return;
  }
  if (upstream.is_dense() && spec.order() == 3) {
    const auto &g = upstream.dense();
    for (std::size_t s = 0; s < batch.size(); ++s) {
      const Tensor &rows = batch[s];
      Tensor &grad = grads[s];
      for (std::size_t t = 0; t + span < rows.rows(); ++t) {
        auto x = rows.Row(t + pos[0]);
        auto y = rows.Row(t + pos[1]);
        auto z = rows.Row(t + pos[2]);
        auto gx = grad.Row(t + pos[0]);
        auto gy = grad.Row(t + pos[1]);
        auto gz = grad.Row(t + pos[2]);
        for (std::size_t a = 0; a < vv; ++a) {
          double gxa = 0.0;
          for (std::size_t b = 0; b < vv; ++b) {
            const double *gab = g.data() + (a * vv + b) * vv;
            double gz_dot = 0.0;
            const double xy = x[a] * y[b];
            for (std::size_t c = 0; c < vv; ++c) {
              gz_dot += gab[c] * z[c];
              gz[c] += scale * gab[c] * xy;
            }
            gxa += gz_dot * y[b];
            gy[b] += scale * gz_dot * x[a];
          }
          gx[a] += scale * gxa;
        }
      }
    }
    return;
  }

  // Generic path: per stored tuple, leave-one-out products.
  const int n = spec.order();
  std::vector<std::pair<std::vector<int>, double>> tuples;
  upstream.ForEach([&](std::uint64_t key, double g) {
    tuples.emplace_back(upstream.Decode(key), g);
  });
  std::vector<double> prefix(n + 1), suffix(n + 1);
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const Tensor &rows = batch[s];
    Tensor &grad = grads[s];
    for (std::size_t t = 0; t + span < rows.rows(); ++t) {
      for (const auto &[tuple, g] : tuples) {
        prefix[0] = 1.0;
        for (int i = 0; i < n; ++i)
          prefix[i + 1] = prefix[i] * rows(t + pos[i], tuple[i]);
        suffix[n] = 1.0;
        for (int i = n - 1; i >= 0; --i)
          suffix[i] = suffix[i + 1] * rows(t + pos[i], tuple[i]);
        for (int i = 0; i < n; ++i)
          grad(t + pos[i], tuple[i]) += scale * g * prefix[i] * suffix[i + 1];
      }
    }
  }
}

PositionalUnigram ExpectedPositionalUnigram(std::span<const Tensor> batch,
                                            int positions) {
  if (positions < 1)
    throw Error(ErrorCode::kInvalidArgument, "positions must be >= 1");
  const int v = BatchVocab(batch);
  CheckRows(batch, v);
  PositionalUnigram uni;
  uni.positions = positions;
  uni.vocab_size = v;
  uni.probs.assign(static_cast<std::size_t>(positions) * v, 0.0);
  uni.mass.assign(positions, 0.0);
  const double w = 1.0 / static_cast<double>(batch.size());
  for (const auto &rows : batch) {
    int upto = std::min<int>(positions, static_cast<int>(rows.rows()));
    for (int l = 0; l < upto; ++l) {
      auto r = rows.Row(l);
      for (int a = 0; a < v; ++a)
        uni.probs[static_cast<std::size_t>(l) * v + a] += w * r[a];
      uni.mass[l] += w;
    }
  }
  return uni;
}

void ExpectedPositionalUnigramBackward(std::span<const Tensor> batch,
                                       const PositionalUnigram &upstream,
                                       std::span<Tensor> grads) {
  const int v = BatchVocab(batch);
  CheckRows(batch, v);
  if (grads.size() != batch.size() || upstream.vocab_size != v)
    throw Error(ErrorCode::kShapeMismatch, "positional gradient mismatch");
  const double w = 1.0 / static_cast<double>(batch.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    int upto =
        std::min<int>(upstream.positions, static_cast<int>(batch[s].rows()));
    for (int l = 0; l < upto; ++l) {
      auto g = grads[s].Row(l);
      for (int a = 0; a < v; ++a) g[a] += w * upstream.At(l, a);
    }
  }
}

double L1Distance(const SkipgramDist &a, const SkipgramDist &b) {
  if (a.vocab_size() != b.vocab_size() || a.spec() != b.spec())
    throw Error(ErrorCode::kShapeMismatch,
                "cannot compare skip " + a.spec().ToString() + " with " +
                    b.spec().ToString());
  double total = 0.0;
  if (a.is_dense()) {
    const auto &x = a.dense();
    const auto &y = b.dense();
    for (std::size_t i = 0; i < x.size(); ++i) total += std::abs(x[i] - y[i]);
    return total;
  }
  std::set<std::uint64_t> keys;
  a.ForEach([&](std::uint64_t k, double) { keys.insert(k); });
  b.ForEach([&](std::uint64_t k, double) { keys.insert(k); });
  for (auto k : keys) total += std::abs(a.Get(k) - b.Get(k));
  return total;
}

double L1Distance(const PositionalUnigram &a, const PositionalUnigram &b) {
  if (a.positions != b.positions || a.vocab_size != b.vocab_size)
    throw Error(ErrorCode::kShapeMismatch, "positional unigram shape mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < a.probs.size(); ++i)
    total += std::abs(a.probs[i] - b.probs[i]);
  return total;
}

void WriteSkipgramDist(const SkipgramDist &dist, const Vocab &vocab,
                       std::ostream &out) {
  if (vocab.size() != dist.vocab_size())
    throw Error(ErrorCode::kShapeMismatch, "vocab does not match distribution");
  std::vector<std::pair<std::uint64_t, double>> entries;
  dist.ForEach([&](std::uint64_t k, double p) { entries.emplace_back(k, p); });
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });
  for (const auto &[key, p] : entries) {
    auto tuple = dist.Decode(key);
    for (std::size_t i = 0; i < tuple.size(); ++i)
      out << (i ? " " : "") << vocab.Symbol(tuple[i]);
    out << '\t' << FormatDouble(p) << '\n';
  }
}

void WritePositionalUnigram(const PositionalUnigram &uni, const Vocab &vocab,
                            std::ostream &out) {
  for (int l = 0; l < uni.positions; ++l) {
    for (int a = 0; a < uni.vocab_size; ++a) {
      double p = uni.At(l, a);
      if (p == 0.0) continue;
      out << l << ' ' << vocab.Symbol(a) << '\t' << FormatDouble(p) << '\n';
    }
  }
}

}  // namespace espum
