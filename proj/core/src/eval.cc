// core/src/eval.cc

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

#include "espum/eval.h"

#include <algorithm>
#include <cmath>

#include "espum/error.h"

namespace espum {

PhonemeSequence MergeDuplicates(const PhonemeSequence &labels) {
  PhonemeSequence out;
  for (int y : labels)
    if (out.empty() || out.back() != y) out.push_back(y);
  return out;
}

PhonemeSequence DecodeFrames(const Tensor &frame_probs,
                             std::span<const std::uint8_t> flags,
                             bool merge_duplicates) {
  Tensor pooled = HardPool(flags, frame_probs);
  PhonemeSequence labels(pooled.rows());
  for (std::size_t l = 0; l < pooled.rows(); ++l) {
    auto row = pooled.Row(l);
    labels[l] = static_cast<int>(std::max_element(row.begin(), row.end()) -
                                 row.begin());
  }
  return merge_duplicates ? MergeDuplicates(labels) : labels;
}

PhonemeSequence Decode(const Model &model, const UnitSequence &units,
                       const DecodeOptions &options) {
  Tensor probs = model.Generate(units, nullptr);
  BoundaryLabels flags =
      BinarizeBoundaries(model.Segment(units, nullptr), options.threshold);
  return DecodeFrames(probs, flags.flags, options.merge_duplicates);
}

double PerResult::per() const {
  return ref_length == 0 ? 0.0
                         : static_cast<double>(errors()) /
                               static_cast<double>(ref_length);
}

PerResult &PerResult::operator+=(const PerResult &o) {
  substitutions += o.substitutions;
  deletions += o.deletions;
  insertions += o.insertions;
  ref_length += o.ref_length;
  return *this;
}

namespace {

std::vector<std::int64_t> DistanceTable(std::span<const int> a,
                                        std::span<const int> b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::int64_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::int64_t & {
    return d[i * (m + 1) + j];
  };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<std::int64_t>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<std::int64_t>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      at(i, j) = std::min({at(i - 1, j - 1) + (a[i - 1] != b[j - 1] ? 1 : 0),
                           at(i, j - 1) + 1, at(i - 1, j) + 1});
  return d;
}

}  // namespace

std::int64_t EditDistance(std::span<const int> a, std::span<const int> b) {
  return DistanceTable(a, b).back();
}

PerResult ComputePer(std::span<const int> ref, std::span<const int> hyp) {
  if (ref.empty())
    throw Error(ErrorCode::kInvalidArgument, "reference sequence is empty");
  const auto d = DistanceTable(ref, hyp);
  const std::size_t m = hyp.size();
  auto at = [&](std::size_t i, std::size_t j) { return d[i * (m + 1) + j]; };
  PerResult r;
  r.ref_length = static_cast<std::int64_t>(ref.size());
  std::size_t i = ref.size(), j = hyp.size();
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const int cost = ref[i - 1] != hyp[j - 1] ? 1 : 0;
      if (at(i, j) == at(i - 1, j - 1) + cost) {
        r.substitutions += cost;
        --i;
        --j;
        continue;
      }
    }
    if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      ++r.insertions;
      --j;
    } else {
      ++r.deletions;
      --i;
    }
  }
  return r;
}

const char *BoundaryModeName(BoundaryMode mode) {
  return mode == BoundaryMode::kLenient ? "lenient" : "harsh";
}

BoundaryMode ParseBoundaryMode(const std::string &name) {
  if (name == "lenient") return BoundaryMode::kLenient;
  if (name == "harsh") return BoundaryMode::kHarsh;
  throw Error(ErrorCode::kInvalidArgument,
              "mode must be lenient or harsh, got '" + name + "'");
}

BoundaryCounts &BoundaryCounts::operator+=(const BoundaryCounts &o) {
  precision_hits += o.precision_hits;
  recall_hits += o.recall_hits;
  hyp += o.hyp;
  ref += o.ref;
  return *this;
}

namespace {

void CheckIncreasing(std::span<const int> v, const char *what) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] <= v[i - 1])
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(what) + " positions must be strictly increasing");
}

// Number of elements of `from` with an element of `to` within tolerance.
std::int64_t CoveredCount(std::span<const int> from, std::span<const int> to,
                          int tolerance) {
  std::int64_t hits = 0;
  std::size_t j = 0;
  for (int x : from) {
    while (j < to.size() && to[j] < x - tolerance) ++j;
    if (j < to.size() && to[j] <= x + tolerance) ++hits;
  }
  return hits;
}

}  // namespace

BoundaryCounts CountBoundaryHits(std::span<const int> ref,
                                 std::span<const int> hyp, int tolerance,
                                 BoundaryMode mode) {
  if (tolerance < 0)
    throw Error(ErrorCode::kInvalidArgument, "tolerance must be >= 0");
  CheckIncreasing(ref, "reference");
  CheckIncreasing(hyp, "hypothesis");
  BoundaryCounts c;
  c.hyp = static_cast<std::int64_t>(hyp.size());
  c.ref = static_cast<std::int64_t>(ref.size());
  if (mode == BoundaryMode::kLenient) {
    c.precision_hits = CoveredCount(hyp, ref, tolerance);
    c.recall_hits = CoveredCount(ref, hyp, tolerance);
    return c;
  }
  // Greedy on sorted positions is a maximum matching for intervals on a line.
  std::size_t i = 0, j = 0;
  std::int64_t matched = 0;
  while (i < ref.size() && j < hyp.size()) {
    if (std::abs(ref[i] - hyp[j]) <= tolerance) {
      ++matched;
      ++i;
      ++j;
    } else if (hyp[j] < ref[i]) {
      ++j;
    } else {
      ++i;
    }
  }
  c.precision_hits = c.recall_hits = matched;
  return c;
}

double RValue(double precision, double recall) {
  const double os = precision > 0.0 ? recall / precision - 1.0 : 0.0;
  const double r1 = std::sqrt((1.0 - recall) * (1.0 - recall) + os * os);
  const double r2 = (-os + recall - 1.0) / std::sqrt(2.0);
  return 1.0 - (std::abs(r1) + std::abs(r2)) / 2.0;
}

BoundaryMetrics MetricsFromCounts(const BoundaryCounts &c, int tolerance,
                                  BoundaryMode mode) {
  BoundaryMetrics m;
  m.mode = mode;
  m.tolerance = tolerance;
  if (c.hyp == 0 && c.ref == 0) {
    m.precision = m.recall = m.f1 = m.r_value = 1.0;
    return m;
  }
  m.precision = c.hyp > 0 ? static_cast<double>(c.precision_hits) /
                                static_cast<double>(c.hyp)
                          : 0.0;
  m.recall = c.ref > 0 ? static_cast<double>(c.recall_hits) /
                             static_cast<double>(c.ref)
                       : 0.0;
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  m.r_value = RValue(m.precision, m.recall);
  return m;
}

BoundaryMetrics ComputeBoundaryMetrics(std::span<const int> ref,
                                       std::span<const int> hyp, int tolerance,
                                       BoundaryMode mode) {
  return MetricsFromCounts(CountBoundaryHits(ref, hyp, tolerance, mode),
                           tolerance, mode);
}

CorpusScores CorpusEval(const Model &model, const EvalSet &eval,
                        const EvalOptions &options) {
  if (eval.size() == 0 || eval.phonemes.size() != eval.size() ||
      eval.units.boundaries.size() != eval.size())
    throw Error(ErrorCode::kInvalidArgument,
                "eval set must be non-empty with paired text and boundaries");
  CorpusScores scores;
  BoundaryCounts lenient, harsh;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const auto &units = eval.units.sequences[i];
    Tensor probs = model.Generate(units, nullptr);
    BoundaryLabels flags = BinarizeBoundaries(model.Segment(units, nullptr),
                                              options.decode.threshold);
    PhonemeSequence hyp =
        DecodeFrames(probs, flags.flags, options.decode.merge_duplicates);
    scores.per += ComputePer(eval.phonemes.sequences[i], hyp);
    const auto ref_pos = eval.units.boundaries[i].Positions();
    const auto hyp_pos = flags.Positions();
    lenient += CountBoundaryHits(ref_pos, hyp_pos, options.tolerance,
                                 BoundaryMode::kLenient);
    harsh += CountBoundaryHits(ref_pos, hyp_pos, options.tolerance,
                               BoundaryMode::kHarsh);
  }
  scores.lenient =
      MetricsFromCounts(lenient, options.tolerance, BoundaryMode::kLenient);
  scores.harsh = MetricsFromCounts(harsh, options.tolerance, BoundaryMode::kHarsh);
  return scores;
}

}  // namespace espum
