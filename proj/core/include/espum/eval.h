// core/include/espum/eval.h

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

// Decoding, phone error rate and boundary detection scores.

#ifndef ESPUM_EVAL_H_
#define ESPUM_EVAL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "espum/corpus.h"
#include "espum/model.h"

namespace espum {

struct DecodeOptions {
  bool merge_duplicates = true;
  double threshold = 0.5;
};

// Segmenter, binarize, mean-pool generator rows per segment, argmax (ties to
// the lowest id), then optionally merge adjacent repeats.
PhonemeSequence Decode(const Model &model, const UnitSequence &units,
                       const DecodeOptions &options = {});
// Same, from precomputed frame rows and flags.
PhonemeSequence DecodeFrames(const Tensor &frame_probs,
                             std::span<const std::uint8_t> flags,
                             bool merge_duplicates);
PhonemeSequence MergeDuplicates(const PhonemeSequence &labels);

struct PerResult {
  std::int64_t substitutions = 0;
  std::int64_t deletions = 0;
  std::int64_t insertions = 0;
  std::int64_t ref_length = 0;

  std::int64_t errors() const { return substitutions + deletions + insertions; }
  // Errors over reference length; 0 for an empty pool.
  double per() const;
  PerResult &operator+=(const PerResult &other);
};

// Levenshtein alignment with unit costs; ties in the backtrace prefer
// substitution (or match), then insertion, then deletion. Throws
// kInvalidArgument on an empty reference.
PerResult ComputePer(std::span<const int> ref, std::span<const int> hyp);
std::int64_t EditDistance(std::span<const int> a, std::span<const int> b);

enum class BoundaryMode { kLenient, kHarsh };
const char *BoundaryModeName(BoundaryMode mode);
BoundaryMode ParseBoundaryMode(const std::string &name);

// Raw counts, poolable across utterances. In lenient mode a hyp boundary
// counts for precision if any ref lies within tolerance, and a ref boundary
// counts for recall if any hyp does. In harsh mode both use the size of a
// maximum one-to-one matching.
struct BoundaryCounts {
  std::int64_t precision_hits = 0;
  std::int64_t recall_hits = 0;
  std::int64_t hyp = 0;
  std::int64_t ref = 0;

  BoundaryCounts &operator+=(const BoundaryCounts &other);
};

struct BoundaryMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double r_value = 0.0;
  BoundaryMode mode = BoundaryMode::kLenient;
  int tolerance = 1;
};

// Positions must be strictly increasing. Throws kInvalidArgument otherwise.
BoundaryCounts CountBoundaryHits(std::span<const int> ref,
                                 std::span<const int> hyp, int tolerance,
                                 BoundaryMode mode);
// Empty hyp gives precision 0; both sets empty count as a perfect match.
BoundaryMetrics MetricsFromCounts(const BoundaryCounts &counts, int tolerance,
                                  BoundaryMode mode);
BoundaryMetrics ComputeBoundaryMetrics(std::span<const int> ref,
                                       std::span<const int> hyp, int tolerance,
                                       BoundaryMode mode);
// OS = R / P - 1 (0 when P = 0), r1 = sqrt((1 - R)^2 + OS^2),
// r2 = (-OS + R - 1) / sqrt(2), R-value = 1 - (|r1| + |r2|) / 2.
double RValue(double precision, double recall);

struct EvalOptions {
  DecodeOptions decode;
  int tolerance = 1;
};

struct CorpusScores {
  PerResult per;
  BoundaryMetrics lenient;
  BoundaryMetrics harsh;
};

// Counts pooled over utterances before rates are formed. Frame 0 never
// enters the boundary sets.
CorpusScores CorpusEval(const Model &model, const EvalSet &eval,
                        const EvalOptions &options = {});

}  // namespace espum

#endif  // ESPUM_EVAL_H_
