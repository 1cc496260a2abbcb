// core/include/espum/losses.h

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

// Matching, smoothness and boundary losses. Each loss optionally returns
// or accumulates its gradient with respect to its prediction input; L1
// terms use sign(0) = 0.

#ifndef ESPUM_LOSSES_H_
#define ESPUM_LOSSES_H_

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "espum/corpus.h"
#include "espum/stats.h"
#include "espum/tensor.h"

namespace espum {

struct LossWeights {
  double lambda_smooth = 16.0;
  double lambda_segment = 1.0;

  void Validate() const;
};

struct BceConfig {
  double pos_weight = 1.1;
  double confidence_threshold = 0.6;

  void Validate() const;
};

using SkipgramMap = std::map<SkipSpec, SkipgramDist>;

// Sum over skip sizes of L1(target_k, pred_k). When `grad` is given it is
// filled with d(loss)/d(pred) per skip size. Throws kShapeMismatch if the
// key sets differ.
double SkipgramLoss(const SkipgramMap &pred, const SkipgramMap &target,
                    SkipgramMap *grad = nullptr);

// Per position l with masses m_p (pred) and m_t (target):
//   min(m_p, m_t) * || pred_l / m_p - target_l / m_t ||_1 + |m_p - m_t|
// The masses are sequence-count fractions, so they carry no gradient.
// With equal masses this is the plain positional L1.
double UnigramLoss(const PositionalUnigram &pred,
                   const PositionalUnigram &target,
                   PositionalUnigram *grad = nullptr);

// sum_t || row_{t+1} - row_t ||^2 over one sequence. Adds
// grad_scale * d(loss)/d(rows) into `grad` when given.
double SmoothnessLoss(const Tensor &rows, Tensor *grad = nullptr,
                      double grad_scale = 1.0);

// Unnormalized BCE over frames whose confidence exceeds the threshold.
struct BceSum {
  double sum = 0.0;
  std::size_t count = 0;
};
std::size_t BceSelectedCount(const BoundaryLabels &labels,
                             const BceConfig &config);
// Adds grad_scale * d(sum)/d(p) into `grad` (length T) when given.
// Probabilities are clamped to [1e-12, 1 - 1e-12] inside the logs.
BceSum SegmentBceSum(std::span<const double> p, const BoundaryLabels &labels,
                     const BceConfig &config, std::vector<double> *grad = nullptr,
                     double grad_scale = 1.0);
// Mean over the selected frames; 0 when nothing is selected.
double SegmentBceLoss(std::span<const double> p, const BoundaryLabels &labels,
                      const BceConfig &config);

struct LossParts {
  double unigram = 0.0;
  double skipgram = 0.0;
  double segment = 0.0;
  double smooth = 0.0;
};

// unigram + skipgram + lambda_segment * segment + lambda_smooth * smooth.
// Throws kNonFinite naming the offending part.
double TotalLoss(const LossParts &parts, const LossWeights &weights);

}  // namespace espum

#endif  // ESPUM_LOSSES_H_
