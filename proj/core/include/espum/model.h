// core/include/espum/model.h

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

// Generator, segmenter, the soft monotonic aligner and segment pooling.
//
// Alignment construction for boundary probabilities b (b_0 is ignored):
//   s_0 = 0, s_t = b_1 + ... + b_t
//   raw(l, t) = max(0, 1 - |s_t - l|),  l = 0 .. L-1
//   A(l, t) = raw(l, t) / sum_t raw(l, t)
// A row whose raw sum is zero falls back to uniform weight over the frames
// whose s is nearest to l; no gradient flows through such a row.

#ifndef ESPUM_MODEL_H_
#define ESPUM_MODEL_H_

#include <cstdint>
#include <span>
#include <vector>

#include "espum/checkpoint.h"
#include "espum/corpus.h"
#include "espum/network.h"
#include "espum/tensor.h"

namespace espum {

struct ModelConfig {
  int unit_inventory = 20;
  int vocab_size = 20;
  int generator_kernel = 4;
  int segmenter_layers = 7;
  int segmenter_hidden = 16;
  int segmenter_kernel = 3;

  void Validate() const;
};

// conv1d(U, |V|, kernel, stride 1, same) then softmax_rows.
NetworkSpec GeneratorSpec(const ModelConfig &config);
// (layers - 1) x [conv1d(., hidden, kernel), relu], conv1d(hidden, 1), sigmoid.
NetworkSpec SegmenterSpec(const ModelConfig &config);

struct Model {
  int unit_inventory = 0;
  int vocab_size = 0;
  Network generator;
  Network segmenter;

  // Xavier-initialized from the seed.
  static Model Create(const ModelConfig &config, std::uint64_t seed);

  // Rows T x |V|, each a distribution.
  Tensor Generate(const UnitSequence &units, Tape *tape) const;
  // One boundary probability per frame, in (0, 1).
  std::vector<double> Segment(const UnitSequence &units, Tape *tape) const;

  // Entries "generator.spec", "generator.<param>", "segmenter.spec", ...
  void Export(TensorArchive &archive) const;
  static Model Import(const TensorArchive &archive);
};

struct Alignment {
  Tensor weights;                  // L x T
  std::vector<double> position;    // s_t
  std::vector<double> row_sum;     // raw row sums; 0 marks a fallback row
};

Alignment SoftAlignment(std::span<const double> b, int segments);
// Gradient with respect to b given d(loss)/d(weights). Entry 0 is always 0.
std::vector<double> SoftAlignmentBackward(const Alignment &alignment,
                                          const Tensor &weights_grad);

// weights (L x T) times frames (T x D).
Tensor PoolSegments(const Tensor &weights, const Tensor &frames);
// Accumulates into weights_grad and frames_grad (either may be null).
void PoolSegmentsBackward(const Tensor &weights, const Tensor &frames,
                          const Tensor &pooled_grad, Tensor *weights_grad,
                          Tensor *frames_grad);

// Mean of frames inside each run started by a flagged frame.
Tensor HardPool(const BoundaryLabels &labels, const Tensor &frames);
Tensor HardPool(std::span<const std::uint8_t> flags, const Tensor &frames);

// flag[t] = (b[t] >= threshold) for t >= 1, flag[0] = 0;
// confidence[t] = max(b[t], 1 - b[t]).
BoundaryLabels BinarizeBoundaries(std::span<const double> b, double threshold);

}  // namespace espum

#endif  // ESPUM_MODEL_H_
