// core/src/losses.cc

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

#include "espum/losses.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "espum/error.h"

namespace espum {

namespace {

double Sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

void LossWeights::Validate() const {
  if (!(lambda_smooth >= 0.0) || !(lambda_segment >= 0.0))
    throw Error(ErrorCode::kConfig, "loss weights must be >= 0");
}

void BceConfig::Validate() const {
  if (!(pos_weight > 0.0))
    throw Error(ErrorCode::kConfig, "pos_weight must be positive");
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0))
    throw Error(ErrorCode::kConfig, "confidence threshold must lie in [0, 1]");
}

double SkipgramLoss(const SkipgramMap &pred, const SkipgramMap &target,
                    SkipgramMap *grad) {
  if (pred.size() != target.size())
    throw Error(ErrorCode::kShapeMismatch, "skip size sets differ");
  if (grad) grad->clear();
  double total = 0.0;
  for (const auto &[spec, t] : target) {
    auto it = pred.find(spec);
    if (it == pred.end())
      throw Error(ErrorCode::kShapeMismatch,
                  "prediction lacks skip size " + spec.ToString());
    const SkipgramDist &p = it->second;
    total += L1Distance(t, p);
    if (!grad) continue;
    SkipgramDist g(p.vocab_size(), p.spec());
    if (p.is_dense()) {
      for (std::size_t k = 0; k < g.dense().size(); ++k)
        g.dense()[k] = Sign(p.dense()[k] - t.dense()[k]);
    } else {
      std::set<std::uint64_t> keys;
      p.ForEach([&](std::uint64_t k, double) { keys.insert(k); });
      t.ForEach([&](std::uint64_t k, double) { keys.insert(k); });
      for (auto k : keys) g.Set(k, Sign(p.Get(k) - t.Get(k)));
    }
    grad->emplace(spec, std::move(g));
  }
  return total;
}

double UnigramLoss(const PositionalUnigram &pred,
                   const PositionalUnigram &target, PositionalUnigram *grad) {
  if (pred.positions != target.positions ||
      pred.vocab_size != target.vocab_size)
    throw Error(ErrorCode::kShapeMismatch, "positional unigram shapes differ");
  if (grad) {
    *grad = pred;
    std::fill(grad->probs.begin(), grad->probs.end(), 0.0);
  }
  const int v = pred.vocab_size;
  double total = 0.0;
  for (int l = 0; l < pred.positions; ++l) {
    const double mp = pred.mass[l], mt = target.mass[l];
    total += std::abs(mp - mt);
    const double m = std::min(mp, mt);
    if (!(m > 0.0)) continue;
    double l1 = 0.0;
    for (int a = 0; a < v; ++a) {
      const double d = pred.At(l, a) / mp - target.At(l, a) / mt;
      l1 += std::abs(d);
      if (grad)
        grad->probs[static_cast<std::size_t>(l) * v + a] = m / mp * Sign(d);
    }
    total += m * l1;
  }
  return total;
}

double SmoothnessLoss(const Tensor &rows, Tensor *grad, double grad_scale) {
  if (grad && !grad->SameShape(rows))
    throw Error(ErrorCode::kShapeMismatch, "smoothness gradient shape mismatch");
  double total = 0.0;
  for (std::size_t t = 0; t + 1 < rows.rows(); ++t) {
    auto a = rows.Row(t);
    auto b = rows.Row(t + 1);
    for (std::size_t c = 0; c < a.size(); ++c) {
      const double d = b[c] - a[c];
      total += d * d;
      if (grad) {
        (*grad)(t + 1, c) += grad_scale * 2.0 * d;
        (*grad)(t, c) -= grad_scale * 2.0 * d;
      }
    }
  }
  return total;
}

std::size_t BceSelectedCount(const BoundaryLabels &labels,
                             const BceConfig &config) {
  std::size_t n = 0;
  for (double c : labels.confidence)
    if (c > config.confidence_threshold) ++n;
  return n;
}

BceSum SegmentBceSum(std::span<const double> p, const BoundaryLabels &labels,
                     const BceConfig &config, std::vector<double> *grad,
                     double grad_scale) {
  if (p.size() != labels.size() || labels.confidence.size() != labels.size() ||
      (grad && grad->size() != p.size()))
    throw Error(ErrorCode::kShapeMismatch,
                "boundary probabilities and labels differ in length");
  constexpr double kEps = 1e-12;
  BceSum out;
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (!(labels.confidence[t] > config.confidence_threshold)) continue;
    const double y = labels.flags[t] ? 1.0 : 0.0;
    const double q = std::clamp(p[t], kEps, 1.0 - kEps);
    out.sum -= config.pos_weight * y * std::log(q) + (1.0 - y) * std::log(1.0 - q);
    ++out.count;
    if (grad && q == p[t])
      (*grad)[t] += grad_scale *
                    (-config.pos_weight * y / q + (1.0 - y) / (1.0 - q));
  }
  return out;
}

double SegmentBceLoss(std::span<const double> p, const BoundaryLabels &labels,
                      const BceConfig &config) {
  BceSum s = SegmentBceSum(p, labels, config);
  return s.count == 0 ? 0.0 : s.sum / static_cast<double>(s.count);
}

double TotalLoss(const LossParts &parts, const LossWeights &weights) {
  const std::pair<const char *, double> named[] = {{"unigram", parts.unigram},
                                                   {"skipgram", parts.skipgram},
                                                   {"segment", parts.segment},
                                                   {"smooth", parts.smooth}};
  for (const auto &[name, v] : named)
    if (!std::isfinite(v))
      throw Error(ErrorCode::kNonFinite, std::string(name) + " loss is not finite");
  return parts.unigram + parts.skipgram + weights.lambda_segment * parts.segment +
         weights.lambda_smooth * parts.smooth;
}

}  // namespace espum
