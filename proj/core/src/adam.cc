// core/src/adam.cc

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

#include "espum/adam.h"

#include <cmath>

#include "espum/error.h"

namespace espum {

void AdamConfig::Validate() const {
  if (!(lr > 0.0))
    throw Error(ErrorCode::kConfig, "learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw Error(ErrorCode::kConfig, "betas must lie in [0, 1)");
  if (!(epsilon > 0.0))
    throw Error(ErrorCode::kConfig, "epsilon must be positive");
}

void AdamStep(std::span<ParameterSet *const> sets, AdamState &state) {
  std::size_t total = 0;
  for (auto *s : sets) total += s->size();
  if (state.m.empty()) {
    for (auto *s : sets)
      for (const auto &p : s->params()) {
        state.m.emplace_back(p.value.shape());
        state.v.emplace_back(p.value.shape());
      }
  }
  if (state.m.size() != total || state.v.size() != total)
    throw Error(ErrorCode::kShapeMismatch,
                "optimizer state does not match the parameters");

  const auto &c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  std::size_t slot = 0;
  for (auto *s : sets) {
    for (std::size_t i = 0; i < s->size(); ++i, ++slot) {
      Tensor &m = state.m[slot];
      Tensor &v = state.v[slot];
      Tensor &g = s->Grad(i);
      if (!m.SameShape(g))
        throw Error(ErrorCode::kShapeMismatch,
                    "moment shape mismatch for " + (*s)[i].name);
      Tensor &w = s->MutableValue(i);
      for (std::size_t j = 0; j < w.size(); ++j) {
        const double gj = g[j];
        m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * gj;
        v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * gj * gj;
        const double mhat = m[j] / bc1;
        const double vhat = v[j] / bc2;
        w[j] -= c.lr * mhat / (std::sqrt(vhat) + c.epsilon);
      }
      g.Fill(0.0);
    }
  }
}

}  // namespace espum
