// core/src/gradcheck.cc

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

#include "espum/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <vector>

namespace espum {

GradCheckReport GradCheck(std::span<ParameterSet *const> sets,
                          const LossFn &loss, const GradCheckOptions &options) {
  for (auto *s : sets) s->ZeroGrad();
  const double f0 = loss(true);
  std::vector<std::vector<Tensor>> analytic;
  for (auto *s : sets) {
    std::vector<Tensor> g;
    for (const auto &p : s->params()) g.push_back(p.grad);
    analytic.push_back(std::move(g));
    s->ZeroGrad();
  }

  GradCheckReport report;
  const double h = options.h;
  for (std::size_t si = 0; si < sets.size(); ++si) {
    ParameterSet &set = *sets[si];
    for (std::size_t pi = 0; pi < set.size(); ++pi) {
      for (std::size_t j = 0; j < set[pi].value.size(); ++j) {
        const double orig = set[pi].value[j];
        set.MutableValue(pi)[j] = orig + h;
        const double fp = loss(false);
        set.MutableValue(pi)[j] = orig - h;
        const double fm = loss(false);
        set.MutableValue(pi)[j] = orig;

        const double fwd = (fp - f0) / h;
        const double bwd = (f0 - fm) / h;
        if (std::abs(fwd - bwd) >
            options.kink_rel * (std::abs(fwd) + std::abs(bwd)) +
                options.kink_abs) {
          ++report.skipped;
          continue;
        }
        const double a = analytic[si][pi][j];
        const double n = (fp - fm) / (2.0 * h);
        const double rel =
            std::abs(a - n) / std::max(1e-8, std::abs(a) + std::abs(n));
        ++report.checked;
        if (rel > report.max_rel_err) {
          report.max_rel_err = rel;
          report.worst_param = set[pi].name;
          report.worst_index = j;
        }
      }
    }
  }
  for (auto *s : sets) s->ZeroGrad();
  report.passed = report.max_rel_err < options.tol;
  return report;
}

}  // namespace espum
