// core/include/espum/gradcheck.h

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

#ifndef ESPUM_GRADCHECK_H_
#define ESPUM_GRADCHECK_H_

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "espum/network.h"

namespace espum {

struct GradCheckOptions {
  double h = 1e-5;
  double tol = 1e-4;
  // A coordinate counts as a kink (and is skipped) when its one-sided
  // slopes differ by more than kink_rel * (|fwd| + |bwd|) + kink_abs.
  double kink_rel = 0.1;
  double kink_abs = 1e-6;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  bool passed = true;
};

// Evaluates the loss; when the argument is true it also accumulates the
// analytic gradient into the parameter sets' grads.
using LossFn = std::function<double(bool)>;

// Central differences over every coordinate of every set, relative error
// |a - n| / max(1e-8, |a| + |n|). Parameter values are restored afterwards
// and gradients are left zeroed.
GradCheckReport GradCheck(std::span<ParameterSet *const> sets,
                          const LossFn &loss, const GradCheckOptions &options);

}  // namespace espum

#endif  // ESPUM_GRADCHECK_H_
