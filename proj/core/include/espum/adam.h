// core/include/espum/adam.h

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

#ifndef ESPUM_ADAM_H_
#define ESPUM_ADAM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "espum/network.h"

namespace espum {

struct AdamConfig {
  double lr = 0.004;
  double beta1 = 0.5;
  double beta2 = 0.98;
  double epsilon = 1e-8;

  void Validate() const;
};

// Moments are kept per parameter tensor, in the order the parameter sets
// are passed to AdamStep (set by set, tensor by tensor).
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

// One bias-corrected update over all parameters of `sets`, then zeroes
// their gradients. Moments are created on the first call.
void AdamStep(std::span<ParameterSet *const> sets, AdamState &state);

}  // namespace espum

#endif  // ESPUM_ADAM_H_
