// core/include/espum/checkpoint.h

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

// Binary tensor archive, little-endian:
//   "ESPM"  u32 version
//   repeated until end of file:
//     u32 name length, name bytes, u32 rank, u64 dims[rank], f64 values
// Parameters, optimizer moments and bookkeeping scalars all travel as named
// tensors.

#ifndef ESPUM_CHECKPOINT_H_
#define ESPUM_CHECKPOINT_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "espum/tensor.h"

namespace espum {

inline constexpr std::uint32_t kArchiveVersion = 1;

class TensorArchive {
 public:
  void Put(const std::string &name, Tensor value);
  void PutScalar(const std::string &name, double value);
  bool Has(const std::string &name) const;
  // Throw kFormat when missing.
  const Tensor &Get(const std::string &name) const;
  double GetScalar(const std::string &name) const;

  const std::vector<std::pair<std::string, Tensor>> &entries() const {
    return entries_;
  }

  void Write(std::ostream &out) const;
  static TensorArchive Read(std::istream &in);
  void Save(const std::string &path) const;
  static TensorArchive Load(const std::string &path);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace espum

#endif  // ESPUM_CHECKPOINT_H_
