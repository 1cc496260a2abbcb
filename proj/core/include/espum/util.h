// core/include/espum/util.h

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

#ifndef ESPUM_UTIL_H_
#define ESPUM_UTIL_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace espum {

// Engine from the standard library; the conversions to doubles and integers
// are spelled out here so sampled values do not depend on the standard
// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1).
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform in [0, n).
  std::uint64_t Below(std::uint64_t n);
  double Normal();
  // Index drawn proportionally to `weights`.
  int Categorical(const std::vector<double> &weights);
  template <typename T>
  void Shuffle(std::vector<T> &v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = Below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Derives a well-mixed seed for a sub-stream.
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream);

std::uint64_t Fnv1a64(std::string_view bytes);

// Shortest text that parses back to the same double.
std::string FormatDouble(double value);
bool ParseDouble(std::string_view text, double &value);
bool ParseInt(std::string_view text, long long &value);

std::vector<std::string_view> SplitWhitespace(std::string_view line);
std::string_view Trim(std::string_view s);

// Flat "key = value" text. Blank lines and lines starting with '#' are
// skipped. Keys outside `allowed` are rejected.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig Parse(std::istream &in,
                              const std::set<std::string> &allowed);
  static KeyValueConfig Load(const std::string &path,
                             const std::set<std::string> &allowed);

  bool Has(const std::string &key) const { return values_.count(key) > 0; }
  void Set(const std::string &key, const std::string &value) {
    values_[key] = value;
  }
  std::string GetString(const std::string &key,
                        const std::string &fallback) const;
  double GetDouble(const std::string &key, double fallback) const;
  long long GetInt(const std::string &key, long long fallback) const;
  bool GetBool(const std::string &key, bool fallback) const;
  const std::map<std::string, std::string> &values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace espum

#endif  // ESPUM_UTIL_H_
