// core/src/util.cc

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

#include "espum/util.h"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>

#include "espum/error.h"

namespace espum {

const char *ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kUnknownSymbol: return "UnknownSymbol";
    case ErrorCode::kRange: return "RangeError";
    case ErrorCode::kNoSupport: return "NoSupport";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kStaleTape: return "StaleTape";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kDiverged: return "Diverged";
    case ErrorCode::kFormat: return "FormatError";
  }
  return "Error";
}

std::uint64_t Rng::Below(std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "Rng::Below(0)");
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::Normal() {
  // Box-Muller; 1 - U keeps the log argument in (0, 1].
  double u1 = 1.0 - Uniform();
  double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

int Rng::Categorical(const std::vector<double> &weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "categorical weights sum to 0");
  double r = Uniform() * total;
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = static_cast<int>(i);
    acc += weights[i];
    if (r < acc) return static_cast<int>(i);
  }
  return last_positive;
}

std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t Fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string FormatDouble(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

bool ParseDouble(std::string_view text, double &value) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

bool ParseInt(std::string_view text, long long &value) {
  if (text.empty()) return false;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

std::vector<std::string_view> SplitWhitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])))
      ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

KeyValueConfig KeyValueConfig::Parse(std::istream &in,
                                     const std::set<std::string> &allowed) {
  KeyValueConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = Trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::kConfig, "line " + std::to_string(line_no) +
                                          ": expected key = value");
    std::string key(Trim(view.substr(0, eq)));
    std::string value(Trim(view.substr(eq + 1)));
    if (key.empty())
      throw Error(ErrorCode::kConfig,
                  "line " + std::to_string(line_no) + ": empty key");
    if (!allowed.count(key))
      throw Error(ErrorCode::kConfig, "line " + std::to_string(line_no) +
                                          ": unknown key '" + key + "'");
    if (!cfg.values_.emplace(key, value).second)
      throw Error(ErrorCode::kConfig, "line " + std::to_string(line_no) +
                                          ": duplicate key '" + key + "'");
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::Load(const std::string &path,
                                    const std::set<std::string> &allowed) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  try {
    return Parse(in, allowed);
  } catch (const Error &e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

std::string KeyValueConfig::GetString(const std::string &key,
                                      const std::string &fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::GetDouble(const std::string &key,
                                 double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  double v;
  if (!ParseDouble(it->second, v))
    throw Error(ErrorCode::kConfig,
                key + ": expected a number, got '" + it->second + "'");
  return v;
}

long long KeyValueConfig::GetInt(const std::string &key,
                                 long long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  long long v;
  if (!ParseInt(it->second, v))
    throw Error(ErrorCode::kConfig,
                key + ": expected an integer, got '" + it->second + "'");
  return v;
}

bool KeyValueConfig::GetBool(const std::string &key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string &v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::kConfig, key + ": expected a boolean, got '" + v + "'");
}

}  // namespace espum
