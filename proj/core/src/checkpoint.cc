// core/src/checkpoint.cc

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

#include "espum/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "espum/error.h"

namespace espum {

namespace {

constexpr char kMagic[4] = {'E', 'S', 'P', 'M'};

template <typename T>
void PutLe(std::ostream &out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
      std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  out.write(reinterpret_cast<const char *>(bytes), sizeof(T));
}

template <typename T>
bool GetLe(std::istream &in, T &value) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char *>(bytes), sizeof(T))) return false;
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
      std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  std::memcpy(&value, bytes, sizeof(T));
  return true;
}

[[noreturn]] void Truncated(const std::string &what) {
  throw Error(ErrorCode::kFormat, "truncated archive while reading " + what);
}

}  // namespace

void TensorArchive::Put(const std::string &name, Tensor value) {
  auto it = index_.find(name);
  if (it != index_.end()) {
    entries_[it->second].second = std::move(value);
    return;
  }
  index_[name] = entries_.size();
  entries_.emplace_back(name, std::move(value));
}

void TensorArchive::PutScalar(const std::string &name, double value) {
  Put(name, Tensor({1}, value));
}

bool TensorArchive::Has(const std::string &name) const {
  return index_.count(name) > 0;
}

const Tensor &TensorArchive::Get(const std::string &name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw Error(ErrorCode::kFormat, "archive has no entry '" + name + "'");
  return entries_[it->second].second;
}

double TensorArchive::GetScalar(const std::string &name) const {
  const Tensor &t = Get(name);
  if (t.size() != 1)
    throw Error(ErrorCode::kFormat, "entry '" + name + "' is not a scalar");
  return t[0];
}

void TensorArchive::Write(std::ostream &out) const {
  out.write(kMagic, 4);
  PutLe<std::uint32_t>(out, kArchiveVersion);
  for (const auto &[name, t] : entries_) {
    PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) PutLe<std::uint64_t>(out, d);
    for (double v : t.values()) PutLe<double>(out, v);
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing archive");
}

TensorArchive TensorArchive::Read(std::istream &in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw Error(ErrorCode::kFormat, "not an ESPM archive");
  std::uint32_t version = 0;
  if (!GetLe(in, version)) Truncated("version");
  if (version != kArchiveVersion)
    throw Error(ErrorCode::kFormat,
                "unsupported archive version " + std::to_string(version));
  TensorArchive archive;
  while (true) {
    std::uint32_t name_len = 0;
    if (!GetLe(in, name_len)) {
      if (in.eof() && in.gcount() == 0) break;
      Truncated("entry header");
    }
    if (name_len > (1u << 16)) throw Error(ErrorCode::kFormat, "bad name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) Truncated("entry name");
    std::uint32_t rank = 0;
    if (!GetLe(in, rank) || rank > 16) Truncated("rank of " + name);
    std::vector<std::size_t> shape(rank);
    std::uint64_t count = 1;
    for (auto &d : shape) {
      std::uint64_t v = 0;
      if (!GetLe(in, v)) Truncated("shape of " + name);
      d = static_cast<std::size_t>(v);
      count *= v;
    }
    if (count > (std::uint64_t{1} << 32))
      throw Error(ErrorCode::kFormat, "entry '" + name + "' is too large");
    Tensor t(shape);
    for (double &v : t.values())
      if (!GetLe(in, v)) Truncated("values of " + name);
    archive.Put(name, std::move(t));
  }
  return archive;
}

void TensorArchive::Save(const std::string &path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  Write(out);
}

TensorArchive TensorArchive::Load(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  return Read(in);
}

}  // namespace espum
