// core/src/model.cc

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

#include "espum/model.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "espum/error.h"
#include "espum/util.h"

namespace espum {

void ModelConfig::Validate() const {
  if (unit_inventory < 1 || vocab_size < 2)
    throw Error(ErrorCode::kConfig, "model needs >= 1 unit and >= 2 phonemes");
  if (generator_kernel < 1 || segmenter_kernel < 1 || segmenter_layers < 1 ||
      segmenter_hidden < 1)
    throw Error(ErrorCode::kConfig, "model sizes must be positive");
}

NetworkSpec GeneratorSpec(const ModelConfig &c) {
  NetworkSpec spec;
  spec.layers = {LayerSpec::Conv1d(c.unit_inventory, c.vocab_size,
                                   c.generator_kernel),
                 LayerSpec::SoftmaxRows()};
  return spec;
}

NetworkSpec SegmenterSpec(const ModelConfig &c) {
  NetworkSpec spec;
  int ch = c.unit_inventory;
  for (int i = 0; i + 1 < c.segmenter_layers; ++i) {
    spec.layers.push_back(
        LayerSpec::Conv1d(ch, c.segmenter_hidden, c.segmenter_kernel));
    spec.layers.push_back(LayerSpec::Relu());
    ch = c.segmenter_hidden;
  }
  spec.layers.push_back(LayerSpec::Conv1d(ch, 1, c.segmenter_kernel));
  spec.layers.push_back(LayerSpec::Sigmoid());
  return spec;
}

Model Model::Create(const ModelConfig &config, std::uint64_t seed) {
  config.Validate();
  Model m;
  m.unit_inventory = config.unit_inventory;
  m.vocab_size = config.vocab_size;
  m.generator = Network(GeneratorSpec(config));
  m.segmenter = Network(SegmenterSpec(config));
  Rng gen_rng(MixSeed(seed, 101));
  Rng seg_rng(MixSeed(seed, 102));
  m.generator.InitXavier(gen_rng);
  m.segmenter.InitXavier(seg_rng);
  return m;
}

Tensor Model::Generate(const UnitSequence &units, Tape *tape) const {
  return generator.Forward(OneHot(units, unit_inventory), tape);
}

std::vector<double> Model::Segment(const UnitSequence &units,
                                   Tape *tape) const {
  Tensor out = segmenter.Forward(OneHot(units, unit_inventory), tape);
  return out.values();
}

namespace {

void ExportNetwork(const std::string &prefix, const Network &net,
                   TensorArchive &archive) {
  archive.Put(prefix + ".spec", net.spec().Descriptor());
  for (const auto &p : net.params().params())
    archive.Put(prefix + "." + p.name, p.value);
}

Network ImportNetwork(const std::string &prefix, const TensorArchive &archive) {
  Network net(NetworkSpec::FromDescriptor(archive.Get(prefix + ".spec")));
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    const std::string name = prefix + "." + net.params()[i].name;
    const Tensor &t = archive.Get(name);
    if (!t.SameShape(net.params()[i].value))
      throw Error(ErrorCode::kFormat, "shape mismatch for " + name);
    net.params().MutableValue(i) = t;
  }
  return net;
}

}  // namespace

void Model::Export(TensorArchive &archive) const {
  archive.PutScalar("model.unit_inventory", unit_inventory);
  archive.PutScalar("model.vocab_size", vocab_size);
  ExportNetwork("generator", generator, archive);
  ExportNetwork("segmenter", segmenter, archive);
}

Model Model::Import(const TensorArchive &archive) {
  Model m;
  m.unit_inventory = static_cast<int>(archive.GetScalar("model.unit_inventory"));
  m.vocab_size = static_cast<int>(archive.GetScalar("model.vocab_size"));
  m.generator = ImportNetwork("generator", archive);
  m.segmenter = ImportNetwork("segmenter", archive);
  if (m.generator.spec().input_channels() != m.unit_inventory ||
      m.generator.spec().output_channels() != m.vocab_size ||
      m.segmenter.spec().input_channels() != m.unit_inventory ||
      m.segmenter.spec().output_channels() != 1)
    throw Error(ErrorCode::kFormat, "checkpoint networks do not fit together");
  return m;
}

Alignment SoftAlignment(std::span<const double> b, int segments) {
  if (b.empty() || segments < 1)
    throw Error(ErrorCode::kInvalidArgument,
                "alignment needs T >= 1 and L >= 1");
  const std::size_t frames = b.size();
  const std::size_t rows = static_cast<std::size_t>(segments);
  Alignment a;
  a.weights = Tensor::Matrix(rows, frames);
  a.position.assign(frames, 0.0);
  a.row_sum.assign(rows, 0.0);
  for (std::size_t t = 1; t < frames; ++t)
    a.position[t] = a.position[t - 1] + b[t];
  for (std::size_t l = 0; l < rows; ++l) {
    auto row = a.weights.Row(l);
    double sum = 0.0;
    for (std::size_t t = 0; t < frames; ++t) {
      double r = 1.0 - std::abs(a.position[t] - static_cast<double>(l));
      if (r > 0.0) {
        row[t] = r;
        sum += r;
      }
    }
    a.row_sum[l] = sum;
    if (sum > 0.0) {
      for (double &v : row) v /= sum;
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < frames; ++t)
      best = std::min(best, std::abs(a.position[t] - static_cast<double>(l)));
    std::size_t count = 0;
    for (std::size_t t = 0; t < frames; ++t)
      if (std::abs(a.position[t] - static_cast<double>(l)) == best) {
        row[t] = 1.0;
        ++count;
      }
    for (double &v : row) v /= static_cast<double>(count);
  }
  return a;
}

std::vector<double> SoftAlignmentBackward(const Alignment &a,
                                          const Tensor &weights_grad) {
  if (!weights_grad.SameShape(a.weights))
    throw Error(ErrorCode::kShapeMismatch, "alignment gradient shape mismatch");
  const std::size_t frames = a.position.size();
  std::vector<double> ds(frames, 0.0);
  for (std::size_t l = 0; l < a.row_sum.size(); ++l) {
    const double sum = a.row_sum[l];
    if (sum <= 0.0) continue;
    auto w = a.weights.Row(l);
    auto g = weights_grad.Row(l);
    double dot = 0.0;
    for (std::size_t t = 0; t < frames; ++t) dot += g[t] * w[t];
    for (std::size_t t = 0; t < frames; ++t) {
      if (w[t] <= 0.0) continue;
      const double d = a.position[t] - static_cast<double>(l);
      const double slope = d > 0.0 ? -1.0 : (d < 0.0 ? 1.0 : 0.0);
      ds[t] += (g[t] - dot) / sum * slope;
    }
  }
  std::vector<double> db(frames, 0.0);
  double acc = 0.0;
  for (std::size_t t = frames; t-- > 1;) {
    acc += ds[t];
    db[t] = acc;
  }
  return db;
}

Tensor PoolSegments(const Tensor &weights, const Tensor &frames) {
  if (weights.rank() != 2 || frames.rank() != 2 ||
      weights.cols() != frames.rows())
    throw Error(ErrorCode::kShapeMismatch,
                "cannot pool " + frames.ShapeString() + " with alignment " +
                    weights.ShapeString());
  const std::size_t rows = weights.rows(), t_len = frames.rows(),
                    dim = frames.cols();
  Tensor out = Tensor::Matrix(rows, dim);
  for (std::size_t l = 0; l < rows; ++l) {
    auto o = out.Row(l);
    for (std::size_t t = 0; t < t_len; ++t) {
      const double w = weights(l, t);
      if (w == 0.0) continue;
      auto f = frames.Row(t);
      for (std::size_t d = 0; d < dim; ++d) o[d] += w * f[d];
    }
  }
  return out;
}

void PoolSegmentsBackward(const Tensor &weights, const Tensor &frames,
                          const Tensor &pooled_grad, Tensor *weights_grad,
                          Tensor *frames_grad) {
  const std::size_t rows = weights.rows(), t_len = frames.rows(),
                    dim = frames.cols();
  if (pooled_grad.rows() != rows || pooled_grad.cols() != dim ||
      (weights_grad && !weights_grad->SameShape(weights)) ||
      (frames_grad && !frames_grad->SameShape(frames)))
    throw Error(ErrorCode::kShapeMismatch, "pooling gradient shape mismatch");
  for (std::size_t l = 0; l < rows; ++l) {
    auto g = pooled_grad.Row(l);
    for (std::size_t t = 0; t < t_len; ++t) {
      auto f = frames.Row(t);
      if (weights_grad) {
        double dot = 0.0;
        for (std::size_t d = 0; d < dim; ++d) dot += g[d] * f[d];
        (*weights_grad)(l, t) += dot;
      }
      const double w = weights(l, t);
      if (frames_grad && w != 0.0) {
        auto fg = frames_grad->Row(t);
        for (std::size_t d = 0; d < dim; ++d) fg[d] += w * g[d];
      }
    }
  }
}

Tensor HardPool(std::span<const std::uint8_t> flags, const Tensor &frames) {
  if (flags.size() != frames.rows())
    throw Error(ErrorCode::kShapeMismatch, "flags do not match frame count");
  const std::size_t t_len = frames.rows(), dim = frames.cols();
  std::vector<std::vector<double>> rows;
  std::vector<double> acc(dim, 0.0);
  std::size_t count = 0;
  auto flush = [&]() {
    for (double &v : acc) v /= static_cast<double>(count);
    rows.push_back(acc);
    std::fill(acc.begin(), acc.end(), 0.0);
    count = 0;
  };
  for (std::size_t t = 0; t < t_len; ++t) {
    if (t > 0 && flags[t]) flush();
    auto f = frames.Row(t);
    for (std::size_t d = 0; d < dim; ++d) acc[d] += f[d];
    ++count;
  }
  if (count > 0) flush();
  Tensor out = Tensor::Matrix(rows.size(), dim);
  for (std::size_t l = 0; l < rows.size(); ++l)
    std::copy(rows[l].begin(), rows[l].end(), out.Row(l).begin());
  return out;
}

Tensor HardPool(const BoundaryLabels &labels, const Tensor &frames) {
  return HardPool(labels.flags, frames);
}

BoundaryLabels BinarizeBoundaries(std::span<const double> b, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "threshold must lie in (0, 1)");
  BoundaryLabels labels;
  labels.flags.assign(b.size(), 0);
  labels.confidence.assign(b.size(), 0.0);
  for (std::size_t t = 0; t < b.size(); ++t) {
    if (t > 0 && b[t] >= threshold) labels.flags[t] = 1;
    labels.confidence[t] = std::max(b[t], 1.0 - b[t]);
  }
  return labels;
}

}  // namespace espum
