// core/src/network.cc

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

#include "espum/network.h"

#include <algorithm>
#include <cmath>

#include "espum/error.h"

namespace espum {

namespace {

const char *KindName(LayerKind k) {
  switch (k) {
    case LayerKind::kConv1d: return "conv1d";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kSigmoid: return "sigmoid";
    case LayerKind::kSoftmaxRows: return "softmax_rows";
    case LayerKind::kSquare: return "square";
  }
  return "?";
}

std::size_t PadLeft(const LayerSpec &l, std::size_t frames, std::size_t out) {
  if (l.padding == Padding::kValid) return 0;
  long long total = static_cast<long long>((out - 1) * l.stride + l.kernel) -
                    static_cast<long long>(frames);
  return total > 0 ? static_cast<std::size_t>(total / 2) : 0;
}

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

LayerSpec LayerSpec::Conv1d(int in, int out, int kernel, int stride,
                            Padding padding) {
  LayerSpec l;
  l.kind = LayerKind::kConv1d;
  l.in_channels = in;
  l.out_channels = out;
  l.kernel = kernel;
  l.stride = stride;
  l.padding = padding;
  return l;
}

std::string LayerSpec::ToString() const {
  if (kind != LayerKind::kConv1d) return KindName(kind);
  return "conv1d(" + std::to_string(in_channels) + "," +
         std::to_string(out_channels) + ",k=" + std::to_string(kernel) +
         ",s=" + std::to_string(stride) +
         (padding == Padding::kSame ? ",same)" : ",valid)");
}

void NetworkSpec::Validate() const {
  int channels = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto &l = layers[i];
    if (l.kind != LayerKind::kConv1d) continue;
    if (l.in_channels < 1 || l.out_channels < 1 || l.kernel < 1 || l.stride < 1)
      throw Error(ErrorCode::kInvalidArgument,
                  "layer " + std::to_string(i) + " " + l.ToString() +
                      " has non-positive size");
    if (channels != 0 && l.in_channels != channels)
      throw Error(ErrorCode::kInvalidArgument,
                  "layer " + std::to_string(i) + " expects " +
                      std::to_string(l.in_channels) + " channels, gets " +
                      std::to_string(channels));
    channels = l.out_channels;
  }
}

int NetworkSpec::input_channels() const {
  for (const auto &l : layers)
    if (l.kind == LayerKind::kConv1d) return l.in_channels;
  return 0;
}

int NetworkSpec::output_channels() const {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it)
    if (it->kind == LayerKind::kConv1d) return it->out_channels;
  return 0;
}

std::string NetworkSpec::ToString() const {
  std::string s;
  for (std::size_t i = 0; i < layers.size(); ++i)
    s += (i ? " " : "") + layers[i].ToString();
  return s;
}

Tensor NetworkSpec::Descriptor() const {
  Tensor t = Tensor::Matrix(layers.size(), 6);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto &l = layers[i];
    t(i, 0) = static_cast<double>(l.kind);
    t(i, 1) = l.in_channels;
    t(i, 2) = l.out_channels;
    t(i, 3) = l.kernel;
    t(i, 4) = l.stride;
    t(i, 5) = static_cast<double>(l.padding);
  }
  return t;
}

NetworkSpec NetworkSpec::FromDescriptor(const Tensor &table) {
  if (table.rank() != 2 || (table.rows() > 0 && table.cols() != 6))
    throw Error(ErrorCode::kFormat, "network descriptor must be n x 6");
  NetworkSpec spec;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    int kind = static_cast<int>(table(i, 0));
    int pad = static_cast<int>(table(i, 5));
    if (kind < 0 || kind > static_cast<int>(LayerKind::kSquare) || pad < 0 ||
        pad > 1)
      throw Error(ErrorCode::kFormat, "bad layer descriptor row " +
                                          std::to_string(i));
    LayerSpec l;
    l.kind = static_cast<LayerKind>(kind);
    l.in_channels = static_cast<int>(table(i, 1));
    l.out_channels = static_cast<int>(table(i, 2));
    l.kernel = static_cast<int>(table(i, 3));
    l.stride = static_cast<int>(table(i, 4));
    l.padding = static_cast<Padding>(pad);
    spec.layers.push_back(l);
  }
  spec.Validate();
  return spec;
}

Parameter &ParameterSet::Add(std::string name, std::vector<std::size_t> shape) {
  Parameter p;
  p.name = std::move(name);
  p.value = Tensor(shape);
  p.grad = Tensor(shape);
  params_.push_back(std::move(p));
  ++version_;
  return params_.back();
}

const Parameter *ParameterSet::Find(const std::string &name) const {
  for (const auto &p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

std::size_t ParameterSet::ParameterCount() const {
  std::size_t n = 0;
  for (const auto &p : params_) n += p.value.size();
  return n;
}

void ParameterSet::ZeroGrad() {
  for (auto &p : params_) p.grad.Fill(0.0);
}

std::size_t ConvOutputLength(const LayerSpec &layer, std::size_t frames) {
  if (layer.padding == Padding::kSame)
    return (frames + layer.stride - 1) / layer.stride;
  if (frames < static_cast<std::size_t>(layer.kernel))
    throw Error(ErrorCode::kShapeMismatch,
                std::to_string(frames) + " frames shorter than kernel " +
                    std::to_string(layer.kernel));
  return (frames - layer.kernel) / layer.stride + 1;
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.Validate();
  conv_param_index_.assign(spec_.layers.size(), 0);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto &l = spec_.layers[i];
    if (l.kind != LayerKind::kConv1d) continue;
    conv_param_index_[i] = params_.size();
    std::string base = "layer" + std::to_string(i);
    params_.Add(base + ".weight",
                {static_cast<std::size_t>(l.out_channels),
                 static_cast<std::size_t>(l.in_channels),
                 static_cast<std::size_t>(l.kernel)});
    params_.Add(base + ".bias", {static_cast<std::size_t>(l.out_channels)});
  }
}

void Network::InitXavier(Rng &rng) {
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto &l = spec_.layers[i];
    if (l.kind != LayerKind::kConv1d) continue;
    double fan_in = static_cast<double>(l.in_channels) * l.kernel;
    double fan_out = static_cast<double>(l.out_channels) * l.kernel;
    double a = std::sqrt(6.0 / (fan_in + fan_out));
    std::size_t w = conv_param_index_[i];
    for (double &v : params_.MutableValue(w).values()) v = rng.Uniform(-a, a);
    params_.MutableValue(w + 1).Fill(0.0);
  }
}

Tensor Network::Forward(const Tensor &input, Tape *tape) const {
  if (input.rank() != 2 || input.rows() == 0)
    throw Error(ErrorCode::kShapeMismatch,
                "network input must be T x C with T >= 1, got " +
                    input.ShapeString());
  int in_ch = spec_.input_channels();
  if (in_ch != 0 && static_cast<int>(input.cols()) != in_ch)
    throw Error(ErrorCode::kShapeMismatch,
                "network expects " + std::to_string(in_ch) +
                    " input channels, got " + std::to_string(input.cols()));
  std::vector<Tensor> acts;
  acts.reserve(spec_.layers.size() + 1);
  acts.push_back(input);
  for (std::size_t li = 0; li < spec_.layers.size(); ++li) {
    const auto &l = spec_.layers[li];
    const Tensor &x = acts.back();
    Tensor y;
    switch (l.kind) {
      case LayerKind::kConv1d: {
        const std::size_t frames = x.rows();
        const std::size_t out_len = ConvOutputLength(l, frames);
        const std::size_t pl = PadLeft(l, frames, out_len);
        const std::size_t ci = l.in_channels, co = l.out_channels,
                          kk = l.kernel;
        const auto &w = params_[conv_param_index_[li]].value;
        const auto &b = params_[conv_param_index_[li] + 1].value;
        y = Tensor::Matrix(out_len, co);
        for (std::size_t t = 0; t < out_len; ++t) {
          auto out = y.Row(t);
          for (std::size_t o = 0; o < co; ++o) out[o] = b[o];
          for (std::size_t k = 0; k < kk; ++k) {
            long long pos = static_cast<long long>(t * l.stride + k) -
                            static_cast<long long>(pl);
            if (pos < 0 || pos >= static_cast<long long>(frames)) continue;
            auto in = x.Row(static_cast<std::size_t>(pos));
            for (std::size_t i = 0; i < ci; ++i) {
              const double xi = in[i];
              if (xi == 0.0) continue;  // one-hot inputs are mostly zero
              const double *wp = w.data() + i * kk + k;
              for (std::size_t o = 0; o < co; ++o)
                out[o] += wp[o * ci * kk] * xi;
            }
          }
        }
        break;
      }
      case LayerKind::kRelu:
        y = x;
        for (double &v : y.values()) v = v > 0.0 ? v : 0.0;
        break;
      case LayerKind::kSigmoid:
        y = x;
        for (double &v : y.values()) v = Sigmoid(v);
        break;
      case LayerKind::kSquare:
        y = x;
        for (double &v : y.values()) v = v * v;
        break;
      case LayerKind::kSoftmaxRows: {
        y = x;
        for (std::size_t r = 0; r < y.rows(); ++r) {
          auto row = y.Row(r);
          double mx = *std::max_element(row.begin(), row.end());
          double sum = 0.0;
          for (double &v : row) sum += (v = std::exp(v - mx));
          for (double &v : row) v /= sum;
        }
        break;
      }
    }
    acts.push_back(std::move(y));
  }
  Tensor out = acts.back();
  if (tape != nullptr) {
    tape->owner_ = &params_;
    tape->version_ = params_.version();
    tape->acts_ = std::move(acts);
  }
  return out;
}

Tensor Network::Backward(const Tape &tape, const Tensor &output_grad,
                         bool want_input_grad) {
  if (tape.owner_ != &params_ || tape.version_ != params_.version())
    throw Error(ErrorCode::kStaleTape,
                "tape does not match the current parameters");
  if (!output_grad.SameShape(tape.output()))
    throw Error(ErrorCode::kShapeMismatch,
                "output gradient " + output_grad.ShapeString() +
                    " vs output " + tape.output().ShapeString());
  Tensor g = output_grad;
  for (std::size_t li = spec_.layers.size(); li-- > 0;) {
    const auto &l = spec_.layers[li];
    const Tensor &x = tape.acts_[li];
    const Tensor &y = tape.acts_[li + 1];
    const bool need_gx = want_input_grad || li > 0;
    switch (l.kind) {
      case LayerKind::kConv1d: {
        const std::size_t frames = x.rows();
        const std::size_t out_len = y.rows();
        const std::size_t pl = PadLeft(l, frames, out_len);
        const std::size_t ci = l.in_channels, co = l.out_channels,
                          kk = l.kernel;
        const std::size_t wi = conv_param_index_[li];
        const auto &w = params_[wi].value;
        auto &gw = params_.Grad(wi);
        auto &gb = params_.Grad(wi + 1);
        Tensor gx = need_gx ? Tensor::Matrix(frames, ci) : Tensor();
        for (std::size_t t = 0; t < out_len; ++t) {
          auto go = g.Row(t);
          for (std::size_t o = 0; o < co; ++o) gb[o] += go[o];
          for (std::size_t k = 0; k < kk; ++k) {
            long long pos = static_cast<long long>(t * l.stride + k) -
                            static_cast<long long>(pl);
            if (pos < 0 || pos >= static_cast<long long>(frames)) continue;
            auto in = x.Row(static_cast<std::size_t>(pos));
            for (std::size_t i = 0; i < ci; ++i) {
              const double xi = in[i];
              const std::size_t off = i * kk + k;
              if (xi != 0.0) {
                double *gwp = gw.data() + off;
                for (std::size_t o = 0; o < co; ++o)
                  gwp[o * ci * kk] += go[o] * xi;
              }
              if (need_gx) {
                const double *wp = w.data() + off;
                double acc = 0.0;
                for (std::size_t o = 0; o < co; ++o)
                  acc += go[o] * wp[o * ci * kk];
                gx(static_cast<std::size_t>(pos), i) += acc;
              }
            }
          }
        }
        g = std::move(gx);
        break;
      }
      case LayerKind::kRelu:
        for (std::size_t i = 0; i < g.size(); ++i)
          if (!(x[i] > 0.0)) g[i] = 0.0;
        break;
      case LayerKind::kSigmoid:
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= y[i] * (1.0 - y[i]);
        break;
      case LayerKind::kSquare:
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 2.0 * x[i];
        break;
      case LayerKind::kSoftmaxRows:
        for (std::size_t r = 0; r < g.rows(); ++r) {
          auto gr = g.Row(r);
          auto yr = y.Row(r);
          double dot = 0.0;
          for (std::size_t c = 0; c < gr.size(); ++c) dot += gr[c] * yr[c];
          for (std::size_t c = 0; c < gr.size(); ++c)
            gr[c] = yr[c] * (gr[c] - dot);
        }
        break;
    }
    if (!need_gx) return Tensor();
  }
  return g;
}

}  // namespace espum
