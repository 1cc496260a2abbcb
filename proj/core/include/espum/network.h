// core/include/espum/network.h

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

// Feed-forward stacks of 1-D convolutions and pointwise activations over
// frame sequences (T x channels), with a recorded tape for reverse mode.

#ifndef ESPUM_NETWORK_H_
#define ESPUM_NETWORK_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "espum/tensor.h"
#include "espum/util.h"

namespace espum {

enum class LayerKind { kConv1d = 0, kRelu, kSigmoid, kSoftmaxRows, kSquare };
enum class Padding { kSame = 0, kValid };

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  int in_channels = 0;  // conv only
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  Padding padding = Padding::kSame;

  static LayerSpec Conv1d(int in, int out, int kernel, int stride = 1,
                          Padding padding = Padding::kSame);
  static LayerSpec Relu() { return {LayerKind::kRelu}; }
  static LayerSpec Sigmoid() { return {LayerKind::kSigmoid}; }
  static LayerSpec SoftmaxRows() { return {LayerKind::kSoftmaxRows}; }
  static LayerSpec Square() { return {LayerKind::kSquare}; }

  std::string ToString() const;
  bool operator==(const LayerSpec &) const = default;
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;

  // Throws kInvalidArgument on bad sizes or incompatible channel counts.
  void Validate() const;
  // Channel count the first conv expects, or 0 if there is none.
  int input_channels() const;
  // Channel count after the last conv, or 0 if there is none.
  int output_channels() const;
  std::string ToString() const;

  // [n_layers, 6] table: kind, in, out, kernel, stride, padding.
  Tensor Descriptor() const;
  static NetworkSpec FromDescriptor(const Tensor &table);

  bool operator==(const NetworkSpec &) const = default;
};

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Owns parameter values and gradient accumulators. Any mutation of values
// through this class bumps version(), which invalidates older tapes.
class ParameterSet {
 public:
  Parameter &Add(std::string name, std::vector<std::size_t> shape);

  std::size_t size() const { return params_.size(); }
  const Parameter &operator[](std::size_t i) const { return params_[i]; }
  const std::vector<Parameter> &params() const { return params_; }
  const Parameter *Find(const std::string &name) const;
  std::size_t ParameterCount() const;

  Tensor &MutableValue(std::size_t i) {
    ++version_;
    return params_[i].value;
  }
  Tensor &Grad(std::size_t i) { return params_[i].grad; }
  void ZeroGrad();
  void Touch() { ++version_; }

  std::uint64_t version() const { return version_; }

 private:
  std::vector<Parameter> params_;
  std::uint64_t version_ = 0;
};

class Network;

// Intermediates of one forward pass. Only valid for the network and
// parameter version that produced it.
class Tape {
 public:
  const Tensor &output() const { return acts_.back(); }

 private:
  friend class Network;
  const ParameterSet *owner_ = nullptr;
  std::uint64_t version_ = 0;
  std::vector<Tensor> acts_;  // acts_[0] = input, acts_[i+1] = layer i out
};

class Network {
 public:
  Network() = default;
  // Parameters named "<layer>.weight" ([out, in, kernel]) and "<layer>.bias"
  // are created zero-filled for every conv layer.
  explicit Network(NetworkSpec spec);

  const NetworkSpec &spec() const { return spec_; }
  ParameterSet &params() { return params_; }
  const ParameterSet &params() const { return params_; }

  // Uniform in [-a, a], a = sqrt(6 / (fan_in + fan_out)); biases zero.
  void InitXavier(Rng &rng);

  // input: T x in_channels.
  Tensor Forward(const Tensor &input, Tape *tape) const;
  // Adds parameter gradients for the scalar whose gradient with respect to
  // the output is `output_grad`. Returns the input gradient when asked
  // (otherwise an empty tensor). Throws kStaleTape if parameters changed
  // after the forward pass.
  Tensor Backward(const Tape &tape, const Tensor &output_grad,
                  bool want_input_grad = true);

 private:
  NetworkSpec spec_;
  ParameterSet params_;
  std::vector<std::size_t> conv_param_index_;  // per layer, weight index
};

// Output length of a conv layer over `frames` input frames.
std::size_t ConvOutputLength(const LayerSpec &layer, std::size_t frames);

}  // namespace espum

#endif  // ESPUM_NETWORK_H_
