// Copyright 2026 The PDM Planner Authors
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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pdm {

/// Shape of a multi-input MLP: every input block is linearly projected to
/// `projection` features, the projections are concatenated and fed through two
/// ReLU hidden layers and a linear output head.
struct MlpShape {
  std::vector<int> inputs;
  int projection = 512;
  int hidden = 512;
  int outputs = 48;

  bool operator==(const MlpShape &) const = default;
};

template <typename T>
class MlpT {
public:
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  struct Linear {
    Mat w;  // out x in
    Vec b;
  };

  /// Activations kept for the backward pass; one column per sample.
  struct Cache {
    std::vector<Mat> inputs;
    Mat concat;
    Mat h1;
    Mat h2;
    Mat out;
  };

  MlpT() = default;
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization from `seed`.
  MlpT(MlpShape shape, std::uint64_t seed);

  const MlpShape & shape() const { return shape_; }
  std::uint64_t seed() const { return seed_; }

  /// Inputs hold one column per sample; returns outputs x batch.
  Mat forward(const std::vector<Mat> & inputs) const;
  Mat forward(const std::vector<Mat> & inputs, Cache & cache) const;

  /// Gradients of a loss with d loss / d output = `grad_out` into `grads`
  /// (same layout as the model's parameters).
  void backward(const Cache & cache, const Mat & grad_out, MlpT & grads) const;

  /// Mean absolute error over all output entries and its output gradient.
  static T l1_loss(const Mat & out, const Mat & target, Mat * grad_out);

  void zero_output_head();
  void set_zero();
  std::size_t parameter_count() const;
  /// Flat view over all parameters in a fixed order.
  std::vector<T *> parameter_blocks(std::vector<std::size_t> & sizes);
  void copy_to(std::vector<T> & flat) const;
  void copy_from(std::span<const T> flat);
  bool all_finite() const;

  template <typename U>
  MlpT<U> cast() const;

  std::vector<Linear> projections;
  Linear hidden1;
  Linear hidden2;
  Linear head;

private:
  template <typename U>
  friend class MlpT;
  MlpShape shape_;
  std::uint64_t seed_ = 0;
};

using Mlp = MlpT<float>;

struct AdamParams {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment optimizer over every parameter of one model.
template <typename T>
class Adam {
public:
  Adam(const MlpT<T> & model, AdamParams params);
  void step(MlpT<T> & model, const MlpT<T> & grads);

private:
  AdamParams p_;
  std::vector<T> m_;
  std::vector<T> v_;
  long t_ = 0;
};

}  // namespace pdm
