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

#include "pdm/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "pdm/errors.hpp"
#include "pdm/generator.hpp"

namespace pdm {

namespace {

template <typename T>
typename MlpT<T>::Linear make_linear(int in, int out, SplitMix & rng)
{
  typename MlpT<T>::Linear l;
  l.w.resize(out, in);
  l.b.resize(out);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  // Row-major fill order keeps the stream independent of storage order.
  for (int r = 0; r < out; ++r) {
    for (int c = 0; c < in; ++c) {
      l.w(r, c) = static_cast<T>(rng.uniform(-bound, bound));
    }
  }
  for (int r = 0; r < out; ++r) {
    l.b(r) = static_cast<T>(rng.uniform(-bound, bound));
  }
  return l;
}

template <typename T, typename F>
void for_each_linear(MlpT<T> & m, F && fn)
{
  for (auto & p : m.projections) {
    fn(p);
  }
  fn(m.hidden1);
  fn(m.hidden2);
  fn(m.head);
}

template <typename T, typename F>
void for_each_linear(const MlpT<T> & m, F && fn)
{
  for (const auto & p : m.projections) {
    fn(p);
  }
  fn(m.hidden1);
  fn(m.hidden2);
  fn(m.head);
}

}  // namespace

template <typename T>
MlpT<T>::MlpT(MlpShape shape, std::uint64_t seed) : shape_(std::move(shape)), seed_(seed)
{
  if (shape_.inputs.empty() || shape_.projection <= 0 || shape_.hidden <= 0 || shape_.outputs <= 0) {
    throw ConfigError("mlp shape needs at least one input and positive widths");
  }
  SplitMix rng(seed);
  for (int in : shape_.inputs) {
    if (in <= 0) {
      throw ConfigError("mlp input blocks must be non-empty");
    }
    projections.push_back(make_linear<T>(in, shape_.projection, rng));
  }
  const int concat = shape_.projection * static_cast<int>(shape_.inputs.size());
  hidden1 = make_linear<T>(concat, shape_.hidden, rng);
  hidden2 = make_linear<T>(shape_.hidden, shape_.hidden, rng);
  head = make_linear<T>(shape_.hidden, shape_.outputs, rng);
}

template <typename T>
typename MlpT<T>::Mat MlpT<T>::forward(const std::vector<Mat> & inputs) const
{
  Cache cache;
  return forward(inputs, cache);
}

template <typename T>
typename MlpT<T>::Mat MlpT<T>::forward(const std::vector<Mat> & inputs, Cache & cache) const
{
  if (inputs.size() != projections.size()) {
    throw ConfigError("mlp forward: wrong number of input blocks");
  }
  const Eigen::Index batch = inputs.front().cols();
  const int p = shape_.projection;
  cache.inputs = inputs;
  cache.concat.resize(p * static_cast<Eigen::Index>(inputs.size()), batch);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].rows() != shape_.inputs[i] || inputs[i].cols() != batch) {
      throw ConfigError("mlp forward: input block has the wrong shape");
    }
    cache.concat.middleRows(static_cast<Eigen::Index>(i) * p, p).noalias() = projections[i].w * inputs[i];
    cache.concat.middleRows(static_cast<Eigen::Index>(i) * p, p).colwise() += projections[i].b;
  }
  cache.h1.noalias() = hidden1.w * cache.concat;
  cache.h1.colwise() += hidden1.b;
  cache.h1 = cache.h1.cwiseMax(T(0));
  cache.h2.noalias() = hidden2.w * cache.h1;
  cache.h2.colwise() += hidden2.b;
  cache.h2 = cache.h2.cwiseMax(T(0));
  cache.out.noalias() = head.w * cache.h2;
  cache.out.colwise() += head.b;
  return cache.out;
}

template <typename T>
void MlpT<T>::backward(const Cache & cache, const Mat & grad_out, MlpT & g) const
{
  g.shape_ = shape_;
  g.projections.resize(projections.size());
  g.head.w.noalias() = grad_out * cache.h2.transpose();
  g.head.b = grad_out.rowwise().sum();
  Mat d2 = head.w.transpose() * grad_out;
  d2 = d2.cwiseProduct((cache.h2.array() > T(0)).template cast<T>().matrix());
  g.hidden2.w.noalias() = d2 * cache.h1.transpose();
  g.hidden2.b = d2.rowwise().sum();
  Mat d1 = hidden2.w.transpose() * d2;
  d1 = d1.cwiseProduct((cache.h1.array() > T(0)).template cast<T>().matrix());
  g.hidden1.w.noalias() = d1 * cache.concat.transpose();
  g.hidden1.b = d1.rowwise().sum();
  const Mat dc = hidden1.w.transpose() * d1;
  const int p = shape_.projection;
  for (std::size_t i = 0; i < projections.size(); ++i) {
    const auto block = dc.middleRows(static_cast<Eigen::Index>(i) * p, p);
    g.projections[i].w.noalias() = block * cache.inputs[i].transpose();
    g.projections[i].b = block.rowwise().sum();
  }
}

template <typename T>
T MlpT<T>::l1_loss(const Mat & out, const Mat & target, Mat * grad_out)
{
  const Mat diff = out - target;
  const T n = static_cast<T>(diff.size());
  if (grad_out != nullptr) {
    *grad_out = diff.unaryExpr([n](T d) { return d > T(0) ? T(1) / n : (d < T(0) ? T(-1) / n : T(0)); });
  }
  return diff.cwiseAbs().sum() / n;
}

template <typename T>
void MlpT<T>::zero_output_head()
{
  head.w.setZero();
  head.b.setZero();
}

template <typename T>
void MlpT<T>::set_zero()
{
  for_each_linear(*this, [](Linear & l) {
    l.w.setZero();
    l.b.setZero();
  });
}

template <typename T>
std::size_t MlpT<T>::parameter_count() const
{
  std::size_t n = 0;
  for_each_linear(*this, [&n](const Linear & l) { n += static_cast<std::size_t>(l.w.size() + l.b.size()); });
  return n;
}

template <typename T>
std::vector<T *> MlpT<T>::parameter_blocks(std::vector<std::size_t> & sizes)
{
  std::vector<T *> out;
  sizes.clear();
  for_each_linear(*this, [&](Linear & l) {
    out.push_back(l.w.data());
    sizes.push_back(static_cast<std::size_t>(l.w.size()));
    out.push_back(l.b.data());
    sizes.push_back(static_cast<std::size_t>(l.b.size()));
  });
  return out;
}

template <typename T>
void MlpT<T>::copy_to(std::vector<T> & flat) const
{
  flat.clear();
  flat.reserve(parameter_count());
  for_each_linear(*this, [&flat](const Linear & l) {
    flat.insert(flat.end(), l.w.data(), l.w.data() + l.w.size());
    flat.insert(flat.end(), l.b.data(), l.b.data() + l.b.size());
  });
}

template <typename T>
void MlpT<T>::copy_from(std::span<const T> flat)
{
  if (flat.size() != parameter_count()) {
    throw ConfigError("parameter vector size does not match the model");
  }
  std::size_t at = 0;
  for_each_linear(*this, [&](Linear & l) {
    std::copy(flat.begin() + at, flat.begin() + at + l.w.size(), l.w.data());
    at += static_cast<std::size_t>(l.w.size());
    std::copy(flat.begin() + at, flat.begin() + at + l.b.size(), l.b.data());
    at += static_cast<std::size_t>(l.b.size());
  });
}

template <typename T>
bool MlpT<T>::all_finite() const
{
  bool ok = true;
  for_each_linear(*this, [&ok](const Linear & l) { ok = ok && l.w.allFinite() && l.b.allFinite(); });
  return ok;
}

template <typename T>
template <typename U>
MlpT<U> MlpT<T>::cast() const
{
  MlpT<U> out;
  out.shape_ = shape_;
  out.seed_ = seed_;
  auto conv = [](const Linear & l) {
    typename MlpT<U>::Linear r;
    r.w = l.w.template cast<U>();
    r.b = l.b.template cast<U>();
    return r;
  };
  for (const auto & p : projections) {
    out.projections.push_back(conv(p));
  }
  out.hidden1 = conv(hidden1);
  out.hidden2 = conv(hidden2);
  out.head = conv(head);
  return out;
}

template <typename T>
Adam<T>::Adam(const MlpT<T> & model, AdamParams params) : p_(params)
{
  m_.assign(model.parameter_count(), T(0));
  v_.assign(model.parameter_count(), T(0));
}

template <typename T>
void Adam<T>::step(MlpT<T> & model, const MlpT<T> & grads)
{
  ++t_;
  const T b1 = static_cast<T>(p_.beta1);
  const T b2 = static_cast<T>(p_.beta2);
  const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(p_.beta1, static_cast<double>(t_))));
  const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(p_.beta2, static_cast<double>(t_))));
  const T lr = static_cast<T>(p_.learning_rate);
  const T eps = static_cast<T>(p_.epsilon);
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> gsizes;
  std::vector<T *> params = model.parameter_blocks(sizes);
  std::vector<T *> gblocks = const_cast<MlpT<T> &>(grads).parameter_blocks(gsizes);
  std::size_t at = 0;
  for (std::size_t b = 0; b < params.size(); ++b) {
    using Arr = Eigen::Array<T, Eigen::Dynamic, 1>;
    const auto n = static_cast<Eigen::Index>(sizes[b]);
    Eigen::Map<Arr> w(params[b], n);
    Eigen::Map<const Arr> g(gblocks[b], n);
    Eigen::Map<Arr> m(m_.data() + at, n);
    Eigen::Map<Arr> v(v_.data() + at, n);
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g.square();
    w -= lr * (m * c1) / ((v * c2).sqrt() + eps);
    at += sizes[b];
  }
}

template class MlpT<float>;
template class MlpT<double>;
template MlpT<double> MlpT<float>::cast<double>() const;
template MlpT<float> MlpT<double>::cast<float>() const;
template class Adam<float>;
template class Adam<double>;

}  // namespace pdm
