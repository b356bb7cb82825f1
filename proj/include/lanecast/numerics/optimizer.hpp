// Copyright 2026 The Lanecast Authors
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

#ifndef LANECAST__NUMERICS__OPTIMIZER_HPP_
#define LANECAST__NUMERICS__OPTIMIZER_HPP_

#include "lanecast/numerics/tensor.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace lanecast::nn
{

struct NamedParameter
{
  std::string name;
  Tensor tensor;
};

using ParameterList = std::vector<NamedParameter>;

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
inline Tensor xavier_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64 & rng)
{
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(numel(shape));
  for (auto & v : values) {
    v = dist(rng);
  }
  return Tensor::from_values(std::move(shape), std::move(values), true);
}

enum class OptimizerKind { sgd, adam };

/// Gradient descent with a learning rate multiplied by `decay` after every step.
class Optimizer
{
public:
  explicit Optimizer(
    double learning_rate = 0.0005, double decay = 0.9999, OptimizerKind kind = OptimizerKind::sgd)
  : learning_rate_(learning_rate), decay_(decay), kind_(kind)
  {
    if (!(learning_rate > 0.0) || !(decay > 0.0 && decay <= 1.0)) {
      throw ConfigError("optimizer needs learning_rate > 0 and decay in (0, 1]");
    }
  }

  double learning_rate() const { return learning_rate_; }
  double decay() const { return decay_; }
  std::size_t step_count() const { return step_count_; }
  OptimizerKind kind() const { return kind_; }

  /// Rescales the joint gradient to at most this L2 norm before each update; 0 disables.
  void set_clip_norm(double clip)
  {
    if (!(clip >= 0.0)) {
      throw ConfigError("clip norm must be >= 0");
    }
    clip_norm_ = clip;
  }
  double clip_norm() const { return clip_norm_; }

  /// Applies one update to every parameter and clears their grads.
  void step(ParameterList & params)
  {
    for (auto & p : params) {
      if (!p.tensor.has_grad()) {
        throw MissingGradient("parameter '" + p.name + "' has no gradient");
      }
    }
    if (kind_ == OptimizerKind::adam && moments_.size() != params.size()) {
      moments_.assign(params.size(), {});
    }
    ++step_count_;
    if (clip_norm_ > 0.0) {
      double sq = 0.0;
      for (auto & p : params) {
        for (double g : p.tensor.grad()) {
          sq += g * g;
        }
      }
      const double norm = std::sqrt(sq);
      if (norm > clip_norm_) {
        const double f = clip_norm_ / norm;
        for (auto & p : params) {
          for (double & g : p.tensor.mutable_grad()) {
            g *= f;
          }
        }
      }
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto & value = params[k].tensor.mutable_values();
      const auto & grad = params[k].tensor.grad();
      if (kind_ == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < value.size(); ++i) {
          value[i] -= learning_rate_ * grad[i];
        }
      } else {
        adam_update(moments_[k], value, grad);
      }
      params[k].tensor.zero_grad();
    }
    learning_rate_ *= decay_;
  }

private:
  struct Moments
  {
    std::vector<double> first;
    std::vector<double> second;
  };

  void adam_update(Moments & m, std::vector<double> & value, const std::vector<double> & grad) const
  {
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    if (m.first.size() != value.size()) {
      m.first.assign(value.size(), 0.0);
      m.second.assign(value.size(), 0.0);
    }
    const double t = static_cast<double>(step_count_);
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < value.size(); ++i) {
      m.first[i] = beta1 * m.first[i] + (1.0 - beta1) * grad[i];
      m.second[i] = beta2 * m.second[i] + (1.0 - beta2) * grad[i] * grad[i];
      value[i] -= learning_rate_ * (m.first[i] / c1) / (std::sqrt(m.second[i] / c2) + eps);
    }
  }

  double learning_rate_;
  double decay_;
  OptimizerKind kind_;
  std::size_t step_count_{0};
  double clip_norm_{0.0};
  std::vector<Moments> moments_;
};

}  // namespace lanecast::nn

#endif  // LANECAST__NUMERICS__OPTIMIZER_HPP_
