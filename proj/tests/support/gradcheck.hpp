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

#ifndef LANECAST_TESTS__SUPPORT__GRADCHECK_HPP_
#define LANECAST_TESTS__SUPPORT__GRADCHECK_HPP_

#include "lanecast/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace lanecast::testing
{

inline nn::Tensor random_tensor(nn::Shape shape, std::mt19937_64 & rng, bool requires_grad = true, double lo = -1.0, double hi = 1.0)
{
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(nn::numel(shape));
  for (auto & x : v) {
    x = dist(rng);
  }
  return nn::Tensor::from_values(std::move(shape), std::move(v), requires_grad);
}

/// Central finite differences over every element of `inputs`, compared against the
/// reverse-mode gradient of `f`. Returns ||analytic - numeric|| / max(||analytic||, ||numeric||).
inline double gradcheck_relative_error(
  std::vector<nn::Tensor> inputs, const std::function<nn::Tensor()> & f, double eps = 1e-6)
{
  for (auto & t : inputs) {
    t.zero_grad();
  }
  nn::backward(f());
  std::vector<double> analytic;
  for (auto & t : inputs) {
    const auto & g = t.grad();
    analytic.insert(analytic.end(), g.begin(), g.end());
  }

  std::vector<double> numeric;
  {
    nn::NoGradGuard no_grad;
    for (auto & t : inputs) {
      auto & v = t.mutable_values();
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double orig = v[i];
        v[i] = orig + eps;
        const double up = f().item();
        v[i] = orig - eps;
        const double down = f().item();
        v[i] = orig;
        numeric.push_back((up - down) / (2.0 * eps));
      }
    }
  }

  double diff = 0.0, na = 0.0, nn_ = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn_ += numeric[i] * numeric[i];
  }
  const double denom = std::max(std::sqrt(na), std::sqrt(nn_));
  if (denom < 1e-12) {
    return std::sqrt(diff);
  }
  return std::sqrt(diff) / denom;
}

/// As above, but central differences are taken on at most `per_tensor` randomly chosen
/// elements of each input; the error is measured over those elements only.
inline double gradcheck_sampled(
  std::vector<nn::Tensor> inputs, const std::function<nn::Tensor()> & f, std::mt19937_64 & rng,
  std::size_t per_tensor, double eps = 1e-6)
{
  for (auto & t : inputs) {
    t.zero_grad();
  }
  nn::backward(f());
  std::vector<double> analytic, numeric;
  nn::NoGradGuard no_grad;
  for (auto & t : inputs) {
    const std::vector<double> g = t.grad();
    auto & v = t.mutable_values();
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      idx[i] = i;
    }
    if (idx.size() > per_tensor) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(per_tensor);
    }
    for (std::size_t i : idx) {
      const double orig = v[i];
      v[i] = orig + eps;
      const double up = f().item();
      v[i] = orig - eps;
      const double down = f().item();
      v[i] = orig;
      numeric.push_back((up - down) / (2.0 * eps));
      analytic.push_back(g[i]);
    }
  }
  double diff = 0.0, na = 0.0, nn_ = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn_ += numeric[i] * numeric[i];
  }
  const double denom = std::max(std::sqrt(na), std::sqrt(nn_));
  return denom < 1e-12 ? std::sqrt(diff) : std::sqrt(diff) / denom;
}

}  // namespace lanecast::testing

#endif  // LANECAST_TESTS__SUPPORT__GRADCHECK_HPP_
