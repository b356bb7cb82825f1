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

#ifndef LANECAST_TESTS__SUPPORT__OP_GRADCHECK_CASES_HPP_
#define LANECAST_TESTS__SUPPORT__OP_GRADCHECK_CASES_HPP_

#include "lanecast/numerics/ops.hpp"
#include "support/gradcheck.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace lanecast::testing
{

struct GradCase
{
  std::string name;
  std::function<double(std::uint64_t seed)> run;
};

// Contracts an arbitrary tensor to a scalar with fixed random weights so every output
// element contributes a distinct gradient.
inline nn::Tensor contract(const nn::Tensor & y, std::mt19937_64 & rng)
{
  auto w = random_tensor(y.shape(), rng, false);
  return nn::sum(nn::elementwise_mul(y, w));
}

// Values bounded away from zero so ReLU kinks stay outside the finite-difference stencil.
inline nn::Tensor kink_free(nn::Shape shape, std::mt19937_64 & rng)
{
  auto t = random_tensor(shape, rng, true, 0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (auto & v : t.mutable_values()) {
    v = sign(rng) ? v : -v;
  }
  return t;
}

inline std::vector<GradCase> op_gradcheck_cases()
{
  using nn::Tensor;
  std::vector<GradCase> cases;
  auto add_case = [&](std::string name, std::function<double(std::mt19937_64 &)> body) {
    cases.push_back({std::move(name), [body](std::uint64_t seed) {
                       std::mt19937_64 rng(seed);
                       return body(rng);
                     }});
  };

  add_case("add", [](auto & rng) {
    auto a = random_tensor({3, 4}, rng), b = random_tensor({3, 4}, rng);
    auto w = random_tensor({3, 4}, rng, false);
    return gradcheck_relative_error({a, b}, [&] { return nn::sum(nn::elementwise_mul(nn::add(a, b), w)); });
  });
  add_case("sub", [](auto & rng) {
    auto a = random_tensor({5}, rng), b = random_tensor({5}, rng);
    auto w = random_tensor({5}, rng, false);
    return gradcheck_relative_error({a, b}, [&] { return nn::sum(nn::elementwise_mul(nn::sub(a, b), w)); });
  });
  add_case("elementwise_mul", [](auto & rng) {
    auto a = random_tensor({2, 3}, rng), b = random_tensor({2, 3}, rng);
    return gradcheck_relative_error({a, b}, [&] { return nn::sum(nn::elementwise_mul(a, b)); });
  });
  add_case("scale", [](auto & rng) {
    auto a = random_tensor({4}, rng);
    auto w = random_tensor({4}, rng, false);
    return gradcheck_relative_error({a}, [&] { return nn::sum(nn::elementwise_mul(nn::scale(a, -1.7), w)); });
  });
  add_case("relu", [](auto & rng) {
    auto a = kink_free({4, 3}, rng);
    auto w = random_tensor({4, 3}, rng, false);
    return gradcheck_relative_error({a}, [&] { return nn::sum(nn::elementwise_mul(nn::relu(a), w)); });
  });
  add_case("add_trailing", [](auto & rng) {
    auto x = random_tensor({2, 3, 4}, rng), b = random_tensor({3, 4}, rng);
    auto w = random_tensor({2, 3, 4}, rng, false);
    return gradcheck_relative_error({x, b}, [&] { return nn::sum(nn::elementwise_mul(nn::add_trailing(x, b), w)); });
  });
  add_case("matmul", [](auto & rng) {
    auto a = random_tensor({3, 4}, rng), b = random_tensor({4, 5}, rng);
    auto w = random_tensor({3, 5}, rng, false);
    return gradcheck_relative_error({a, b}, [&] { return nn::sum(nn::elementwise_mul(nn::matmul(a, b), w)); });
  });
  add_case("bmm", [](auto & rng) {
    auto a = random_tensor({2, 3, 4}, rng), b = random_tensor({2, 4, 2}, rng);
    auto w = random_tensor({2, 3, 2}, rng, false);
    return gradcheck_relative_error({a, b}, [&] { return nn::sum(nn::elementwise_mul(nn::bmm(a, b), w)); });
  });
  add_case("linear", [](auto & rng) {
    auto x = random_tensor({2, 3, 4}, rng), wt = random_tensor({4, 5}, rng), b = random_tensor({5}, rng);
    auto w = random_tensor({2, 3, 5}, rng, false);
    return gradcheck_relative_error({x, wt, b}, [&] { return nn::sum(nn::elementwise_mul(nn::linear(x, wt, b), w)); });
  });
  for (std::size_t axis = 0; axis < 3; ++axis) {
    add_case("softmax_axis" + std::to_string(axis), [axis](auto & rng) {
      auto x = random_tensor({2, 3, 4}, rng, true, -2.0, 2.0);
      auto w = random_tensor({2, 3, 4}, rng, false);
      return gradcheck_relative_error({x}, [&] { return nn::sum(nn::elementwise_mul(nn::softmax(x, axis), w)); });
    });
  }
  add_case("layer_norm", [](auto & rng) {
    auto x = random_tensor({3, 6}, rng, true, -2.0, 2.0);
    auto g = random_tensor({6}, rng), b = random_tensor({6}, rng);
    auto w = random_tensor({3, 6}, rng, false);
    return gradcheck_relative_error({x, g, b}, [&] { return nn::sum(nn::elementwise_mul(nn::layer_norm(x, g, b), w)); });
  });
  add_case("renormalize", [](auto & rng) {
    auto x = random_tensor({2, 3}, rng, true, 0.2, 1.0);
    auto w = random_tensor({2, 3}, rng, false);
    return gradcheck_relative_error({x}, [&] { return nn::sum(nn::elementwise_mul(nn::renormalize(x), w)); });
  });
  add_case("conv1d", [](auto & rng) {
    auto x = random_tensor({2, 2, 9}, rng), f = random_tensor({3, 2, 3}, rng), b = random_tensor({3}, rng);
    auto w = random_tensor({2, 3, 4}, rng, false);
    return gradcheck_relative_error({x, f, b}, [&] { return nn::sum(nn::elementwise_mul(nn::conv1d(x, f, b, 2), w)); });
  });
  add_case("conv2d", [](auto & rng) {
    auto x = random_tensor({2, 2, 7, 7}, rng), f = random_tensor({3, 2, 3, 3}, rng), b = random_tensor({3}, rng);
    auto w = random_tensor({2, 3, 3, 3}, rng, false);
    return gradcheck_relative_error({x, f, b}, [&] { return nn::sum(nn::elementwise_mul(nn::conv2d(x, f, b, 2), w)); });
  });
  add_case("reshape", [](auto & rng) {
    auto x = random_tensor({2, 6}, rng);
    auto w = random_tensor({3, 4}, rng, false);
    return gradcheck_relative_error({x}, [&] { return nn::sum(nn::elementwise_mul(nn::reshape(x, {3, 4}), w)); });
  });
  add_case("permute", [](auto & rng) {
    auto x = random_tensor({2, 3, 4}, rng);
    auto w = random_tensor({4, 2, 3}, rng, false);
    return gradcheck_relative_error({x}, [&] { return nn::sum(nn::elementwise_mul(nn::permute(x, {2, 0, 1}), w)); });
  });
  add_case("concat", [](auto & rng) {
    auto a = random_tensor({2, 1, 3}, rng), b = random_tensor({2, 2, 3}, rng);
    auto w = random_tensor({2, 3, 3}, rng, false);
    return gradcheck_relative_error({a, b}, [&] { return nn::sum(nn::elementwise_mul(nn::concat({a, b}, 1), w)); });
  });
  add_case("slice", [](auto & rng) {
    auto x = random_tensor({2, 5, 3}, rng);
    auto w = random_tensor({2, 2, 3}, rng, false);
    return gradcheck_relative_error({x}, [&] { return nn::sum(nn::elementwise_mul(nn::slice(x, 1, 2, 2), w)); });
  });
  add_case("gather_rows", [](auto & rng) {
    auto x = random_tensor({3, 3, 4}, rng);
    auto w = random_tensor({3, 4}, rng, false);
    const std::vector<std::size_t> idx{2, 0, 2};
    return gradcheck_relative_error({x}, [&] { return nn::sum(nn::elementwise_mul(nn::gather_rows(x, idx), w)); });
  });
  add_case("attention", [](auto & rng) {
    auto q = random_tensor({2, 3, 4}, rng), k = random_tensor({2, 5, 4}, rng), v = random_tensor({2, 5, 3}, rng);
    auto w = random_tensor({2, 3, 3}, rng, false);
    return gradcheck_relative_error({q, k, v}, [&] {
      return nn::sum(nn::elementwise_mul(nn::scaled_dot_product_attention(q, k, v), w));
    });
  });
  add_case("attention_causal", [](auto & rng) {
    auto q = random_tensor({2, 4, 3}, rng), k = random_tensor({2, 4, 3}, rng), v = random_tensor({2, 4, 2}, rng);
    auto w = random_tensor({2, 4, 2}, rng, false);
    std::vector<std::uint8_t> mask(16, 0);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        mask[i * 4 + j] = 1;
      }
    }
    return gradcheck_relative_error({q, k, v}, [&] {
      return nn::sum(nn::elementwise_mul(nn::scaled_dot_product_attention(q, k, v, mask), w));
    });
  });
  add_case("sum_mean", [](auto & rng) {
    auto x = random_tensor({3, 2}, rng);
    return gradcheck_relative_error({x}, [&] { return nn::add(nn::sum(nn::elementwise_mul(x, x)), nn::mean(x)); });
  });
  add_case("mean_squared_distance", [](auto & rng) {
    auto p = random_tensor({4, 2}, rng), t = random_tensor({4, 2}, rng);
    return gradcheck_relative_error({p, t}, [&] { return nn::mean_squared_distance(p, t); });
  });
  add_case("cross_entropy", [](auto & rng) {
    auto logits = random_tensor({3, 3}, rng, true, -2.0, 2.0);
    const std::vector<std::size_t> target{0, 2, 1};
    return gradcheck_relative_error({logits}, [&] { return nn::cross_entropy(nn::softmax(logits, 1), target); });
  });
  return cases;
}

}  // namespace lanecast::testing

#endif  // LANECAST_TESTS__SUPPORT__OP_GRADCHECK_CASES_HPP_
