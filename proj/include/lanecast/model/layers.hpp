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

#ifndef LANECAST__MODEL__LAYERS_HPP_
#define LANECAST__MODEL__LAYERS_HPP_

#include "lanecast/numerics/ops.hpp"
#include "lanecast/numerics/optimizer.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace lanecast::model
{

using nn::Shape;
using nn::Tensor;

/// Owns every trainable tensor of a network, in registration order.
class ParameterStore
{
public:
  explicit ParameterStore(std::uint64_t seed) : rng_(seed) {}

  Tensor xavier(const std::string & name, Shape shape, std::size_t fan_in, std::size_t fan_out)
  {
    return add(name, nn::xavier_uniform(std::move(shape), fan_in, fan_out, rng_));
  }

  Tensor constant(const std::string & name, Shape shape, double v)
  {
    return add(name, Tensor::full(std::move(shape), v, true));
  }

  nn::ParameterList & parameters() { return params_; }
  const nn::ParameterList & parameters() const { return params_; }

private:
  Tensor add(const std::string & name, Tensor t)
  {
    for (const auto & p : params_) {
      if (p.name == name) {
        throw ConfigError("duplicate parameter name '" + name + "'");
      }
    }
    params_.push_back({name, t});
    return t;
  }

  std::mt19937_64 rng_;
  nn::ParameterList params_;
};

struct Linear
{
  Tensor weight;
  Tensor bias;

  Linear() = default;
  Linear(ParameterStore & store, const std::string & name, std::size_t in, std::size_t out)
  : weight(store.xavier(name + ".weight", {in, out}, in, out)), bias(store.constant(name + ".bias", {out}, 0.0))
  {
  }

  Tensor operator()(const Tensor & x) const { return nn::linear(x, weight, bias); }
  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }
};

struct LayerNorm
{
  Tensor gamma;
  Tensor beta;

  LayerNorm() = default;
  LayerNorm(ParameterStore & store, const std::string & name, std::size_t d)
  : gamma(store.constant(name + ".gamma", {d}, 1.0)), beta(store.constant(name + ".beta", {d}, 0.0))
  {
  }

  Tensor operator()(const Tensor & x) const { return nn::layer_norm(x, gamma, beta); }
};

/// Linear layers with ReLU between them (none after the last).
struct Mlp
{
  std::vector<Linear> layers;

  Mlp() = default;
  Mlp(ParameterStore & store, const std::string & name, std::size_t in, const std::vector<std::size_t> & dims)
  {
    for (std::size_t i = 0; i < dims.size(); ++i) {
      layers.emplace_back(store, name + "." + std::to_string(i), i == 0 ? in : dims[i - 1], dims[i]);
    }
  }

  Tensor operator()(Tensor x) const
  {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      x = layers[i](x);
      if (i + 1 < layers.size()) {
        x = nn::relu(x);
      }
    }
    return x;
  }
};

/// Sinusoidal table [len, d].
inline Tensor positional_encoding(std::size_t len, std::size_t d)
{
  std::vector<double> v(len * d);
  for (std::size_t pos = 0; pos < len; ++pos) {
    for (std::size_t i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
      const double a = static_cast<double>(pos) * rate;
      v[pos * d + i] = (i % 2 == 0) ? std::sin(a) : std::cos(a);
    }
  }
  return Tensor::from_values({len, d}, std::move(v));
}

/// Row-major [t, t] lower-triangular mask.
inline std::vector<std::uint8_t> causal_mask(std::size_t t)
{
  std::vector<std::uint8_t> m(t * t, 0);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      m[i * t + j] = 1;
    }
  }
  return m;
}

/// Keys and values already projected and split into heads: [batch * heads, t, d_head].
struct KeyValue
{
  Tensor k;
  Tensor v;
};

struct MultiHeadAttention
{
  Linear q_proj, k_proj, v_proj, out_proj;
  std::size_t heads{1};

  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterStore & store, const std::string & name, std::size_t d, std::size_t n_heads)
  : q_proj(store, name + ".q", d, d),
    k_proj(store, name + ".k", d, d),
    v_proj(store, name + ".v", d, d),
    out_proj(store, name + ".out", d, d),
    heads(n_heads)
  {
  }

  // [B, T, d] -> [B * h, T, d / h]
  Tensor split_heads(const Tensor & x) const
  {
    const std::size_t b = x.dim(0), t = x.dim(1), d = x.dim(2);
    const Tensor r = nn::reshape(x, {b, t, heads, d / heads});
    return nn::reshape(nn::permute(r, {0, 2, 1, 3}), {b * heads, t, d / heads});
  }

  // [B * h, T, d / h] -> [B, T, d]
  Tensor merge_heads(const Tensor & x, std::size_t batch) const
  {
    const std::size_t t = x.dim(1), dh = x.dim(2);
    const Tensor r = nn::reshape(x, {batch, heads, t, dh});
    return nn::reshape(nn::permute(r, {0, 2, 1, 3}), {batch, t, heads * dh});
  }

  KeyValue project_kv(const Tensor & source) const
  {
    return {split_heads(k_proj(source)), split_heads(v_proj(source))};
  }

  Tensor attend(
    const Tensor & query, const KeyValue & kv, const std::optional<std::vector<std::uint8_t>> & mask = std::nullopt) const
  {
    const Tensor q = split_heads(q_proj(query));
    const Tensor ctx = nn::scaled_dot_product_attention(q, kv.k, kv.v, mask);
    return out_proj(merge_heads(ctx, query.dim(0)));
  }

  Tensor operator()(
    const Tensor & query, const Tensor & source,
    const std::optional<std::vector<std::uint8_t>> & mask = std::nullopt) const
  {
    return attend(query, project_kv(source), mask);
  }

  /// One new query token [B, 1, d]; its key/value are appended to `cache` first.
  Tensor step(const Tensor & token, KeyValue & cache) const
  {
    KeyValue fresh = project_kv(token);
    if (cache.k.defined()) {
      cache.k = nn::concat({cache.k, fresh.k}, 1);
      cache.v = nn::concat({cache.v, fresh.v}, 1);
    } else {
      cache = std::move(fresh);
    }
    return attend(token, cache);
  }
};

/// Transformer encoder layer. With `pre_norm` each sub-layer normalizes its input;
/// otherwise the residual sum is normalized.
struct EncoderLayer
{
  MultiHeadAttention attn;
  LayerNorm norm1, norm2;
  Linear ff1, ff2;
  bool pre_norm{true};

  EncoderLayer() = default;
  EncoderLayer(
    ParameterStore & store, const std::string & name, std::size_t d, std::size_t heads, std::size_t ff,
    bool pre_norm_layout = true)
  : attn(store, name + ".attn", d, heads),
    norm1(store, name + ".norm1", d),
    norm2(store, name + ".norm2", d),
    ff1(store, name + ".ff1", d, ff),
    ff2(store, name + ".ff2", ff, d),
    pre_norm(pre_norm_layout)
  {
  }

  Tensor feed_forward(const Tensor & x) const { return ff2(nn::relu(ff1(x))); }

  Tensor operator()(const Tensor & x) const
  {
    if (pre_norm) {
      const Tensor n1 = norm1(x);
      const Tensor h = nn::add(x, attn(n1, n1));
      return nn::add(h, feed_forward(norm2(h)));
    }
    const Tensor h = norm1(nn::add(x, attn(x, x)));
    return norm2(nn::add(h, feed_forward(h)));
  }
};

/// Transformer decoder layer: causal self-attention, cross-attention, feed-forward.
struct DecoderLayer
{
  MultiHeadAttention self_attn, cross_attn;
  LayerNorm norm1, norm2, norm3;
  Linear ff1, ff2;
  bool pre_norm{true};

  DecoderLayer() = default;
  DecoderLayer(
    ParameterStore & store, const std::string & name, std::size_t d, std::size_t heads, std::size_t ff,
    bool pre_norm_layout = true)
  : self_attn(store, name + ".self_attn", d, heads),
    cross_attn(store, name + ".cross_attn", d, heads),
    norm1(store, name + ".norm1", d),
    norm2(store, name + ".norm2", d),
    norm3(store, name + ".norm3", d),
    ff1(store, name + ".ff1", d, ff),
    ff2(store, name + ".ff2", ff, d),
    pre_norm(pre_norm_layout)
  {
  }

  Tensor feed_forward(const Tensor & x) const { return ff2(nn::relu(ff1(x))); }

  Tensor operator()(const Tensor & x, const Tensor & memory) const
  {
    const auto mask = causal_mask(x.dim(1));
    if (pre_norm) {
      const Tensor n1 = norm1(x);
      const Tensor h1 = nn::add(x, self_attn(n1, n1, mask));
      const Tensor h2 = nn::add(h1, cross_attn(norm2(h1), memory));
      return nn::add(h2, feed_forward(norm3(h2)));
    }
    const Tensor h1 = norm1(nn::add(x, self_attn(x, x, mask)));
    const Tensor h2 = norm2(nn::add(h1, cross_attn(h1, memory)));
    return norm3(nn::add(h2, feed_forward(h2)));
  }

  /// Incremental form for one token; equals the matching row of operator().
  Tensor step(const Tensor & token, KeyValue & self_cache, const KeyValue & memory_kv) const
  {
    if (pre_norm) {
      const Tensor h1 = nn::add(token, self_attn.step(norm1(token), self_cache));
      const Tensor h2 = nn::add(h1, cross_attn.attend(norm2(h1), memory_kv));
      return nn::add(h2, feed_forward(norm3(h2)));
    }
    const Tensor h1 = norm1(nn::add(token, self_attn.step(token, self_cache)));
    const Tensor h2 = norm2(nn::add(h1, cross_attn.attend(h1, memory_kv)));
    return norm3(nn::add(h2, feed_forward(h2)));
  }
};

}  // namespace lanecast::model

#endif  // LANECAST__MODEL__LAYERS_HPP_
