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

#ifndef LANECAST__MODEL__CONFIG_HPP_
#define LANECAST__MODEL__CONFIG_HPP_

#include "lanecast/errors.hpp"

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace lanecast::model
{

enum class MapMode { none, occupancy, lane };
enum class RegressionMode { ar, nar };

inline const char * to_string(MapMode m)
{
  switch (m) {
    case MapMode::none:
      return "none";
    case MapMode::occupancy:
      return "occupancy";
    default:
      return "lane";
  }
}

inline const char * to_string(RegressionMode m) { return m == RegressionMode::ar ? "ar" : "nar"; }

inline MapMode parse_map_mode(const std::string & s)
{
  if (s == "none") return MapMode::none;
  if (s == "occupancy") return MapMode::occupancy;
  if (s == "lane") return MapMode::lane;
  throw ConfigError("map mode must be none, occupancy or lane, got '" + s + "'");
}

inline RegressionMode parse_regression_mode(const std::string & s)
{
  if (s == "ar" || s == "AR") return RegressionMode::ar;
  if (s == "nar" || s == "NAR") return RegressionMode::nar;
  throw ConfigError("regression mode must be ar or nar, got '" + s + "'");
}

struct ModelConfig
{
  std::size_t d_model{64};
  std::size_t n_enc_layers{2};
  std::size_t n_dec_layers{2};
  std::size_t n_heads{4};
  std::size_t ff_dim{128};
  std::size_t fusion_dim{512};
  std::size_t map_fc_dim{32};
  std::vector<std::size_t> classifier_dims{256, 3};
  std::vector<std::size_t> generator_dims{256, 2};
  double alpha{0.5};
  std::size_t horizon_frames{12};
  std::size_t history_frames{4};
  MapMode map_mode{MapMode::lane};
  RegressionMode regression_mode{RegressionMode::ar};
  std::vector<std::size_t> occupancy_channels{4, 8, 8, 8};
  std::vector<std::size_t> occupancy_filters{5, 5, 5, 3};
  std::vector<std::size_t> occupancy_strides{2, 2, 1, 1};
  std::size_t lane_channels{16};
  bool pre_norm{true};
  double coord_scale{10.0};
  std::uint64_t seed{7};

  /// Full-size network: 512 wide, six encoder and six decoder layers.
  static ModelConfig full_size()
  {
    ModelConfig c;
    c.d_model = 512;
    c.n_enc_layers = 6;
    c.n_dec_layers = 6;
    c.n_heads = 8;
    c.ff_dim = 512;
    return c;
  }

  void validate() const
  {
    if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
      throw ConfigError("d_model must be a positive multiple of n_heads");
    }
    if (n_enc_layers == 0 || n_dec_layers == 0 || ff_dim == 0 || fusion_dim == 0 || map_fc_dim == 0) {
      throw ConfigError("layer counts and widths must be positive");
    }
    if (classifier_dims.empty() || classifier_dims.back() != 3) {
      throw ConfigError("classifier output must be 3");
    }
    if (generator_dims.empty() || generator_dims.back() != 2) {
      throw ConfigError("generator output must be 2");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      throw ConfigError("alpha must lie in [0, 1]");
    }
    if (horizon_frames == 0 || horizon_frames > 64 || history_frames < 2 || history_frames > 64) {
      throw ConfigError("need 1 <= horizon_frames <= 64 and 2 <= history_frames <= 64");
    }
    if (
      occupancy_channels.size() != occupancy_filters.size() ||
      occupancy_channels.size() != occupancy_strides.size() || occupancy_channels.empty()) {
      throw ConfigError("occupancy channels, filters and strides must have equal non-zero length");
    }
    if (lane_channels == 0 || !(coord_scale > 0.0)) {
      throw ConfigError("lane_channels and coord_scale must be positive");
    }
  }
};

// ---------------------------------------------------------------------------
// Plain-text key = value files. '#' starts a comment; lists are comma separated.

namespace detail
{

inline std::string trim(const std::string & s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::size_t to_size(const std::string & key, const std::string & v)
{
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used != v.size() || n < 0) {
      throw ConfigError("");
    }
    return static_cast<std::size_t>(n);
  } catch (const std::exception &) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
}

inline double to_double(const std::string & key, const std::string & v)
{
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) {
      throw ConfigError("");
    }
    return d;
  } catch (const std::exception &) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
}

inline bool to_bool(const std::string & key, const std::string & v)
{
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

inline std::vector<std::size_t> to_sizes(const std::string & key, const std::string & v)
{
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(to_size(key, trim(item)));
  }
  return out;
}

inline std::string join(const std::vector<std::size_t> & v)
{
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s += (i ? "," : "") + std::to_string(v[i]);
  }
  return s;
}

}  // namespace detail

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::istream & is, const std::string & origin)
{
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.resize(hash);
    }
    line = detail::trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  return kv;
}

inline KeyValues read_key_values(const std::string & path)
{
  std::ifstream is(path);
  if (!is) {
    throw ConfigError("cannot open config file " + path);
  }
  return parse_key_values(is, path);
}

/// Applies one setting; returns false when `key` is not a model key.
inline bool apply_setting(ModelConfig & c, const std::string & key, const std::string & v)
{
  using detail::to_double;
  using detail::to_size;
  if (key == "d_model") c.d_model = to_size(key, v);
  else if (key == "n_enc_layers") c.n_enc_layers = to_size(key, v);
  else if (key == "n_dec_layers") c.n_dec_layers = to_size(key, v);
  else if (key == "n_heads") c.n_heads = to_size(key, v);
  else if (key == "ff_dim") c.ff_dim = to_size(key, v);
  else if (key == "fusion_dim") c.fusion_dim = to_size(key, v);
  else if (key == "map_fc_dim") c.map_fc_dim = to_size(key, v);
  else if (key == "classifier_dims") c.classifier_dims = detail::to_sizes(key, v);
  else if (key == "generator_dims") c.generator_dims = detail::to_sizes(key, v);
  else if (key == "alpha") c.alpha = to_double(key, v);
  else if (key == "horizon_frames") c.horizon_frames = to_size(key, v);
  else if (key == "history_frames") c.history_frames = to_size(key, v);
  else if (key == "map_mode") c.map_mode = parse_map_mode(v);
  else if (key == "regression_mode") c.regression_mode = parse_regression_mode(v);
  else if (key == "occupancy_channels") c.occupancy_channels = detail::to_sizes(key, v);
  else if (key == "occupancy_filters") c.occupancy_filters = detail::to_sizes(key, v);
  else if (key == "occupancy_strides") c.occupancy_strides = detail::to_sizes(key, v);
  else if (key == "lane_channels") c.lane_channels = to_size(key, v);
  else if (key == "pre_norm") c.pre_norm = detail::to_bool(key, v);
  else if (key == "coord_scale") c.coord_scale = to_double(key, v);
  else if (key == "seed") c.seed = to_size(key, v);
  else return false;
  return true;
}

inline KeyValues to_key_values(const ModelConfig & c)
{
  std::ostringstream alpha, scale;
  alpha.precision(17);
  scale.precision(17);
  alpha << c.alpha;
  scale << c.coord_scale;
  return {
    {"d_model", std::to_string(c.d_model)},
    {"n_enc_layers", std::to_string(c.n_enc_layers)},
    {"n_dec_layers", std::to_string(c.n_dec_layers)},
    {"n_heads", std::to_string(c.n_heads)},
    {"ff_dim", std::to_string(c.ff_dim)},
    {"fusion_dim", std::to_string(c.fusion_dim)},
    {"map_fc_dim", std::to_string(c.map_fc_dim)},
    {"classifier_dims", detail::join(c.classifier_dims)},
    {"generator_dims", detail::join(c.generator_dims)},
    {"alpha", alpha.str()},
    {"horizon_frames", std::to_string(c.horizon_frames)},
    {"history_frames", std::to_string(c.history_frames)},
    {"map_mode", to_string(c.map_mode)},
    {"regression_mode", to_string(c.regression_mode)},
    {"occupancy_channels", detail::join(c.occupancy_channels)},
    {"occupancy_filters", detail::join(c.occupancy_filters)},
    {"occupancy_strides", detail::join(c.occupancy_strides)},
    {"lane_channels", std::to_string(c.lane_channels)},
    {"pre_norm", c.pre_norm ? "true" : "false"},
    {"coord_scale", scale.str()},
    {"seed", std::to_string(c.seed)},
  };
}

}  // namespace lanecast::model

#endif  // LANECAST__MODEL__CONFIG_HPP_
