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


#ifndef LANECAST_TESTS__SUPPORT__MODEL_FIXTURES_HPP_
#define LANECAST_TESTS__SUPPORT__MODEL_FIXTURES_HPP_

#include "lanecast/data_io/samples.hpp"
#include "lanecast/model/mtpp.hpp"

#include <random>
#include <vector>

namespace lanecast::testing
{

/// Tiny network so finite-difference sweeps over every parameter stay cheap.
inline model::ModelConfig micro_config(model::MapMode map, std::uint64_t seed = 7)
{
  model::ModelConfig c;
  c.d_model = 4;
  c.n_enc_layers = 1;
  c.n_dec_layers = 1;
  c.n_heads = 2;
  c.ff_dim = 4;
  c.fusion_dim = 4;
  c.map_fc_dim = 2;
  c.classifier_dims = {4, 3};
  c.generator_dims = {4, 2};
  c.horizon_frames = 4;
  c.history_frames = 3;
  c.occupancy_channels = {1, 1, 1, 1};
  c.lane_channels = 2;
  c.map_mode = map;
  c.seed = seed;
  return c;
}

/// Small but complete network for behavioural tests.
inline model::ModelConfig toy_config(model::MapMode map, std::uint64_t seed = 7)
{
  model::ModelConfig c;
  c.d_model = 16;
  c.n_enc_layers = 1;
  c.n_dec_layers = 1;
  c.n_heads = 2;
  c.ff_dim = 32;
  c.fusion_dim = 32;
  c.map_fc_dim = 8;
  c.classifier_dims = {16, 3};
  c.generator_dims = {32, 2};
  c.occupancy_channels = {2, 4, 4, 4};
  c.lane_channels = 4;
  c.map_mode = map;
  c.seed = seed;
  return c;
}

inline const std::array<lanes::LaneMask, 4> & legal_masks()
{
  static const std::array<lanes::LaneMask, 4> masks{
    lanes::LaneMask{false, true, false}, lanes::LaneMask{true, true, false}, lanes::LaneMask{false, true, true},
    lanes::LaneMask{true, true, true}};
  return masks;
}

/// Plausible agent-frame sample: forward motion, curved lanes, random mask and raster.
inline data_io::Sample random_sample(
  std::mt19937_64 & rng, std::size_t history = kHistoryFrames, std::size_t horizon = kHorizonFrames)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  data_io::Sample s;
  s.scene_id = "scene";
  s.agent_id = "agent";
  const double speed = 3.0 + 2.0 * u(rng);
  const double bend = 0.02 * u(rng);
  for (std::size_t i = 0; i < history; ++i) {
    const double k = static_cast<double>(i) - static_cast<double>(history - 1);
    s.history.push_back({speed * k + 0.1 * u(rng), 0.1 * u(rng)});
  }
  s.history.back() = {0.0, 0.0};
  for (std::size_t i = 1; i <= horizon; ++i) {
    const double x = speed * static_cast<double>(i);
    s.future.push_back({x, bend * x * x});
  }
  s.lanes.mask = legal_masks()[std::uniform_int_distribution<std::size_t>(0, 3)(rng)];
  const std::array<double, 3> offsets{3.5, 0.0, -3.5};
  for (std::size_t k = 0; k < 3; ++k) {
    s.lanes.lanes[k].assign(lanes::kLanePoints, Point2{0.0, 0.0});
    if (!s.lanes.mask[k]) {
      continue;
    }
    const double lane_bend = bend + 0.01 * u(rng);
    for (std::size_t p = 0; p < lanes::kLanePoints; ++p) {
      const double x = -2.0 + 5.0 * static_cast<double>(p);
      s.lanes.lanes[k][p] = {x, offsets[k] + lane_bend * x * x + 0.2 * u(rng)};
    }
  }
  s.gt_lane = 1;
  s.raster.resize(data_io::kRasterSize * data_io::kRasterSize);
  std::bernoulli_distribution bit(0.4);
  for (auto & c : s.raster) {
    c = bit(rng) ? 1 : 0;
  }
  return s;
}

inline std::vector<data_io::Sample> random_samples(
  std::size_t n, std::uint64_t seed, std::size_t history = kHistoryFrames, std::size_t horizon = kHorizonFrames)
{
  std::mt19937_64 rng(seed);
  std::vector<data_io::Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(random_sample(rng, history, horizon));
  }
  return out;
}

inline std::vector<std::size_t> iota_index(std::size_t n)
{
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) {
    idx[i] = i;
  }
  return idx;
}

}  // namespace lanecast::testing

#endif  // LANECAST_TESTS__SUPPORT__MODEL_FIXTURES_HPP_
