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

#ifndef LANECAST__MODEL__MTPP_HPP_
#define LANECAST__MODEL__MTPP_HPP_

#include "lanecast/data_io/samples.hpp"
#include "lanecast/lane_processing.hpp"
#include "lanecast/model/config.hpp"
#include "lanecast/model/layers.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace lanecast::model
{

/// Model-ready tensors for a group of samples. Coordinates are divided by coord_scale,
/// except `future`, which stays in meters.
struct Batch
{
  std::size_t size{0};
  Tensor history;  // [B, H, 2]
  Tensor lanes;    // [B, 3, 18, 2], lane mode only
  Tensor raster;   // [B, 1, 64, 64], occupancy mode only
  Tensor mask;     // [B, 3] of {0, 1}
  std::vector<lanes::LaneMask> masks;
  Tensor future;  // [B, F, 2], empty when no sample carries a future
  std::vector<std::size_t> gt_lane;
};

inline Batch make_batch(
  const ModelConfig & cfg, const std::vector<data_io::Sample> & samples, const std::vector<std::size_t> & index)
{
  if (index.empty()) {
    throw EmptyDataset("cannot build an empty batch");
  }
  const std::size_t b = index.size(), h = cfg.history_frames, f = cfg.horizon_frames;
  const double inv = 1.0 / cfg.coord_scale;
  const std::size_t cells = data_io::kRasterSize * data_io::kRasterSize;
  std::vector<double> hist(b * h * 2), lanes, raster, mask(b * 3), future;
  const bool lane_mode = cfg.map_mode == MapMode::lane;
  const bool occ_mode = cfg.map_mode == MapMode::occupancy;
  if (lane_mode) {
    lanes.resize(b * 3 * lanes::kLanePoints * 2);
  }
  if (occ_mode) {
    raster.resize(b * cells);
  }
  const bool with_future = samples[index.front()].future.size() >= f;
  if (with_future) {
    future.resize(b * f * 2);
  }
  Batch out;
  out.size = b;
  for (std::size_t i = 0; i < b; ++i) {
    const auto & s = samples.at(index[i]);
    if (s.history.size() != h) {
      throw ShapeMismatch(
        "sample '" + s.agent_id + "' has " + std::to_string(s.history.size()) + " history frames, model expects " +
        std::to_string(h));
    }
    for (std::size_t t = 0; t < h; ++t) {
      hist[(i * h + t) * 2] = s.history[t].x * inv;
      hist[(i * h + t) * 2 + 1] = s.history[t].y * inv;
    }
    lanes::LaneMask m = lane_mode ? s.lanes.mask : lanes::LaneMask{false, true, false};
    out.masks.push_back(m);
    out.gt_lane.push_back(lane_mode ? s.gt_lane : 1);
    for (std::size_t k = 0; k < 3; ++k) {
      mask[i * 3 + k] = m[k] ? 1.0 : 0.0;
    }
    if (lane_mode) {
      for (std::size_t k = 0; k < 3; ++k) {
        if (s.lanes.lanes[k].size() != lanes::kLanePoints) {
          throw ShapeMismatch("lane input must hold " + std::to_string(lanes::kLanePoints) + " points per lane");
        }
        for (std::size_t p = 0; p < lanes::kLanePoints; ++p) {
          const std::size_t o = ((i * 3 + k) * lanes::kLanePoints + p) * 2;
          lanes[o] = s.lanes.lanes[k][p].x * inv;
          lanes[o + 1] = s.lanes.lanes[k][p].y * inv;
        }
      }
    }
    if (occ_mode) {
      if (s.raster.size() != cells) {
        throw WrongRasterSize(
          "occupancy mode needs a " + std::to_string(data_io::kRasterSize) + "x" +
          std::to_string(data_io::kRasterSize) + " raster for agent '" + s.agent_id + "'");
      }
      for (std::size_t c = 0; c < cells; ++c) {
        raster[i * cells + c] = s.raster[c];
      }
    }
    if (with_future) {
      if (s.future.size() < f) {
        throw ShapeMismatch("sample '" + s.agent_id + "' has fewer future frames than the horizon");
      }
      for (std::size_t t = 0; t < f; ++t) {
        future[(i * f + t) * 2] = s.future[t].x;
        future[(i * f + t) * 2 + 1] = s.future[t].y;
      }
    }
  }
  out.history = Tensor::from_values({b, h, 2}, std::move(hist));
  out.mask = Tensor::from_values({b, 3}, std::move(mask));
  if (lane_mode) {
    out.lanes = Tensor::from_values({b, 3, lanes::kLanePoints, 2}, std::move(lanes));
  }
  if (occ_mode) {
    out.raster = Tensor::from_values({b, 1, data_io::kRasterSize, data_io::kRasterSize}, std::move(raster));
  }
  if (with_future) {
    out.future = Tensor::from_values({b, f, 2}, std::move(future));
  }
  return out;
}

struct PredictionOutput
{
  std::array<std::vector<Point2>, 3> trajectories;
  std::array<double, 3> lane_probs{0.0, 0.0, 0.0};
  lanes::LaneMask mask;
  std::size_t selected{1};
  std::vector<Point2> selected_trajectory;
};

/// Records the decoder's target-side input at every autoregressive step.
struct DecodeTrace
{
  std::vector<Tensor> inputs;
};

/// Optional override of the value fed back after step t.
using FeedbackHook = std::function<Tensor(std::size_t, const Tensor &)>;

class MtppModel
{
public:
  struct Encoded
  {
    Tensor fused;          // [B, fusion_dim]
    Tensor lane_features;  // [B, 3, map_fc_dim], lane mode only
    Tensor probs;          // [B, 3]
  };

  explicit MtppModel(ModelConfig cfg) : cfg_(std::move(cfg)), store_(cfg_.seed)
  {
    cfg_.validate();
    const std::size_t d = cfg_.d_model;
    pe_ = positional_encoding(std::max(cfg_.history_frames, cfg_.horizon_frames) + 1, d);

    history_in_ = Linear(store_, "history.input", 2, d);
    for (std::size_t l = 0; l < cfg_.n_enc_layers; ++l) {
      encoder_.emplace_back(store_, "history.layer" + std::to_string(l), d, cfg_.n_heads, cfg_.ff_dim, cfg_.pre_norm);
    }

    std::size_t map_dim = 0;
    if (cfg_.map_mode == MapMode::occupancy) {
      std::size_t in_ch = 1, side = data_io::kRasterSize;
      for (std::size_t i = 0; i < cfg_.occupancy_channels.size(); ++i) {
        const std::size_t k = cfg_.occupancy_filters[i], co = cfg_.occupancy_channels[i];
        const std::string n = "occupancy.conv" + std::to_string(i);
        occ_w_.push_back(store_.xavier(n + ".weight", {co, in_ch, k, k}, in_ch * k * k, co * k * k));
        occ_b_.push_back(store_.constant(n + ".bias", {co}, 0.0));
        side = nn::conv_output_size(side, k, cfg_.occupancy_strides[i]);
        in_ch = co;
      }
      occ_fc_ = Linear(store_, "occupancy.fc", in_ch * side * side, cfg_.map_fc_dim);
      map_dim = cfg_.map_fc_dim;
    } else if (cfg_.map_mode == MapMode::lane) {
      const std::size_t co = cfg_.lane_channels;
      lane_w_ = store_.xavier("lane.conv.weight", {co, 2, 3}, 2 * 3, co * 3);
      lane_b_ = store_.constant("lane.conv.bias", {co}, 0.0);
      const std::size_t len = nn::conv_output_size(lanes::kLanePoints, 3, 2);
      lane_fc_ = Linear(store_, "lane.fc", co * len, cfg_.map_fc_dim);
      map_dim = 3 * cfg_.map_fc_dim;
    }

    fusion_ = Linear(store_, "fusion", d + map_dim, cfg_.fusion_dim);
    classifier_ = Mlp(store_, "classifier", cfg_.fusion_dim, cfg_.classifier_dims);
    memory_fused_ = Linear(store_, "decoder.memory_fused", cfg_.fusion_dim, d);
    if (cfg_.map_mode == MapMode::lane) {
      memory_lane_ = Linear(store_, "decoder.memory_lane", cfg_.map_fc_dim, d);
    }
    target_in_ = Linear(store_, "decoder.target_input", 2, d);
    for (std::size_t l = 0; l < cfg_.n_dec_layers; ++l) {
      decoder_.emplace_back(store_, "decoder.layer" + std::to_string(l), d, cfg_.n_heads, cfg_.ff_dim, cfg_.pre_norm);
    }
    if (cfg_.pre_norm) {
      encoder_norm_ = LayerNorm(store_, "history.norm", d);
      decoder_norm_ = LayerNorm(store_, "decoder.norm", d);
    }
    generator_ = Mlp(store_, "generator", d, cfg_.generator_dims);
  }

  const ModelConfig & config() const { return cfg_; }
  nn::ParameterList & parameters() { return store_.parameters(); }
  const nn::ParameterList & parameters() const { return store_.parameters(); }

  /// [B, H, 2] -> [B, H, d_model]
  Tensor encode_history(const Tensor & history) const
  {
    if (history.rank() != 3 || history.dim(2) != 2 || history.dim(1) < 2 || history.dim(1) >= pe_.dim(0)) {
      throw ShapeMismatch("history must be [B, H, 2] with 2 <= H < " + std::to_string(pe_.dim(0)));
    }
    Tensor x = nn::add_trailing(history_in_(history), nn::slice(pe_, 0, 0, history.dim(1)));
    for (const auto & layer : encoder_) {
      x = layer(x);
    }
    return cfg_.pre_norm ? encoder_norm_(x) : x;
  }

  /// Last encoder token, [B, d_model].
  Tensor history_summary(const Tensor & memory) const
  {
    const std::size_t b = memory.dim(0), t = memory.dim(1);
    return nn::reshape(nn::slice(memory, 1, t - 1, 1), {b, cfg_.d_model});
  }

  /// [B, 1, 64, 64] -> [B, map_fc_dim]
  Tensor encode_map_occupancy(const Tensor & raster) const
  {
    if (
      raster.rank() != 4 || raster.dim(1) != 1 || raster.dim(2) != data_io::kRasterSize ||
      raster.dim(3) != data_io::kRasterSize) {
      throw WrongRasterSize("occupancy encoder expects [B, 1, 64, 64], got " + nn::to_string(raster.shape()));
    }
    if (occ_w_.empty()) {
      throw ConfigError("occupancy encoder is not part of a '" + std::string(to_string(cfg_.map_mode)) + "' model");
    }
    Tensor x = raster;
    for (std::size_t i = 0; i < occ_w_.size(); ++i) {
      x = nn::relu(nn::conv2d(x, occ_w_[i], occ_b_[i], cfg_.occupancy_strides[i]));
    }
    return occ_fc_(nn::reshape(x, {raster.dim(0), x.numel() / raster.dim(0)}));
  }

  /// [B, 3, 18, 2] -> per-lane features [B, 3, map_fc_dim], weights shared across lanes.
  Tensor encode_map_lane(const Tensor & lanes) const
  {
    if (lanes.rank() != 4 || lanes.dim(1) != 3 || lanes.dim(2) != lanes::kLanePoints || lanes.dim(3) != 2) {
      throw ShapeMismatch("lane encoder expects [B, 3, 18, 2], got " + nn::to_string(lanes.shape()));
    }
    if (!lane_w_.defined()) {
      throw ConfigError("lane encoder is not part of a '" + std::string(to_string(cfg_.map_mode)) + "' model");
    }
    const std::size_t b = lanes.dim(0);
    const Tensor seq = nn::permute(nn::reshape(lanes, {b * 3, lanes::kLanePoints, 2}), {0, 2, 1});
    const Tensor conv = nn::relu(nn::conv1d(seq, lane_w_, lane_b_, 2));
    const Tensor flat = nn::reshape(conv, {b * 3, conv.numel() / (b * 3)});
    return nn::reshape(lane_fc_(flat), {b, 3, cfg_.map_fc_dim});
  }

  /// Concatenation followed by the single fusion layer. `map_feature` is ignored without a map.
  Tensor fuse(const Tensor & summary, const Tensor & map_feature) const
  {
    if (cfg_.map_mode == MapMode::none) {
      return fusion_(summary);
    }
    if (!map_feature.defined() || map_feature.rank() != 2 || map_feature.dim(0) != summary.dim(0)) {
      throw ShapeMismatch("fusion needs a [B, map_dim] feature alongside the history summary");
    }
    return fusion_(nn::concat({summary, map_feature}, 1));
  }

  /// MLP, softmax, product with the {0,1} mask, renormalization over surviving entries.
  Tensor classify_lane(const Tensor & fused, const Tensor & mask) const
  {
    const Tensor probs = nn::softmax(classifier_(fused), 1);
    return nn::renormalize(nn::elementwise_mul(probs, mask));
  }

  /// Decoder source: the fused feature as one token, plus the chosen lane's feature in lane mode.
  Tensor decoder_memory(
    const Tensor & fused, const Tensor & lane_features, const std::vector<std::size_t> & lane) const
  {
    const std::size_t b = fused.dim(0), d = cfg_.d_model;
    const Tensor token = nn::reshape(memory_fused_(fused), {b, 1, d});
    if (cfg_.map_mode != MapMode::lane) {
      return token;
    }
    const Tensor chosen = memory_lane_(nn::gather_rows(lane_features, lane));
    return nn::concat({token, nn::reshape(chosen, {b, 1, d})}, 1);
  }

  Encoded encode(const Batch & batch) const
  {
    Encoded e;
    const Tensor summary = history_summary(encode_history(batch.history));
    Tensor map_feature;
    if (cfg_.map_mode == MapMode::occupancy) {
      map_feature = encode_map_occupancy(batch.raster);
    } else if (cfg_.map_mode == MapMode::lane) {
      e.lane_features = encode_map_lane(batch.lanes);
      map_feature = nn::reshape(e.lane_features, {batch.size, 3 * cfg_.map_fc_dim});
    }
    e.fused = fuse(summary, map_feature);
    e.probs = classify_lane(e.fused, batch.mask);
    return e;
  }

  /// Autoregressive rollout from a zero target; returns scaled positions [B, F, 2].
  Tensor decode_autoregressive(
    const Tensor & memory, DecodeTrace * trace = nullptr, const FeedbackHook & feedback = {}) const
  {
    const std::size_t b = memory.dim(0);
    std::vector<KeyValue> self_cache(decoder_.size());
    std::vector<KeyValue> memory_kv;
    for (const auto & layer : decoder_) {
      memory_kv.push_back(layer.cross_attn.project_kv(memory));
    }
    Tensor input = Tensor::zeros({b, 1, 2});
    std::vector<Tensor> outputs;
    for (std::size_t t = 0; t < cfg_.horizon_frames; ++t) {
      if (trace) {
        trace->inputs.push_back(input);
      }
      Tensor x = nn::add_trailing(target_in_(input), nn::slice(pe_, 0, t, 1));
      for (std::size_t l = 0; l < decoder_.size(); ++l) {
        x = decoder_[l].step(x, self_cache[l], memory_kv[l]);
      }
      if (cfg_.pre_norm) {
        x = decoder_norm_(x);
      }
      const Tensor out = nn::add(input, generator_(x));
      outputs.push_back(out);
      input = feedback ? feedback(t, out) : out;
    }
    return nn::concat(outputs, 1);
  }

  /// Causal single pass over given target inputs [B, F, 2] (scaled); returns scaled positions.
  Tensor decode_teacher_forced(const Tensor & memory, const Tensor & targets) const
  {
    if (targets.rank() != 3 || targets.dim(2) != 2 || targets.dim(1) != cfg_.horizon_frames) {
      throw ShapeMismatch("teacher-forced targets must be [B, horizon, 2]");
    }
    Tensor x = nn::add_trailing(target_in_(targets), nn::slice(pe_, 0, 0, targets.dim(1)));
    for (const auto & layer : decoder_) {
      x = layer(x, memory);
    }
    if (cfg_.pre_norm) {
      x = decoder_norm_(x);
    }
    return nn::add(targets, generator_(x));
  }

  /// Shifted ground truth [0, y_1, ..., y_{F-1}] in scaled units from a meters future [B, F, 2].
  Tensor teacher_inputs(const Tensor & future) const
  {
    const std::size_t b = future.dim(0), f = future.dim(1);
    std::vector<double> v(b * f * 2, 0.0);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t t = 1; t < f; ++t) {
        for (std::size_t c = 0; c < 2; ++c) {
          v[(i * f + t) * 2 + c] = future[(i * f + t - 1) * 2 + c] / cfg_.coord_scale;
        }
      }
    }
    return Tensor::from_values({b, f, 2}, std::move(v));
  }

  /// Trajectory in meters for the given lane of every sample, decoded per `mode`.
  Tensor trajectory(
    const Batch & batch, const Encoded & enc, const std::vector<std::size_t> & lane, RegressionMode mode) const
  {
    for (std::size_t i = 0; i < lane.size(); ++i) {
      if (lane[i] > 2 || !batch.masks.at(i)[lane[i]]) {
        throw MaskedLaneRequested("lane " + std::to_string(lane[i]) + " is masked for batch row " + std::to_string(i));
      }
    }
    return trajectory_unchecked(batch, enc, lane, mode);
  }

private:
  Tensor trajectory_unchecked(
    const Batch & batch, const Encoded & enc, const std::vector<std::size_t> & lane, RegressionMode mode) const
  {
    const Tensor memory = decoder_memory(enc.fused, enc.lane_features, lane);
    const Tensor scaled = mode == RegressionMode::ar ? decode_autoregressive(memory)
                                                    : decode_teacher_forced(memory, teacher_inputs(batch.future));
    return nn::scale(scaled, cfg_.coord_scale);
  }

public:
  /// Inference on agent-frame samples. Masked lanes get empty trajectories unless `all_lanes`
  /// is false, in which case only the selected lane is decoded.
  std::vector<PredictionOutput> predict(const Batch & batch, bool all_lanes = true) const
  {
    nn::NoGradGuard guard;
    const Encoded enc = encode(batch);
    const std::size_t b = batch.size, f = cfg_.horizon_frames;
    std::vector<PredictionOutput> out(b);
    for (std::size_t i = 0; i < b; ++i) {
      auto & o = out[i];
      o.mask = batch.masks[i];
      double best = -1.0;
      for (std::size_t k = 0; k < 3; ++k) {
        o.lane_probs[k] = enc.probs[i * 3 + k];
        if (o.mask[k] && o.lane_probs[k] > best) {
          best = o.lane_probs[k];
          o.selected = k;
        }
      }
    }
    auto unpack = [&](const Tensor & traj, std::size_t i) {
      std::vector<Point2> pts(f);
      for (std::size_t t = 0; t < f; ++t) {
        pts[t] = {traj[(i * f + t) * 2], traj[(i * f + t) * 2 + 1]};
      }
      return pts;
    };
    if (all_lanes && cfg_.map_mode == MapMode::lane) {
      for (std::size_t k = 0; k < 3; ++k) {
        bool any = false;
        for (std::size_t i = 0; i < b; ++i) {
          any = any || out[i].mask[k];
        }
        if (!any) {
          continue;
        }
        const Tensor traj = trajectory_unchecked(batch, enc, std::vector<std::size_t>(b, k), RegressionMode::ar);
        for (std::size_t i = 0; i < b; ++i) {
          if (out[i].mask[k]) {
            out[i].trajectories[k] = unpack(traj, i);
          }
        }
      }
    } else {
      std::vector<std::size_t> lane(b);
      for (std::size_t i = 0; i < b; ++i) {
        lane[i] = out[i].selected;
      }
      const Tensor traj = trajectory(batch, enc, lane, RegressionMode::ar);
      for (std::size_t i = 0; i < b; ++i) {
        out[i].trajectories[out[i].selected] = unpack(traj, i);
      }
    }
    for (auto & o : out) {
      o.selected_trajectory = o.trajectories[o.selected];
    }
    return out;
  }

private:
  ModelConfig cfg_;
  ParameterStore store_;
  Tensor pe_;
  Linear history_in_;
  std::vector<EncoderLayer> encoder_;
  std::vector<Tensor> occ_w_, occ_b_;
  Linear occ_fc_;
  Tensor lane_w_, lane_b_;
  Linear lane_fc_;
  Linear fusion_;
  Mlp classifier_;
  Linear memory_fused_, memory_lane_;
  Linear target_in_;
  std::vector<DecoderLayer> decoder_;
  LayerNorm encoder_norm_, decoder_norm_;
  Mlp generator_;
};

}  // namespace lanecast::model

#endif  // LANECAST__MODEL__MTPP_HPP_
