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

#ifndef LANECAST__MODEL__TRAINING_HPP_
#define LANECAST__MODEL__TRAINING_HPP_

#include "lanecast/model/mtpp.hpp"
#include "lanecast/numerics/checkpoint.hpp"
#include "lanecast/numerics/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace lanecast::model
{

struct LossValue
{
  double total{0.0};
  double mse_part{0.0};
  double ce_part{0.0};
};

inline double combine_loss(double alpha, double mse, double ce) { return alpha * mse + (1.0 - alpha) * ce; }

/// alpha * MSE + (1 - alpha) * CE on a single prediction; MSE averages squared Euclidean
/// error over frames.
inline LossValue compute_loss(
  const PredictionOutput & pred, const std::vector<Point2> & gt_future, std::size_t gt_lane, double alpha)
{
  if (gt_lane > 2 || !pred.mask[gt_lane]) {
    throw MaskedGroundTruthLane("ground-truth lane " + std::to_string(gt_lane) + " is masked");
  }
  const auto & traj = pred.trajectories[gt_lane];
  if (traj.size() != gt_future.size() || traj.empty()) {
    throw ShapeMismatch(
      "loss: prediction has " + std::to_string(traj.size()) + " frames, ground truth " +
      std::to_string(gt_future.size()));
  }
  LossValue v;
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const double dx = traj[t].x - gt_future[t].x, dy = traj[t].y - gt_future[t].y;
    v.mse_part += dx * dx + dy * dy;
  }
  v.mse_part /= static_cast<double>(traj.size());
  v.ce_part = -std::log(pred.lane_probs[gt_lane]);
  v.total = combine_loss(alpha, v.mse_part, v.ce_part);
  return v;
}

struct LossTensor
{
  Tensor total;
  double mse_part{0.0};
  double ce_part{0.0};
};

inline LossTensor loss_tensor(const Tensor & pred, const Tensor & future, const Tensor & probs,
                              const std::vector<std::size_t> & gt_lane, double alpha)
{
  LossTensor out;
  const Tensor mse = nn::mean_squared_distance(pred, future);
  const Tensor ce = nn::cross_entropy(probs, gt_lane);
  out.mse_part = mse.item();
  out.ce_part = ce.item();
  out.total = nn::add(nn::scale(mse, alpha), nn::scale(ce, 1.0 - alpha));
  return out;
}

struct TrainOptions
{
  std::size_t batch_size{32};
  double learning_rate{0.0005};
  double decay{0.9999};
  nn::OptimizerKind optimizer{nn::OptimizerKind::sgd};
  double clip_norm{0.0};

  void validate() const
  {
    if (batch_size == 0) {
      throw ConfigError("batch_size must be positive");
    }
  }
};

struct EpochStats
{
  double loss{0.0};
  double mse{0.0};
  double ce{0.0};
  std::size_t steps{0};
  std::size_t samples{0};
};

class Trainer
{
public:
  Trainer(MtppModel & model, TrainOptions opts)
  : model_(model),
    opts_(opts),
    optimizer_(opts.learning_rate, opts.decay, opts.optimizer),
    rng_(model.config().seed ^ 0x9e3779b97f4a7c15ULL)
  {
    opts_.validate();
    optimizer_.set_clip_norm(opts_.clip_norm);
  }

  /// Forward, loss, backward and update on one batch; returns the batch loss.
  LossTensor step(const Batch & batch)
  {
    const auto & cfg = model_.config();
    if (!batch.future.defined()) {
      throw ShapeMismatch("training batch carries no future");
    }
    for (std::size_t i = 0; i < batch.size; ++i) {
      if (!batch.masks[i][batch.gt_lane[i]]) {
        throw MaskedGroundTruthLane("ground-truth lane is masked for batch row " + std::to_string(i));
      }
    }
    const auto enc = model_.encode(batch);
    const Tensor traj = model_.trajectory(batch, enc, batch.gt_lane, cfg.regression_mode);
    LossTensor loss = loss_tensor(traj, batch.future, enc.probs, batch.gt_lane, cfg.alpha);
    if (!std::isfinite(loss.total.item())) {
      throw NumericDivergence("training loss became non-finite");
    }
    nn::backward(loss.total);
    optimizer_.step(model_.parameters());
    return loss;
  }

  EpochStats train_epoch(const std::vector<data_io::Sample> & samples)
  {
    if (samples.empty()) {
      throw EmptyDataset("training set is empty");
    }
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);
    EpochStats stats;
    for (std::size_t start = 0; start < order.size(); start += opts_.batch_size) {
      const std::size_t end = std::min(order.size(), start + opts_.batch_size);
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
      const auto loss = step(make_batch(model_.config(), samples, idx));
      const double w = static_cast<double>(idx.size());
      stats.loss += loss.total.item() * w;
      stats.mse += loss.mse_part * w;
      stats.ce += loss.ce_part * w;
      stats.samples += idx.size();
      ++stats.steps;
    }
    const double n = static_cast<double>(stats.samples);
    stats.loss /= n;
    stats.mse /= n;
    stats.ce /= n;
    return stats;
  }

  const nn::Optimizer & optimizer() const { return optimizer_; }

private:
  MtppModel & model_;
  TrainOptions opts_;
  nn::Optimizer optimizer_;
  std::mt19937_64 rng_;
};

/// Mean loss over a dataset with inference-mode (autoregressive) decoding.
inline LossValue evaluate_loss(const MtppModel & model, const std::vector<data_io::Sample> & samples,
                               std::size_t batch_size = 64)
{
  if (samples.empty()) {
    throw EmptyDataset("evaluation set is empty");
  }
  nn::NoGradGuard guard;
  LossValue sum;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(samples.size(), start + batch_size); ++i) {
      idx.push_back(i);
    }
    const Batch batch = make_batch(model.config(), samples, idx);
    const auto enc = model.encode(batch);
    const Tensor traj = model.trajectory(batch, enc, batch.gt_lane, RegressionMode::ar);
    const auto loss = loss_tensor(traj, batch.future, enc.probs, batch.gt_lane, model.config().alpha);
    const double w = static_cast<double>(idx.size());
    sum.total += loss.total.item() * w;
    sum.mse_part += loss.mse_part * w;
    sum.ce_part += loss.ce_part * w;
  }
  const double n = static_cast<double>(samples.size());
  return {sum.total / n, sum.mse_part / n, sum.ce_part / n};
}

// ---------------------------------------------------------------------------
// Checkpoints: parameters plus the config text as a byte tensor named "meta.config".

inline void save_model(const std::string & path, const MtppModel & model)
{
  std::vector<std::pair<std::string, nn::Tensor>> tensors;
  std::string text;
  for (const auto & [k, v] : to_key_values(model.config())) {
    text += k + " = " + v + "\n";
  }
  const std::size_t n = text.size();
  tensors.emplace_back("meta.config", nn::Tensor::from_values({n}, std::vector<double>(text.begin(), text.end())));
  for (const auto & p : model.parameters()) {
    tensors.emplace_back(p.name, p.tensor);
  }
  nn::save_checkpoint(path, tensors);
}

inline MtppModel load_model(const std::string & path)
{
  auto tensors = nn::load_checkpoint(path);
  const auto meta = tensors.find("meta.config");
  if (meta == tensors.end()) {
    throw CheckpointError(path + " carries no model config");
  }
  std::string text;
  for (double c : meta->second.values()) {
    text.push_back(static_cast<char>(c));
  }
  std::istringstream is(text);
  ModelConfig cfg;
  for (const auto & [k, v] : parse_key_values(is, path)) {
    if (!apply_setting(cfg, k, v)) {
      throw CheckpointError(path + " has unknown config key '" + k + "'");
    }
  }
  MtppModel model(cfg);
  for (auto & p : model.parameters()) {
    const auto it = tensors.find(p.name);
    if (it == tensors.end()) {
      throw CheckpointError(path + " lacks parameter '" + p.name + "'");
    }
    if (it->second.shape() != p.tensor.shape()) {
      throw CheckpointError(
        path + ": parameter '" + p.name + "' has shape " + nn::to_string(it->second.shape()) + ", expected " +
        nn::to_string(p.tensor.shape()));
    }
    p.tensor.mutable_values() = it->second.values();
  }
  if (tensors.size() != model.parameters().size() + 1) {
    throw CheckpointError(path + " holds tensors the model does not know");
  }
  return model;
}

}  // namespace lanecast::model

#endif  // LANECAST__MODEL__TRAINING_HPP_
