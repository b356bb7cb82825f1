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


#ifndef LANECAST__PIPELINE_HPP_
#define LANECAST__PIPELINE_HPP_

#include "lanecast/data_io/dataset.hpp"
#include "lanecast/data_io/generator.hpp"
#include "lanecast/data_io/samples.hpp"
#include "lanecast/metrics.hpp"
#include "lanecast/model/config.hpp"
#include "lanecast/model/training.hpp"
#include "lanecast/preprocess.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace lanecast::pipeline
{

// ---------------------------------------------------------------------------
// Generator settings as key = value text.

inline std::string format_double(double v)
{
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline bool apply_generator_setting(data_io::GeneratorConfig & g, const std::string & key, const std::string & v)
{
  using model::detail::to_bool;
  using model::detail::to_double;
  using model::detail::to_size;
  if (key == "seed") g.seed = to_size(key, v);
  else if (key == "n_scenes") g.n_scenes = to_size(key, v);
  else if (key == "templates") {
    g.templates.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      g.templates.push_back(data_io::parse_template(model::detail::trim(item)));
    }
  }
  else if (key == "curve_radius_min") g.curve_radius_min = to_double(key, v);
  else if (key == "curve_radius_max") g.curve_radius_max = to_double(key, v);
  else if (key == "lanes_min") g.lanes_min = to_size(key, v);
  else if (key == "lanes_max") g.lanes_max = to_size(key, v);
  else if (key == "chunk_length") g.chunk_length = to_double(key, v);
  else if (key == "speed_min") g.speed_min = to_double(key, v);
  else if (key == "speed_max") g.speed_max = to_double(key, v);
  else if (key == "max_accel") g.max_accel = to_double(key, v);
  else if (key == "noise_sigma") g.noise_sigma = to_double(key, v);
  else if (key == "turn_fraction") g.turn_fraction = to_double(key, v);
  else if (key == "successor_drop_fraction") g.successor_drop_fraction = to_double(key, v);
  else if (key == "agents_per_scene") g.agents_per_scene = to_size(key, v);
  else if (key == "history_frames") g.history_frames = to_size(key, v);
  else if (key == "horizon_frames") g.horizon_frames = to_size(key, v);
  else if (key == "lane_width") g.lane_width = to_double(key, v);
  else if (key == "cell_size") g.cell_size = to_double(key, v);
  else if (key == "single_movement_lanes") g.single_movement_lanes = to_bool(key, v);
  else if (key == "occupancy") g.occupancy = to_bool(key, v);
  else if (key == "random_pose") g.random_pose = to_bool(key, v);
  else return false;
  return true;
}

inline model::KeyValues generator_to_key_values(const data_io::GeneratorConfig & g)
{
  std::string templates;
  for (std::size_t i = 0; i < g.templates.size(); ++i) {
    templates += (i ? "," : "") + std::string(data_io::to_string(g.templates[i]));
  }
  const auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  return {
    {"seed", std::to_string(g.seed)},
    {"n_scenes", std::to_string(g.n_scenes)},
    {"templates", templates},
    {"curve_radius_min", format_double(g.curve_radius_min)},
    {"curve_radius_max", format_double(g.curve_radius_max)},
    {"lanes_min", std::to_string(g.lanes_min)},
    {"lanes_max", std::to_string(g.lanes_max)},
    {"chunk_length", format_double(g.chunk_length)},
    {"speed_min", format_double(g.speed_min)},
    {"speed_max", format_double(g.speed_max)},
    {"max_accel", format_double(g.max_accel)},
    {"noise_sigma", format_double(g.noise_sigma)},
    {"turn_fraction", format_double(g.turn_fraction)},
    {"successor_drop_fraction", format_double(g.successor_drop_fraction)},
    {"agents_per_scene", std::to_string(g.agents_per_scene)},
    {"history_frames", std::to_string(g.history_frames)},
    {"horizon_frames", std::to_string(g.horizon_frames)},
    {"lane_width", format_double(g.lane_width)},
    {"cell_size", format_double(g.cell_size)},
    {"single_movement_lanes", b(g.single_movement_lanes)},
    {"occupancy", b(g.occupancy)},
    {"random_pose", b(g.random_pose)},
  };
}

inline data_io::GeneratorConfig read_generator_config(const std::string & path, data_io::GeneratorConfig base = {})
{
  for (const auto & [k, v] : model::read_key_values(path)) {
    if (!apply_generator_setting(base, k, v)) {
      throw ConfigError(path + ": unknown generator key '" + k + "'");
    }
  }
  base.validate();
  return base;
}

/// Generates, splits 8:1:1 with the generator seed and writes the dataset.
inline std::vector<Scene> generate_dataset(const data_io::GeneratorConfig & g, const std::string & root)
{
  auto scenes = data_io::generate(g);
  data_io::assign_splits(scenes, g.seed);
  nlohmann::json extra = nlohmann::json::object();
  for (const auto & [k, v] : generator_to_key_values(g)) {
    extra[k] = v;
  }
  data_io::write_dataset(root, scenes, extra);
  return scenes;
}

// ---------------------------------------------------------------------------
// Preprocessing: scene files to per-split sample caches.

inline std::string samples_path(const std::string & dir, SplitTag tag)
{
  return (std::filesystem::path(dir) / (std::string(to_string(tag)) + ".samples")).string();
}

struct PreprocessSummary
{
  std::map<SplitTag, data_io::BuildReport> reports;

  std::string describe() const
  {
    std::string out;
    for (const auto & [tag, r] : reports) {
      out += std::string(to_string(tag)) + ": kept " + std::to_string(r.kept);
      for (auto reason :
           {lanes::FilterReason::stationary, lanes::FilterReason::no_lane, lanes::FilterReason::wrong_direction_only,
            lanes::FilterReason::extension_failed}) {
        const auto it = r.filtered.find(reason);
        out += std::string(", ") + lanes::to_string(reason) + " " + std::to_string(it == r.filtered.end() ? 0 : it->second);
      }
      out += "\n";
    }
    return out;
  }
};

/// Smooths, augments the train split when `augment` is set, builds lane inputs and writes
/// train/val/test sample caches under `out_dir`.
inline PreprocessSummary preprocess_dataset(
  const std::string & in_root, const std::string & out_dir, const std::optional<preprocess::AugmentConfig> & augment,
  const data_io::SampleConfig & cfg = {})
{
  std::filesystem::create_directories(out_dir);
  PreprocessSummary summary;
  for (SplitTag tag : {SplitTag::train, SplitTag::val, SplitTag::test}) {
    const auto scenes = data_io::read_split(in_root, tag);
    data_io::BuildReport report;
    const auto samples =
      data_io::build_split_samples(scenes, cfg, tag == SplitTag::train ? augment : std::nullopt, report);
    data_io::save_samples(samples_path(out_dir, tag), samples);
    summary.reports[tag] = report;
  }
  std::ofstream os(std::filesystem::path(out_dir) / "preprocess.txt");
  os << summary.describe();
  return summary;
}

// ---------------------------------------------------------------------------
// Epoch loop with best-validation selection.

struct EpochRecord
{
  std::size_t epoch{0};
  model::EpochStats train;
  model::LossValue val;
  double val_fde{0.0};
  double seconds{0.0};
};

struct FitOptions
{
  std::size_t epochs{10};
  model::TrainOptions train;
  std::size_t threads{1};
};

struct FitResult
{
  std::vector<EpochRecord> history;
  std::size_t best_epoch{0};
  double best_val_fde{std::numeric_limits<double>::infinity()};
};

inline std::string format_epoch(const EpochRecord & r)
{
  char buf[256];
  std::snprintf(
    buf, sizeof(buf), "epoch %zu train_loss %.6f train_mse %.6f train_ce %.6f val_loss %.6f val_fde %.6f", r.epoch,
    r.train.loss, r.train.mse, r.train.ce, r.val.total, r.val_fde);
  return buf;
}

/// Trains for `opts.epochs`, scoring each epoch by validation FDE at the longest reported
/// horizon, and leaves the best epoch's parameters in `net`.
inline FitResult fit(
  model::MtppModel & net, const std::vector<data_io::Sample> & train, const std::vector<data_io::Sample> & val,
  const FitOptions & opts, const std::function<void(const EpochRecord &)> & on_epoch = {})
{
  FitResult result;
  if (opts.epochs == 0) {
    return result;
  }
  if (val.empty()) {
    throw EmptyDataset("validation split is empty");
  }
  model::Trainer trainer(net, opts.train);
  std::vector<std::vector<double>> best;
  for (std::size_t e = 1; e <= opts.epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = e;
    rec.train = trainer.train_epoch(train);
    rec.val = model::evaluate_loss(net, val, opts.train.batch_size);
    rec.val_fde = metrics::evaluate(net, val, opts.threads).fde.back();
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (rec.val_fde < result.best_val_fde) {
      result.best_val_fde = rec.val_fde;
      result.best_epoch = e;
      best.clear();
      for (const auto & p : net.parameters()) {
        best.push_back(p.tensor.values());
      }
    }
    result.history.push_back(rec);
    if (on_epoch) {
      on_epoch(rec);
    }
  }
  if (!best.empty()) {
    auto & params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i].tensor.mutable_values() = best[i];
    }
  }
  return result;
}

}  // namespace lanecast::pipeline

#endif  // LANECAST__PIPELINE_HPP_
