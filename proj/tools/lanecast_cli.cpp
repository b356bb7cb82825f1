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


#include "lanecast/data_io/scene_file.hpp"
#include "lanecast/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

using namespace lanecast;

namespace
{

constexpr std::uint64_t kDefaultSeed = 42;

std::uint64_t default_seed()
{
  if (const char * env = std::getenv("LANECAST_SEED")) {
    return model::detail::to_size("LANECAST_SEED", env);
  }
  return kDefaultSeed;
}

std::size_t default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

struct GenSynthArgs
{
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_scenes;
};

struct PreprocessArgs
{
  std::string in;
  std::string out;
  bool no_augment{false};
  double rotation_step{15.0};
  std::size_t rotation_count{24};
  std::size_t turn_upsample{6};
  double process_noise{1.0};
  double measurement_noise{0.3};
};

struct TrainArgs
{
  std::string data;
  std::string mode{"ar"};
  std::string map{"lane"};
  double alpha{0.5};
  std::size_t epochs{10};
  std::string out;
  std::string model_config;
  std::size_t batch_size{256};
  double learning_rate{0.0005};
  double decay{0.9999};
  std::string optimizer{"sgd"};
  double clip{5.0};
  std::optional<std::uint64_t> seed;
  std::size_t threads{default_threads()};
};

struct EvalArgs
{
  std::string data;
  std::string ckpt;
  std::string report;
  std::string variant;
  std::size_t threads{default_threads()};
};

struct PredictArgs
{
  std::string scene;
  std::string agent;
  std::string ckpt;
  std::string out;
};

int run_gen_synth(const GenSynthArgs & a)
{
  data_io::GeneratorConfig g;
  g.seed = default_seed();
  if (!a.config.empty()) {
    g = pipeline::read_generator_config(a.config, g);
  }
  if (a.seed) {
    g.seed = *a.seed;
  }
  if (a.n_scenes) {
    g.n_scenes = *a.n_scenes;
  }
  g.validate();
  const auto scenes = pipeline::generate_dataset(g, a.out);
  std::cout << "wrote " << scenes.size() << " scenes to " << a.out << " (seed " << g.seed << ")\n";
  return 0;
}

int run_preprocess(const PreprocessArgs & a)
{
  std::optional<preprocess::AugmentConfig> augment;
  if (!a.no_augment) {
    augment = preprocess::AugmentConfig{a.rotation_step, a.rotation_count, a.turn_upsample, 30.0};
    augment->validate();
  }
  data_io::SampleConfig cfg;
  cfg.kalman.process_noise_sigma = a.process_noise;
  cfg.kalman.measurement_noise_sigma = a.measurement_noise;
  cfg.kalman.validate();
  const auto summary = pipeline::preprocess_dataset(a.in, a.out, augment, cfg);
  std::cout << summary.describe();
  return 0;
}

int run_train(const TrainArgs & a)
{
  model::ModelConfig cfg;
  if (!a.model_config.empty()) {
    for (const auto & [k, v] : model::read_key_values(a.model_config)) {
      if (!model::apply_setting(cfg, k, v)) {
        throw ConfigError(a.model_config + ": unknown model key '" + k + "'");
      }
    }
  }
  cfg.regression_mode = model::parse_regression_mode(a.mode);
  cfg.map_mode = model::parse_map_mode(a.map);
  cfg.alpha = a.alpha;
  cfg.seed = a.seed ? *a.seed : default_seed();
  cfg.validate();

  pipeline::FitOptions opts;
  opts.epochs = a.epochs;
  opts.threads = a.threads;
  opts.train.batch_size = a.batch_size;
  opts.train.learning_rate = a.learning_rate;
  opts.train.decay = a.decay;
  opts.train.clip_norm = a.clip;
  if (a.optimizer == "adam") {
    opts.train.optimizer = nn::OptimizerKind::adam;
  } else if (a.optimizer != "sgd") {
    throw ConfigError("unknown optimizer '" + a.optimizer + "' (expected sgd or adam)");
  }
  opts.train.validate();

  model::MtppModel net(cfg);
  if (a.epochs > 0) {
    const auto train = data_io::load_samples(pipeline::samples_path(a.data, SplitTag::train));
    const auto val = data_io::load_samples(pipeline::samples_path(a.data, SplitTag::val));
    std::cout << "training " << model::to_string(cfg.map_mode) << "/" << model::to_string(cfg.regression_mode) << " on "
              << train.size() << " samples, validating on " << val.size() << "\n";
    const auto result = pipeline::fit(net, train, val, opts, [](const pipeline::EpochRecord & r) {
      std::cout << pipeline::format_epoch(r) << std::endl;
    });
    std::cout << "best epoch " << result.best_epoch << " val_fde " << result.best_val_fde << "\n";
  }
  if (const auto parent = std::filesystem::path(a.out).parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  model::save_model(a.out, net);
  std::cout << "checkpoint written to " << a.out << "\n";
  return 0;
}

int run_eval(const EvalArgs & a)
{
  const auto net = model::load_model(a.ckpt);
  const auto test = data_io::load_samples(pipeline::samples_path(a.data, SplitTag::test));
  const auto report = metrics::evaluate(net, test, a.threads);
  const std::string variant = a.variant.empty() ? std::string(model::to_string(net.config().map_mode)) + "-" +
                                                    model::to_string(net.config().regression_mode)
                                                : a.variant;
  metrics::write_report_csv(a.report, {{variant, report}});
  std::cout << metrics::csv_header(report.ade.size()) << metrics::csv_rows(variant, report);
  return 0;
}

int run_predict(const PredictArgs & a)
{
  const Scene scene = data_io::load_scene(a.scene);
  const auto it = std::find_if(scene.agents.begin(), scene.agents.end(), [&](const AgentRecord & r) {
    return r.agent_id == a.agent;
  });
  if (it == scene.agents.end()) {
    throw ParseError(a.scene + ": no agent '" + a.agent + "'");
  }
  const auto net = model::load_model(a.ckpt);
  lanes::FilterReason why{};
  const auto sample = data_io::build_sample(scene, *it, {}, why);
  if (!sample) {
    throw AgentFiltered("agent '" + a.agent + "' was filtered: " + lanes::to_string(why));
  }
  const auto pred = net.predict(model::make_batch(net.config(), {*sample}, {0})).front();

  static const char * kSlot[3] = {"left", "middle", "right"};
  const std::int64_t now = it->current_frame();
  auto track = [&](const std::string & id, const std::vector<Point2> & local) {
    nlohmann::json frames = nlohmann::json::array();
    for (std::size_t t = 0; t < local.size(); ++t) {
      const Point2 g = sample->frame.to_global(local[t]);
      frames.push_back({now + static_cast<std::int64_t>(t) + 1, g.x, g.y});
    }
    return nlohmann::json{{"id", id}, {"frames", frames}};
  };
  nlohmann::json doc;
  doc["scene_id"] = scene.scene_id;
  doc["agent_id"] = a.agent;
  doc["agents"] = nlohmann::json::array();
  for (std::size_t k = 0; k < 3; ++k) {
    if (pred.mask[k]) {
      doc["agents"].push_back(track(a.agent + "/" + kSlot[k], pred.trajectories[k]));
    }
  }
  doc["agents"].push_back(track(a.agent + "/selected", pred.selected_trajectory));
  doc["lane_chunks"] = nlohmann::json::array();
  for (std::size_t k = 0; k < 3; ++k) {
    if (!pred.mask[k]) {
      continue;
    }
    nlohmann::json centers = nlohmann::json::array();
    for (const auto & p : sample->lanes.lanes[k]) {
      const Point2 g = sample->frame.to_global(p);
      centers.push_back({g.x, g.y});
    }
    doc["lane_chunks"].push_back({{"id", static_cast<std::int64_t>(k)}, {"centers", centers}, {"successors", nlohmann::json::array()}});
  }
  doc["mask"] = {pred.mask[0], pred.mask[1], pred.mask[2]};
  doc["probabilities"] = {pred.lane_probs[0], pred.lane_probs[1], pred.lane_probs[2]};
  doc["selected"] = kSlot[pred.selected];

  std::ofstream os(a.out);
  if (!os) {
    throw ConfigError("cannot write " + a.out);
  }
  os << doc.dump(1) << "\n";
  std::cout << "selected " << kSlot[pred.selected] << " lane, written to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"lanecast: lane-aware multi-modal trajectory prediction"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  GenSynthArgs gen;
  auto * gen_cmd = app.add_subcommand("gen-synth", "Generate a synthetic scene dataset split 8:1:1");
  gen_cmd->add_option("--config", gen.config, "Generator key = value file");
  gen_cmd->add_option("--out", gen.out, "Dataset root directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed (default 42 or LANECAST_SEED)");
  gen_cmd->add_option("--scenes", gen.n_scenes, "Number of scenes (overrides the config file)");

  PreprocessArgs pre;
  auto * pre_cmd = app.add_subcommand("preprocess", "Smooth, augment and build lane inputs into sample caches");
  pre_cmd->add_option("--in", pre.in, "Dataset root written by gen-synth")->required();
  pre_cmd->add_option("--out", pre.out, "Output directory for sample caches")->required();
  pre_cmd->add_flag("--no-augment", pre.no_augment, "Skip rotation and turn upsampling of the train split");
  pre_cmd->add_option("--rotation-step", pre.rotation_step, "Rotation step, degrees");
  pre_cmd->add_option("--rotation-count", pre.rotation_count, "Number of rotated copies (step x count = 360)");
  pre_cmd->add_option("--turn-upsample", pre.turn_upsample, "Copies of each turning agent");
  pre_cmd->add_option("--process-noise", pre.process_noise, "Kalman white-acceleration sigma, m/s^2");
  pre_cmd->add_option("--measurement-noise", pre.measurement_noise, "Kalman measurement sigma, m");

  TrainArgs tr;
  auto * tr_cmd = app.add_subcommand("train", "Train a model and save the best-validation checkpoint");
  tr_cmd->add_option("--data", tr.data, "Directory of sample caches");
  tr_cmd->add_option("--mode", tr.mode, "Regression mode")->check(CLI::IsMember({"ar", "nar"}));
  tr_cmd->add_option("--map", tr.map, "Map input")->check(CLI::IsMember({"none", "occupancy", "lane"}));
  tr_cmd->add_option("--alpha", tr.alpha, "Loss weight of the trajectory term")->check(CLI::Range(0.0, 1.0));
  tr_cmd->add_option("--epochs", tr.epochs, "Training epochs (0 writes an initialized checkpoint)");
  tr_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
  tr_cmd->add_option("--model-config", tr.model_config, "Model key = value file");
  tr_cmd->add_option("--batch-size", tr.batch_size, "Batch size");
  tr_cmd->add_option("--lr", tr.learning_rate, "Learning rate");
  tr_cmd->add_option("--decay", tr.decay, "Per-step learning-rate decay");
  tr_cmd->add_option("--optimizer", tr.optimizer, "Optimizer")->check(CLI::IsMember({"sgd", "adam"}));
  tr_cmd->add_option("--clip", tr.clip, "Global gradient-norm clip (0 disables)");
  tr_cmd->add_option("--seed", tr.seed, "Initialization and shuffling seed (default 42 or LANECAST_SEED)");
  tr_cmd->add_option("--threads", tr.threads, "Threads for validation");

  EvalArgs ev;
  auto * ev_cmd = app.add_subcommand("eval", "Evaluate ADE/FDE at 1..6 s on the test split");
  ev_cmd->add_option("--data", ev.data, "Directory of sample caches")->required();
  ev_cmd->add_option("--ckpt", ev.ckpt, "Checkpoint path")->required();
  ev_cmd->add_option("--report", ev.report, "CSV report path")->required();
  ev_cmd->add_option("--variant", ev.variant, "Row label (default <map>-<mode>)");
  ev_cmd->add_option("--threads", ev.threads, "Worker threads");

  PredictArgs pr;
  auto * pr_cmd = app.add_subcommand("predict", "Predict one agent and write candidate trajectories");
  pr_cmd->add_option("--scene", pr.scene, "Scene file")->required();
  pr_cmd->add_option("--agent", pr.agent, "Agent id")->required();
  pr_cmd->add_option("--ckpt", pr.ckpt, "Checkpoint path")->required();
  pr_cmd->add_option("--out", pr.out, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorFamily::config);
  }

  try {
    if (*gen_cmd) return run_gen_synth(gen);
    if (*pre_cmd) return run_preprocess(pre);
    if (*tr_cmd) {
      if (tr.epochs > 0 && tr.data.empty()) {
        throw ConfigError("train needs --data unless --epochs is 0");
      }
      return run_train(tr);
    }
    if (*ev_cmd) return run_eval(ev);
    if (*pr_cmd) return run_predict(pr);
  } catch (const Error & e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.family());
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
