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

#ifndef LANECAST__DATA_IO__DATASET_HPP_
#define LANECAST__DATA_IO__DATASET_HPP_

#include "lanecast/core.hpp"
#include "lanecast/data_io/scene_file.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace lanecast::data_io
{

struct SplitCounts
{
  std::size_t train{0};
  std::size_t val{0};
  std::size_t test{0};
};

/// 8:1:1 partition sizes; needs at least ten scenes so every split is non-empty.
inline SplitCounts split_counts(std::size_t n)
{
  if (n < 10) {
    throw TooFewScenes("need at least 10 scenes to split 8:1:1, got " + std::to_string(n));
  }
  SplitCounts c;
  c.train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n)));
  c.val = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
  c.test = n - c.train - c.val;
  return c;
}

/// Shuffles with `seed` and tags every scene train, val or test.
inline void assign_splits(std::vector<Scene> & scenes, std::uint64_t seed)
{
  const SplitCounts c = split_counts(scenes.size());
  std::vector<std::size_t> order(scenes.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t k = 0; k < order.size(); ++k) {
    scenes[order[k]].split_tag = k < c.train ? SplitTag::train : (k < c.train + c.val ? SplitTag::val : SplitTag::test);
  }
}

inline std::vector<Scene> select_split(const std::vector<Scene> & scenes, SplitTag tag)
{
  std::vector<Scene> out;
  for (const auto & s : scenes) {
    if (s.split_tag == tag) {
      out.push_back(s);
    }
  }
  return out;
}

/// Writes root/{train,val,test}/<scene_id>.json plus root/manifest.json.
inline void write_dataset(const std::string & root, const std::vector<Scene> & scenes, const nlohmann::json & extra = {})
{
  namespace fs = std::filesystem;
  nlohmann::json manifest;
  manifest["version"] = kSceneSchemaVersion;
  manifest["splits"] = nlohmann::json::object();
  for (SplitTag tag : {SplitTag::train, SplitTag::val, SplitTag::test}) {
    fs::create_directories(fs::path(root) / to_string(tag));
    manifest["splits"][to_string(tag)] = nlohmann::json::array();
  }
  for (const auto & s : scenes) {
    if (s.split_tag == SplitTag::unassigned) {
      throw ConfigError("scene '" + s.scene_id + "' has no split assigned");
    }
    const std::string rel = std::string(to_string(s.split_tag)) + "/" + s.scene_id + ".json";
    save_scene(s, (fs::path(root) / rel).string());
    manifest["splits"][to_string(s.split_tag)].push_back(rel);
  }
  if (!extra.is_null()) {
    manifest["generator"] = extra;
  }
  std::ofstream out(fs::path(root) / "manifest.json");
  if (!out) {
    throw ParseError("cannot write manifest under " + root);
  }
  out << manifest.dump(1) << "\n";
}

/// Loads every scene of one split, in file-name order.
inline std::vector<Scene> read_split(const std::string & root, SplitTag tag)
{
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(root) / to_string(tag);
  if (!fs::is_directory(dir)) {
    throw ParseError("missing split directory " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto & e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Scene> scenes;
  for (const auto & f : files) {
    Scene s = load_scene(f.string());
    s.split_tag = tag;
    scenes.push_back(std::move(s));
  }
  return scenes;
}

}  // namespace lanecast::data_io

#endif  // LANECAST__DATA_IO__DATASET_HPP_
