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

#ifndef LANECAST__DATA_IO__SAMPLES_HPP_
#define LANECAST__DATA_IO__SAMPLES_HPP_

#include "lanecast/core.hpp"
#include "lanecast/lane_processing.hpp"
#include "lanecast/preprocess.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lanecast::data_io
{

inline constexpr std::size_t kRasterSize = 64;

/// One training/evaluation example, everything expressed in the agent frame.
struct Sample
{
  std::string scene_id;
  std::string agent_id;
  AgentFrame frame;
  std::vector<Point2> history;
  std::vector<Point2> future;
  lanes::LaneInput lanes;
  std::size_t gt_lane{1};
  std::vector<std::uint8_t> raster;  // kRasterSize^2, row-major, row 0 at the back-right corner
  bool turning{false};

  bool operator==(const Sample &) const = default;
};

struct SampleConfig
{
  preprocess::KalmanConfig kalman;
  lanes::LaneConfig lane;
  bool smooth_history{true};
  bool smooth_future{false};
  double raster_cell{1.0};
};

struct BuildReport
{
  std::size_t kept{0};
  std::map<lanes::FilterReason, std::size_t> filtered;

  std::size_t total_filtered() const
  {
    std::size_t n = 0;
    for (const auto & [reason, count] : filtered) {
      n += count;
    }
    return n;
  }

  void merge(const BuildReport & other)
  {
    kept += other.kept;
    for (const auto & [reason, count] : other.filtered) {
      filtered[reason] += count;
    }
  }
};

/// Agent-centered, heading-aligned drivable crop. Cell (r, c) samples the local point
/// ((c - n/2 + 0.5) * cell, (r - n/2 + 0.5) * cell).
inline std::vector<std::uint8_t> raster_crop(
  const OccupancyRaster & raster, const AgentFrame & frame, double cell = 1.0, std::size_t n = kRasterSize)
{
  std::vector<std::uint8_t> out(n * n, 0);
  const double half = static_cast<double>(n) / 2.0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const Point2 local{(static_cast<double>(c) - half + 0.5) * cell, (static_cast<double>(r) - half + 0.5) * cell};
      out[r * n + c] = raster.drivable(frame.to_global(local)) ? 1 : 0;
    }
  }
  return out;
}

/// Index of the unmasked lane with the smallest mean distance to the future track.
inline std::size_t ground_truth_lane(
  const std::array<std::vector<Point2>, 3> & lanes, const lanes::LaneMask & mask, const std::vector<Point2> & future)
{
  std::size_t best = 1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < 3; ++k) {
    if (!mask[k]) {
      continue;
    }
    double d = 0.0;
    for (const auto & p : future) {
      d += distance_to_polyline(p, lanes[k]);
    }
    d /= static_cast<double>(future.size());
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

inline Trajectory smooth_window(const Trajectory & t, const preprocess::KalmanConfig & cfg)
{
  return t.frames.size() >= 2 ? preprocess::smooth(t, cfg) : t;
}

/// Builds the sample for one agent; returns nullopt with `why` set when lane processing
/// rejects it.
inline std::optional<Sample> build_sample(
  const Scene & scene, const AgentRecord & raw, const SampleConfig & cfg, lanes::FilterReason & why)
{
  AgentRecord agent = raw;
  if (cfg.smooth_history) {
    agent.history = smooth_window(raw.history, cfg.kalman);
  }
  if (cfg.smooth_future) {
    agent.future = smooth_window(raw.future, cfg.kalman);
  }
  auto outcome = lanes::try_build_lane_input(agent, scene.lane_chunks, cfg.lane);
  why = outcome.reason;
  if (!outcome.input) {
    return std::nullopt;
  }
  Sample s;
  s.scene_id = scene.scene_id;
  s.agent_id = agent.agent_id;
  s.frame = outcome.frame;
  for (const auto & f : agent.history.frames) {
    s.history.push_back(s.frame.to_local(f.position));
  }
  for (const auto & f : agent.future.frames) {
    s.future.push_back(s.frame.to_local(f.position));
  }
  s.lanes = std::move(*outcome.input);
  s.gt_lane = ground_truth_lane(s.lanes.lanes, s.lanes.mask, s.future);
  if (scene.occupancy) {
    s.raster = raster_crop(*scene.occupancy, s.frame, cfg.raster_cell);
  }
  try {
    s.turning = preprocess::classify_turning(agent);
  } catch (const StationaryAgent &) {
    s.turning = false;
  }
  return s;
}

inline std::vector<Sample> build_samples(const Scene & scene, const SampleConfig & cfg, BuildReport & report)
{
  std::vector<Sample> out;
  for (const auto & a : scene.agents) {
    lanes::FilterReason why{};
    if (auto s = build_sample(scene, a, cfg, why)) {
      out.push_back(std::move(*s));
      ++report.kept;
    } else {
      ++report.filtered[why];
    }
  }
  return out;
}

/// Samples for a whole split; train scenes are augmented first when `augment` is set.
inline std::vector<Sample> build_split_samples(
  const std::vector<Scene> & scenes, const SampleConfig & cfg, const std::optional<preprocess::AugmentConfig> & augment,
  BuildReport & report)
{
  std::vector<Sample> out;
  for (const auto & scene : scenes) {
    if (augment) {
      for (const auto & copy : preprocess::augment_scene(scene, *augment)) {
        auto part = build_samples(copy, cfg, report);
        out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
      }
    } else {
      auto part = build_samples(scene, cfg, report);
      out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary cache: "LSMP" | u32 version | u64 count | samples (little-endian, f64 coordinates)

namespace detail
{

inline constexpr char kSampleMagic[4] = {'L', 'S', 'M', 'P'};
inline constexpr std::uint32_t kSampleVersion = 1;

class Writer
{
public:
  explicit Writer(std::ostream & os) : os_(os) {}
  template <typename T>
  void pod(const T & v)
  {
    os_.write(reinterpret_cast<const char *>(&v), sizeof(T));
  }
  void str(const std::string & s)
  {
    pod(static_cast<std::uint32_t>(s.size()));
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void point(const Point2 & p)
  {
    pod(p.x);
    pod(p.y);
  }
  void points(const std::vector<Point2> & ps)
  {
    pod(static_cast<std::uint32_t>(ps.size()));
    for (const auto & p : ps) {
      point(p);
    }
  }

private:
  std::ostream & os_;
};

class Reader
{
public:
  Reader(std::istream & is, std::string path) : is_(is), path_(std::move(path)) {}
  template <typename T>
  T pod()
  {
    T v{};
    is_.read(reinterpret_cast<char *>(&v), sizeof(T));
    if (!is_) {
      throw ParseError("truncated sample cache " + path_);
    }
    return v;
  }
  std::string str()
  {
    const auto n = pod<std::uint32_t>();
    if (n > (1u << 20)) {
      throw ParseError("corrupt string length in sample cache " + path_);
    }
    std::string s(n, '\0');
    is_.read(s.data(), n);
    if (!is_) {
      throw ParseError("truncated sample cache " + path_);
    }
    return s;
  }
  Point2 point()
  {
    const double x = pod<double>();
    return {x, pod<double>()};
  }
  std::vector<Point2> points()
  {
    const auto n = pod<std::uint32_t>();
    if (n > 4096) {
      throw ParseError("corrupt point count in sample cache " + path_);
    }
    std::vector<Point2> ps(n);
    for (auto & p : ps) {
      p = point();
    }
    return ps;
  }

private:
  std::istream & is_;
  std::string path_;
};

}  // namespace detail

inline void save_samples(const std::string & path, const std::vector<Sample> & samples)
{
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw ParseError("cannot write sample cache " + path);
  }
  os.write(detail::kSampleMagic, 4);
  detail::Writer w(os);
  w.pod(detail::kSampleVersion);
  w.pod(static_cast<std::uint64_t>(samples.size()));
  for (const auto & s : samples) {
    w.str(s.scene_id);
    w.str(s.agent_id);
    w.point(s.frame.origin);
    w.pod(s.frame.axis.dx);
    w.pod(s.frame.axis.dy);
    w.points(s.history);
    w.points(s.future);
    for (const auto & lane : s.lanes.lanes) {
      w.points(lane);
    }
    w.pod(static_cast<std::uint8_t>((s.lanes.mask.left ? 1 : 0) | (s.lanes.mask.middle ? 2 : 0) | (s.lanes.mask.right ? 4 : 0)));
    w.pod(static_cast<std::uint8_t>(s.gt_lane));
    w.pod(static_cast<std::uint8_t>(s.turning ? 1 : 0));
    w.pod(static_cast<std::uint32_t>(s.raster.size()));
    os.write(reinterpret_cast<const char *>(s.raster.data()), static_cast<std::streamsize>(s.raster.size()));
  }
  if (!os) {
    throw ParseError("failed writing sample cache " + path);
  }
}

inline std::vector<Sample> load_samples(const std::string & path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw ParseError("cannot open sample cache " + path);
  }
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, detail::kSampleMagic, 4) != 0) {
    throw ParseError(path + " is not a sample cache");
  }
  detail::Reader r(is, path);
  const auto version = r.pod<std::uint32_t>();
  if (version != detail::kSampleVersion) {
    throw SchemaVersionMismatch(
      "sample cache " + path + " has version " + std::to_string(version) + ", expected " +
      std::to_string(detail::kSampleVersion));
  }
  const auto count = r.pod<std::uint64_t>();
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
  for (std::uint64_t i = 0; i < count; ++i) {
    Sample s;
    s.scene_id = r.str();
    s.agent_id = r.str();
    s.frame.origin = r.point();
    s.frame.axis.dx = r.pod<double>();
    s.frame.axis.dy = r.pod<double>();
    s.history = r.points();
    s.future = r.points();
    for (auto & lane : s.lanes.lanes) {
      lane = r.points();
    }
    const auto bits = r.pod<std::uint8_t>();
    s.lanes.mask = {(bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0};
    s.gt_lane = r.pod<std::uint8_t>();
    s.turning = r.pod<std::uint8_t>() != 0;
    const auto n = r.pod<std::uint32_t>();
    if (n != 0 && n != kRasterSize * kRasterSize) {
      throw ParseError("corrupt raster size in sample cache " + path);
    }
    s.raster.resize(n);
    is.read(reinterpret_cast<char *>(s.raster.data()), n);
    if (!is) {
      throw ParseError("truncated sample cache " + path);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace lanecast::data_io

#endif  // LANECAST__DATA_IO__SAMPLES_HPP_
