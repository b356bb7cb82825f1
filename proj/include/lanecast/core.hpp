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

#ifndef LANECAST__CORE_HPP_
#define LANECAST__CORE_HPP_

#include "lanecast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace lanecast
{

// Annotation rate of the source data; every frame index is a 0.5 s step.
inline constexpr double kFrameRateHz = 2.0;
inline constexpr std::size_t kHorizonFrames = 12;
inline constexpr std::size_t kHistoryFrames = 4;
// Per-frame displacement below this is annotation jitter, not motion.
inline constexpr double kStillEpsilon = 0.05;

inline constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

struct Point2
{
  double x{0.0};
  double y{0.0};

  bool operator==(const Point2 &) const = default;
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

struct Direction2
{
  double dx{0.0};
  double dy{0.0};

  bool operator==(const Direction2 &) const = default;
  double norm() const { return std::hypot(dx, dy); }
  Direction2 normalized() const
  {
    const double n = norm();
    return {dx / n, dy / n};
  }
};

inline Direction2 operator-(const Point2 & a, const Point2 & b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator+(const Point2 & p, const Direction2 & d) { return {p.x + d.dx, p.y + d.dy}; }
inline Direction2 operator*(double s, const Direction2 & d) { return {s * d.dx, s * d.dy}; }
inline double dot(const Direction2 & a, const Direction2 & b) { return a.dx * b.dx + a.dy * b.dy; }
inline double cross(const Direction2 & a, const Direction2 & b) { return a.dx * b.dy - a.dy * b.dx; }
inline double distance(const Point2 & a, const Point2 & b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Distance from `p` to the segment [a, b].
inline double distance_to_segment(const Point2 & p, const Point2 & a, const Point2 & b)
{
  const Direction2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) {
    return distance(p, a);
  }
  double t = dot(p - a, ab) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + t * ab);
}

inline double distance_to_polyline(const Point2 & p, const std::vector<Point2> & line)
{
  if (line.size() == 1) {
    return distance(p, line.front());
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < line.size(); ++i) {
    best = std::min(best, distance_to_segment(p, line[i - 1], line[i]));
  }
  return best;
}

struct TrajectoryFrame
{
  std::int64_t index{0};
  Point2 position;

  bool operator==(const TrajectoryFrame &) const = default;
};

/// Positions of one agent sampled at a fixed frame rate.
struct Trajectory
{
  std::string agent_id;
  std::vector<TrajectoryFrame> frames;
  double frame_rate_hz{kFrameRateHz};

  bool operator==(const Trajectory &) const = default;

  std::size_t size() const { return frames.size(); }

  /// Throws InvalidTrajectory unless frames are contiguous, finite and at least `min_length` long.
  void validate(std::size_t min_length = 2) const
  {
    if (frames.size() < min_length) {
      throw InvalidTrajectory(
        "trajectory '" + agent_id + "' has " + std::to_string(frames.size()) + " frames, need " +
        std::to_string(min_length));
    }
    for (std::size_t i = 0; i < frames.size(); ++i) {
      if (!frames[i].position.finite()) {
        throw InvalidTrajectory("trajectory '" + agent_id + "' has a non-finite position");
      }
      if (i > 0 && frames[i].index != frames[i - 1].index + 1) {
        throw InvalidTrajectory("trajectory '" + agent_id + "' frame indices are not contiguous");
      }
    }
  }

  std::optional<std::size_t> offset_of(std::int64_t frame_index) const
  {
    if (frames.empty()) {
      return std::nullopt;
    }
    const std::int64_t off = frame_index - frames.front().index;
    if (off < 0 || off >= static_cast<std::int64_t>(frames.size())) {
      return std::nullopt;
    }
    return static_cast<std::size_t>(off);
  }

  std::vector<Point2> positions() const
  {
    std::vector<Point2> out;
    out.reserve(frames.size());
    for (const auto & f : frames) {
      out.push_back(f.position);
    }
    return out;
  }
};

enum class AgentClass { vehicle };

/// Target agent: observed history up to the current frame and the ground-truth future.
struct AgentRecord
{
  std::string agent_id;
  Trajectory history;
  Trajectory future;
  AgentClass class_label{AgentClass::vehicle};
  // Lane chunk ids the agent actually drives along (generator ground truth, may be empty).
  std::vector<std::int64_t> route;

  bool operator==(const AgentRecord &) const = default;

  std::int64_t current_frame() const { return history.frames.back().index; }
  const Point2 & current_position() const { return history.frames.back().position; }

  void validate(std::size_t horizon_frames = kHorizonFrames) const
  {
    history.validate(2);
    if (future.frames.size() != horizon_frames) {
      throw InvalidTrajectory(
        "agent '" + agent_id + "' future has " + std::to_string(future.frames.size()) +
        " frames, expected " + std::to_string(horizon_frames));
    }
    if (!future.frames.empty()) {
      future.validate(1);
      if (future.frames.front().index != current_frame() + 1) {
        throw InvalidTrajectory("agent '" + agent_id + "' history and future are not adjacent");
      }
    }
  }

  /// History and future joined into one trajectory.
  Trajectory full() const
  {
    Trajectory out = history;
    out.frames.insert(out.frames.end(), future.frames.begin(), future.frames.end());
    return out;
  }
};

/// Splits a full track into history (ending at `current_offset`) and the following frames.
inline AgentRecord make_agent(
  const Trajectory & full, std::size_t current_offset,
  std::size_t horizon_frames = kHorizonFrames)
{
  if (current_offset + 1 > full.frames.size()) {
    throw InvalidTrajectory("current frame offset outside trajectory '" + full.agent_id + "'");
  }
  AgentRecord agent;
  agent.agent_id = full.agent_id;
  agent.history.agent_id = full.agent_id;
  agent.future.agent_id = full.agent_id;
  agent.history.frame_rate_hz = agent.future.frame_rate_hz = full.frame_rate_hz;
  const std::size_t end = std::min(full.frames.size(), current_offset + 1 + horizon_frames);
  agent.history.frames.assign(full.frames.begin(), full.frames.begin() + current_offset + 1);
  agent.future.frames.assign(full.frames.begin() + current_offset + 1, full.frames.begin() + end);
  return agent;
}

/// Ordered lane center points at nominal 5 m spacing.
struct LaneChunk
{
  std::int64_t chunk_id{0};
  std::vector<Point2> centers;
  // Connectivity hints; may be incomplete and are never used for lane processing.
  std::vector<std::int64_t> successor_ids;

  bool operator==(const LaneChunk &) const = default;

  std::size_t size() const { return centers.size(); }

  void validate(double min_spacing = 4.0, double max_spacing = 6.0) const
  {
    if (centers.size() < 2) {
      throw InvalidLaneChunk(
        "lane chunk " + std::to_string(chunk_id) + " has fewer than 2 center points");
    }
    for (std::size_t i = 0; i < centers.size(); ++i) {
      if (!centers[i].finite()) {
        throw InvalidLaneChunk("lane chunk " + std::to_string(chunk_id) + " has a non-finite point");
      }
      if (i > 0) {
        const double d = distance(centers[i - 1], centers[i]);
        if (d < min_spacing || d > max_spacing) {
          throw InvalidLaneChunk(
            "lane chunk " + std::to_string(chunk_id) + " spacing " + std::to_string(d) +
            " m outside [" + std::to_string(min_spacing) + ", " + std::to_string(max_spacing) + "]");
        }
      }
    }
  }
};

/// Top-down boolean drivable-area grid. Cell (row, col) covers
/// [col, col+1) x [row, row+1) cells in the raster frame, which is rotated by
/// `rotation_deg` about `origin`.
struct OccupancyRaster
{
  Point2 origin;
  double cell_size{1.0};
  double rotation_deg{0.0};
  std::size_t width{0};
  std::size_t height{0};
  std::vector<std::uint8_t> grid;  // row-major, height x width

  bool operator==(const OccupancyRaster &) const = default;

  void validate() const
  {
    if (!(cell_size > 0.0)) {
      throw ParseError("occupancy cell_size must be positive");
    }
    if (grid.size() != width * height) {
      throw ParseError("occupancy grid size does not match width x height");
    }
  }

  bool at(std::size_t row, std::size_t col) const { return grid[row * width + col] != 0; }

  /// Drivable flag at a global point; false outside the grid.
  bool drivable(const Point2 & p) const
  {
    const double th = deg2rad(-rotation_deg);
    const double dx = p.x - origin.x;
    const double dy = p.y - origin.y;
    const double lx = (std::cos(th) * dx - std::sin(th) * dy) / cell_size;
    const double ly = (std::sin(th) * dx + std::cos(th) * dy) / cell_size;
    if (!(lx >= 0.0) || !(ly >= 0.0)) {
      return false;
    }
    const auto col = static_cast<std::size_t>(lx);
    const auto row = static_cast<std::size_t>(ly);
    if (col >= width || row >= height) {
      return false;
    }
    return at(row, col);
  }
};

enum class SplitTag { unassigned, train, val, test };

inline const char * to_string(SplitTag tag)
{
  switch (tag) {
    case SplitTag::train:
      return "train";
    case SplitTag::val:
      return "val";
    case SplitTag::test:
      return "test";
    default:
      return "unassigned";
  }
}

struct Scene
{
  std::string scene_id;
  std::vector<AgentRecord> agents;
  std::vector<LaneChunk> lane_chunks;
  std::optional<OccupancyRaster> occupancy;
  SplitTag split_tag{SplitTag::unassigned};

  bool operator==(const Scene &) const = default;

  const LaneChunk * find_chunk(std::int64_t id) const
  {
    for (const auto & c : lane_chunks) {
      if (c.chunk_id == id) {
        return &c;
      }
    }
    return nullptr;
  }
};

/// Displacement into frame `t` from the previous frame. Falls back to the most recent
/// earlier pair whose displacement is at least kStillEpsilon.
inline Direction2 heading_of(const Trajectory & traj, std::int64_t t, double still_eps = kStillEpsilon)
{
  const auto off = traj.offset_of(t);
  if (!off || *off == 0) {
    throw InvalidTrajectory("heading_of: frames t and t-1 must exist in '" + traj.agent_id + "'");
  }
  for (std::size_t i = *off; i >= 1; --i) {
    const Direction2 d = traj.frames[i].position - traj.frames[i - 1].position;
    if (d.norm() >= still_eps) {
      return d;
    }
  }
  throw StationaryAgent("agent '" + traj.agent_id + "' never moves at least " +
                        std::to_string(still_eps) + " m between frames");
}

/// Unsigned angle in degrees, [0, 180].
inline double angle_between(const Direction2 & a, const Direction2 & b)
{
  if (!(a.norm() > 0.0) || !(b.norm() > 0.0)) {
    throw DegenerateDirection("angle_between: zero-length direction");
  }
  return rad2deg(std::abs(std::atan2(cross(a, b), dot(a, b))));
}

inline Point2 rotate_about(const Point2 & p, const Point2 & center, double theta_deg)
{
  const double th = deg2rad(theta_deg);
  const double c = std::cos(th);
  const double s = std::sin(th);
  const double dx = p.x - center.x;
  const double dy = p.y - center.y;
  return {center.x + c * dx - s * dy, center.y + s * dx + c * dy};
}

inline Direction2 rotate(const Direction2 & d, double theta_deg)
{
  const double th = deg2rad(theta_deg);
  return {std::cos(th) * d.dx - std::sin(th) * d.dy, std::sin(th) * d.dx + std::cos(th) * d.dy};
}

/// Rigid frame attached to an agent: origin at its current position, +x along its heading.
struct AgentFrame
{
  Point2 origin;
  Direction2 axis{1.0, 0.0};  // unit heading

  bool operator==(const AgentFrame &) const = default;

  static AgentFrame from_heading(const Point2 & origin, const Direction2 & heading)
  {
    return {origin, heading.normalized()};
  }

  Point2 to_local(const Point2 & p) const
  {
    const Direction2 d = p - origin;
    return {dot(d, axis), cross(axis, d)};
  }

  Point2 to_global(const Point2 & p) const
  {
    return {
      origin.x + axis.dx * p.x - axis.dy * p.y,
      origin.y + axis.dy * p.x + axis.dx * p.y};
  }
};

}  // namespace lanecast

#endif  // LANECAST__CORE_HPP_
