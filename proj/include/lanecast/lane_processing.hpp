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

#ifndef LANECAST__LANE_PROCESSING_HPP_
#define LANECAST__LANE_PROCESSING_HPP_

#include "lanecast/core.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace lanecast::lanes
{

// Start point plus 17 ahead: 17 x 5 m covers the 80 m an urban vehicle can travel in 6 s.
inline constexpr std::size_t kLanePoints = 18;
inline constexpr double kCenterSpacing = 5.0;
// Rounding slack on the inclusive direction bound, degrees.
inline constexpr double kAngleSlackDeg = 1e-9;
// Lateral gaps closer than this are treated as equal, meters.
inline constexpr double kGapTieEpsilon = 1e-9;

enum class LaneSlot : std::size_t { left = 0, middle = 1, right = 2 };

struct LaneConfig
{
  double max_angle_deg{30.0};
  // Chunks whose nearest center point is farther than this are not "surrounding" lanes.
  double surround_radius{10.0};
  // The agent must be this close to its middle lane's nearest center point.
  double lane_region_radius{4.0};
  // Chunks whose nearest point lies this close to the dividing line continue the middle
  // lane longitudinally and are not side-lane candidates.
  double same_lane_tolerance{1.0};
  double extension_search_radius{15.0};
};

struct LaneMask
{
  bool left{false};
  bool middle{true};
  bool right{false};

  bool operator==(const LaneMask &) const = default;
  bool operator[](std::size_t slot) const { return slot == 0 ? left : (slot == 1 ? middle : right); }
  std::array<double, 3> as_weights() const
  {
    return {left ? 1.0 : 0.0, middle ? 1.0 : 0.0, right ? 1.0 : 0.0};
  }
};

/// Three fixed-size lane polylines in the agent frame; masked slots hold the (0, 0) sentinel.
struct LaneInput
{
  std::array<std::vector<Point2>, 3> lanes;
  LaneMask mask;

  bool operator==(const LaneInput &) const = default;
};

/// Lane direction at 0-based center index `i`: centers[i] - centers[i-1], and for the first
/// point the direction of the second.
inline Direction2 lane_direction(const LaneChunk & chunk, std::size_t i)
{
  if (chunk.centers.size() < 2 || i >= chunk.centers.size()) {
    throw InvalidLaneChunk(
      "lane_direction: index " + std::to_string(i) + " on chunk " + std::to_string(chunk.chunk_id));
  }
  if (i == 0) {
    i = 1;
  }
  return chunk.centers[i] - chunk.centers[i - 1];
}

/// Index of the center point nearest `p`; ties go to the lowest index.
inline std::size_t nearest_center_index(const LaneChunk & chunk, const Point2 & p)
{
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < chunk.centers.size(); ++i) {
    const double d = distance(chunk.centers[i], p);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

/// Keeps chunks whose direction at the center point nearest the agent is within the angle
/// bound of the agent heading. The bound itself is kept.
inline std::vector<LaneChunk> filter_by_direction(
  const Direction2 & agent_heading, const Point2 & agent_pos, const std::vector<LaneChunk> & chunks,
  const LaneConfig & cfg = {})
{
  if (!(agent_heading.norm() > 0.0)) {
    throw DegenerateDirection("filter_by_direction: zero agent heading");
  }
  std::vector<LaneChunk> kept;
  for (const auto & chunk : chunks) {
    const Direction2 dir = lane_direction(chunk, nearest_center_index(chunk, agent_pos));
    if (angle_between(agent_heading, dir) <= cfg.max_angle_deg + kAngleSlackDeg) {
      kept.push_back(chunk);
    }
  }
  return kept;
}

/// Chunks indexed into the caller's list, each with its center point nearest the agent (l_a).
struct LaneSelection
{
  std::size_t middle{0};
  std::size_t middle_start{0};
  std::optional<std::size_t> left;
  std::size_t left_start{0};
  std::optional<std::size_t> right;
  std::size_t right_start{0};

  LaneMask mask() const { return {left.has_value(), true, right.has_value()}; }
};

/// Nearest-three-lane identification. The middle lane is the chunk nearest the agent; the
/// line through its nearest point along its direction splits the plane, and on each side the
/// chunk whose nearest point is closest to the line wins. Points on the line count as left.
/// Gaps equal within kGapTieEpsilon (pieces of one straight lane) go to the chunk nearer the
/// agent, then to the lower id.
inline LaneSelection select_three_lanes(
  const Point2 & agent_pos, const std::vector<LaneChunk> & chunks, const LaneConfig & cfg = {})
{
  if (chunks.empty()) {
    throw NoLaneForAgent("no lane candidates for agent");
  }
  std::vector<std::size_t> nearest(chunks.size());
  std::vector<double> dist(chunks.size());
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    nearest[c] = nearest_center_index(chunks[c], agent_pos);
    dist[c] = distance(chunks[c].centers[nearest[c]], agent_pos);
  }

  LaneSelection sel;
  for (std::size_t c = 1; c < chunks.size(); ++c) {
    const auto key = std::tie(dist[c], chunks[c].chunk_id);
    if (key < std::tie(dist[sel.middle], chunks[sel.middle].chunk_id)) {
      sel.middle = c;
    }
  }
  sel.middle_start = nearest[sel.middle];

  const Point2 & anchor = chunks[sel.middle].centers[sel.middle_start];
  const Direction2 axis = lane_direction(chunks[sel.middle], sel.middle_start).normalized();
  double best_left = std::numeric_limits<double>::infinity();
  double best_right = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    if (c == sel.middle) {
      continue;
    }
    const double offset = cross(axis, chunks[c].centers[nearest[c]] - anchor);
    const double gap = std::abs(offset);
    if (gap < cfg.same_lane_tolerance) {
      continue;
    }
    auto & best = offset >= 0.0 ? best_left : best_right;
    auto & slot = offset >= 0.0 ? sel.left : sel.right;
    auto & start = offset >= 0.0 ? sel.left_start : sel.right_start;
    bool better = gap < best - kGapTieEpsilon;
    if (!better && slot && std::abs(gap - best) <= kGapTieEpsilon) {
      better = std::tie(dist[c], chunks[c].chunk_id) < std::tie(dist[*slot], chunks[*slot].chunk_id);
    }
    if (better) {
      best = gap;
      slot = c;
      start = nearest[c];
    }
  }
  return sel;
}

/// Extends a lane from `start_index` to exactly kLanePoints center points. Missing points are
/// taken from the next chunk found around a virtual point 5 m past the current end; candidates
/// with more than two center points behind the virtual point are discarded.
inline std::vector<Point2> extend_lane(
  const LaneChunk & start_chunk, std::size_t start_index, const std::vector<LaneChunk> & all_chunks,
  const LaneConfig & cfg = {})
{
  if (start_index >= start_chunk.centers.size()) {
    throw InvalidLaneChunk("extend_lane: start index outside chunk");
  }
  std::vector<Point2> points(start_chunk.centers.begin() + start_index, start_chunk.centers.end());
  if (points.size() >= kLanePoints) {
    points.resize(kLanePoints);
    return points;
  }

  std::set<std::int64_t> used{start_chunk.chunk_id};
  const LaneChunk * current = &start_chunk;
  std::size_t last_index = start_chunk.centers.size() - 1;
  while (points.size() < kLanePoints) {
    const Direction2 dir = lane_direction(*current, last_index).normalized();
    const Point2 virtual_point = points.back() + kCenterSpacing * dir;

    std::vector<std::tuple<double, std::int64_t, const LaneChunk *>> candidates;
    for (const auto & chunk : all_chunks) {
      if (used.count(chunk.chunk_id)) {
        continue;
      }
      double d = std::numeric_limits<double>::infinity();
      for (const auto & p : chunk.centers) {
        d = std::min(d, distance(p, virtual_point));
      }
      if (d <= cfg.extension_search_radius) {
        candidates.emplace_back(d, chunk.chunk_id, &chunk);
      }
    }
    std::sort(candidates.begin(), candidates.end());

    const LaneChunk * next = nullptr;
    for (const auto & [d, id, chunk] : candidates) {
      std::size_t rear = 0;
      for (const auto & p : chunk->centers) {
        if (dot(p - virtual_point, dir) < 0.0) {
          ++rear;
        }
      }
      if (rear <= 2) {
        next = chunk;
        break;
      }
    }
    if (next == nullptr) {
      throw AgentFiltered(
        "lane extension from chunk " + std::to_string(current->chunk_id) +
        " found no usable next chunk");
    }
    used.insert(next->chunk_id);
    const std::size_t take = std::min(kLanePoints - points.size(), next->centers.size());
    points.insert(points.end(), next->centers.begin(), next->centers.begin() + take);
    current = next;
    last_index = take - 1;
  }
  return points;
}

enum class FilterReason { none, stationary, no_lane, wrong_direction_only, extension_failed };

inline const char * to_string(FilterReason r)
{
  switch (r) {
    case FilterReason::stationary:
      return "stationary";
    case FilterReason::no_lane:
      return "no-lane";
    case FilterReason::wrong_direction_only:
      return "wrong-direction-only";
    case FilterReason::extension_failed:
      return "extension-failed";
    default:
      return "none";
  }
}

struct LaneBuildOutcome
{
  std::optional<LaneInput> input;
  FilterReason reason{FilterReason::none};
  std::string detail;
  AgentFrame frame;
  // Global-frame polylines for the unmasked slots (empty when masked).
  std::array<std::vector<Point2>, 3> global_lanes;
};

/// Chunks with a center point within `radius` of `p`.
inline std::vector<LaneChunk> surrounding_chunks(
  const Point2 & p, const std::vector<LaneChunk> & chunks, double radius)
{
  std::vector<LaneChunk> out;
  for (const auto & c : chunks) {
    if (distance(c.centers[nearest_center_index(c, p)], p) <= radius) {
      out.push_back(c);
    }
  }
  return out;
}

/// Direction filtering, three-lane selection and extension for one agent, returned in the
/// agent frame. Never throws for data-driven rejections; the reason is reported instead.
inline LaneBuildOutcome try_build_lane_input(
  const AgentRecord & agent, const std::vector<LaneChunk> & chunks, const LaneConfig & cfg = {})
{
  LaneBuildOutcome out;
  Direction2 heading;
  try {
    heading = heading_of(agent.history, agent.current_frame());
  } catch (const StationaryAgent & e) {
    out.reason = FilterReason::stationary;
    out.detail = e.what();
    return out;
  }
  const Point2 & pos = agent.current_position();
  out.frame = AgentFrame::from_heading(pos, heading);

  const auto nearby = surrounding_chunks(pos, chunks, cfg.surround_radius);
  if (nearby.empty()) {
    out.reason = FilterReason::no_lane;
    out.detail = "no lane chunk near agent '" + agent.agent_id + "'";
    return out;
  }
  const auto kept = filter_by_direction(heading, pos, nearby, cfg);
  if (kept.empty()) {
    out.reason = FilterReason::wrong_direction_only;
    out.detail = "every lane near agent '" + agent.agent_id + "' runs the wrong way";
    return out;
  }
  const auto sel = select_three_lanes(pos, kept, cfg);
  if (distance(kept[sel.middle].centers[sel.middle_start], pos) > cfg.lane_region_radius) {
    out.reason = FilterReason::no_lane;
    out.detail = "agent '" + agent.agent_id + "' is not located in the lane region";
    return out;
  }

  LaneInput input;
  input.mask = sel.mask();
  const std::array<std::optional<std::size_t>, 3> slots{sel.left, sel.middle, sel.right};
  const std::array<std::size_t, 3> starts{sel.left_start, sel.middle_start, sel.right_start};
  try {
    for (std::size_t s = 0; s < 3; ++s) {
      if (!slots[s]) {
        input.lanes[s].assign(kLanePoints, Point2{0.0, 0.0});
        continue;
      }
      out.global_lanes[s] = extend_lane(kept[*slots[s]], starts[s], chunks, cfg);
      input.lanes[s].reserve(kLanePoints);
      for (const auto & p : out.global_lanes[s]) {
        input.lanes[s].push_back(out.frame.to_local(p));
      }
    }
  } catch (const AgentFiltered & e) {
    out.reason = FilterReason::extension_failed;
    out.detail = e.what();
    out.global_lanes = {};
    return out;
  }
  out.input = std::move(input);
  return out;
}

/// Throwing form: NoLaneForAgent when the agent has no usable lane, AgentFiltered when
/// extension fails or the agent never moves.
inline LaneInput build_lane_input(
  const AgentRecord & agent, const std::vector<LaneChunk> & chunks, const LaneConfig & cfg = {})
{
  auto outcome = try_build_lane_input(agent, chunks, cfg);
  switch (outcome.reason) {
    case FilterReason::none:
      return std::move(*outcome.input);
    case FilterReason::no_lane:
    case FilterReason::wrong_direction_only:
      throw NoLaneForAgent(outcome.detail);
    default:
      throw AgentFiltered(outcome.detail);
  }
}

inline double arc_length(const std::vector<Point2> & line)
{
  double s = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    s += distance(line[i - 1], line[i]);
  }
  return s;
}

}  // namespace lanecast::lanes

#endif  // LANECAST__LANE_PROCESSING_HPP_
