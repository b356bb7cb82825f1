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


#ifndef LANECAST_TESTS__SUPPORT__FIXTURES_HPP_
#define LANECAST_TESTS__SUPPORT__FIXTURES_HPP_

#include "lanecast/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lanecast::testing
{

inline Trajectory make_trajectory(const std::vector<Point2> & pts, std::int64_t first = 0, const std::string & id = "a")
{
  Trajectory t;
  t.agent_id = id;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    t.frames.push_back({first + static_cast<std::int64_t>(i), pts[i]});
  }
  return t;
}

/// Straight run of `n` center points from `start` with 5 m steps along `dir` (normalized).
inline LaneChunk straight_chunk(std::int64_t id, Point2 start, Direction2 dir, std::size_t n, double step = 5.0)
{
  LaneChunk c;
  c.chunk_id = id;
  const Direction2 u = dir.normalized();
  for (std::size_t i = 0; i < n; ++i) {
    c.centers.push_back(start + (step * static_cast<double>(i)) * u);
  }
  return c;
}

/// Agent moving at `speed` m/frame along `dir`, current position at `current`.
inline AgentRecord straight_agent(
  Point2 current, Direction2 dir, double speed = 4.0, std::size_t history = kHistoryFrames,
  std::size_t horizon = kHorizonFrames, const std::string & id = "a")
{
  const Direction2 u = dir.normalized();
  std::vector<Point2> pts;
  for (std::size_t i = 0; i < history + horizon; ++i) {
    const double k = static_cast<double>(i) - static_cast<double>(history - 1);
    pts.push_back(current + (speed * k) * u);
  }
  return make_agent(make_trajectory(pts, 0, id), history - 1, horizon);
}

inline std::vector<Point2> rotate_points(const std::vector<Point2> & pts, const Point2 & c, double deg)
{
  std::vector<Point2> out;
  for (const auto & p : pts) {
    out.push_back(rotate_about(p, c, deg));
  }
  return out;
}

inline LaneChunk transform_chunk(const LaneChunk & chunk, const Point2 & c, double deg, const Direction2 & shift)
{
  LaneChunk out = chunk;
  for (auto & p : out.centers) {
    p = rotate_about(p, c, deg) + shift;
  }
  return out;
}

inline AgentRecord transform_agent(const AgentRecord & agent, const Point2 & c, double deg, const Direction2 & shift)
{
  AgentRecord out = agent;
  for (auto * traj : {&out.history, &out.future}) {
    for (auto & f : traj->frames) {
      f.position = rotate_about(f.position, c, deg) + shift;
    }
  }
  return out;
}

}  // namespace lanecast::testing

#endif  // LANECAST_TESTS__SUPPORT__FIXTURES_HPP_
