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


#include "lanecast/core.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace lanecast;
using lanecast::testing::make_trajectory;

TEST(HeadingOf, AxisAlignedDisplacement)
{
  const auto t = make_trajectory({{0, 0}, {5, 0}});
  const auto h = heading_of(t, 1);
  EXPECT_DOUBLE_EQ(h.dx, 5.0);
  EXPECT_DOUBLE_EQ(h.dy, 0.0);
}

TEST(HeadingOf, SearchesBackwardPastStillFrames)
{
  const auto t = make_trajectory({{0, 1}, {1, 1}, {1, 1}});
  const auto h = heading_of(t, 2);
  EXPECT_DOUBLE_EQ(h.dx, 1.0);
  EXPECT_DOUBLE_EQ(h.dy, 0.0);
}

TEST(HeadingOf, IdenticalPositionsAreStationary)
{
  const auto t = make_trajectory({{2, 3}, {2, 3}, {2, 3}, {2, 3}});
  EXPECT_THROW(heading_of(t, 3), StationaryAgent);
}

TEST(HeadingOf, NeverShorterThanStillEpsilon)
{
  std::mt19937_64 rng(3);
  std::normal_distribution<double> step(0.0, 0.06);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Point2> pts{{0, 0}};
    for (int i = 0; i < 6; ++i) {
      pts.push_back({pts.back().x + step(rng), pts.back().y + step(rng)});
    }
    try {
      const auto h = heading_of(make_trajectory(pts), 6);
      EXPECT_GE(h.norm(), kStillEpsilon);
    } catch (const StationaryAgent &) {
    }
  }
}

TEST(AngleBetween, Examples)
{
  EXPECT_DOUBLE_EQ(angle_between({1, 0}, {0, 1}), 90.0);
  EXPECT_DOUBLE_EQ(angle_between({1, 0}, {1, 0}), 0.0);
  EXPECT_DOUBLE_EQ(angle_between({1, 0}, {-1, 0}), 180.0);
}

TEST(AngleBetween, ZeroVectorIsDegenerate)
{
  EXPECT_THROW(angle_between({0, 0}, {1, 0}), DegenerateDirection);
  EXPECT_THROW(angle_between({1, 0}, {0, 0}), DegenerateDirection);
}

TEST(AngleBetween, SymmetricAndBounded)
{
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const Direction2 a{u(rng), u(rng)}, b{u(rng), u(rng)};
    const double ab = angle_between(a, b);
    EXPECT_EQ(ab, angle_between(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 180.0);
  }
}

TEST(RotateAbout, Examples)
{
  const auto p = rotate_about({1, 0}, {0, 0}, 90.0);
  EXPECT_NEAR(p.x, 0.0, 1e-15);
  EXPECT_NEAR(p.y, 1.0, 1e-15);

  const auto q = rotate_about({3.25, -7.5}, {1, 2}, 0.0);
  EXPECT_EQ(q.x, 3.25);
  EXPECT_EQ(q.y, -7.5);

  const auto r = rotate_about({2, 0}, {1, 0}, 180.0);
  EXPECT_NEAR(r.x, 0.0, 1e-15);
  EXPECT_NEAR(r.y, 0.0, 1e-15);
}

TEST(RotateAbout, PreservesDistancesAndComposes)
{
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  std::uniform_real_distribution<double> ang(-360.0, 360.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Point2 a{u(rng), u(rng)}, b{u(rng), u(rng)}, c{u(rng), u(rng)};
    const double t1 = ang(rng), t2 = ang(rng);
    const double d = distance(a, b);
    const double d_rot = distance(rotate_about(a, c, t1), rotate_about(b, c, t1));
    EXPECT_NEAR(d_rot, d, 1e-9 * std::max(1.0, d));

    const Point2 twice = rotate_about(rotate_about(a, c, t2), c, t1);
    const Point2 once = rotate_about(a, c, t1 + t2);
    const double scale = std::max(1.0, distance(a, c));
    EXPECT_NEAR(twice.x, once.x, 1e-9 * scale);
    EXPECT_NEAR(twice.y, once.y, 1e-9 * scale);
  }
}

TEST(AgentFrame, LocalGlobalRoundTrip)
{
  const auto f = AgentFrame::from_heading({10, -4}, {3, 4});
  const Point2 ahead = f.to_local({13, 0});
  EXPECT_NEAR(ahead.x, 5.0, 1e-12);
  EXPECT_NEAR(ahead.y, 0.0, 1e-12);
  const Point2 left = f.to_local(Point2{10, -4} + Direction2{-4, 3});
  EXPECT_NEAR(left.x, 0.0, 1e-12);
  EXPECT_NEAR(left.y, 5.0, 1e-12);
  const Point2 back = f.to_global(f.to_local({-2.5, 7.0}));
  EXPECT_NEAR(back.x, -2.5, 1e-12);
  EXPECT_NEAR(back.y, 7.0, 1e-12);
}

TEST(Trajectory, ValidateRejectsGapsAndShortTracks)
{
  auto t = make_trajectory({{0, 0}, {1, 0}, {2, 0}});
  EXPECT_NO_THROW(t.validate());
  t.frames[2].index = 5;
  EXPECT_THROW(t.validate(), InvalidTrajectory);
  EXPECT_THROW(make_trajectory({{0, 0}}).validate(2), InvalidTrajectory);
}

TEST(LaneChunk, ValidateChecksSpacing)
{
  LaneChunk c{1, {{0, 0}, {5, 0}, {10, 0}}, {}};
  EXPECT_NO_THROW(c.validate());
  c.centers.push_back({20, 0});
  EXPECT_THROW(c.validate(), InvalidLaneChunk);
  EXPECT_THROW((LaneChunk{2, {{0, 0}}, {}}.validate()), InvalidLaneChunk);
}

TEST(MakeAgent, SplitsAdjacentWindows)
{
  std::vector<Point2> pts;
  for (int i = 0; i < 16; ++i) {
    pts.push_back({2.0 * i, 0.0});
  }
  const auto a = make_agent(make_trajectory(pts, 100), 3);
  EXPECT_EQ(a.history.size(), 4u);
  EXPECT_EQ(a.future.size(), 12u);
  EXPECT_EQ(a.current_frame(), 103);
  EXPECT_NO_THROW(a.validate());
}
