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

#ifndef LANECAST__PREPROCESS_HPP_
#define LANECAST__PREPROCESS_HPP_

#include "lanecast/core.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace lanecast::preprocess
{

struct KalmanConfig
{
  double process_noise_sigma{1.0};      // white acceleration, m/s^2
  double measurement_noise_sigma{0.3};  // m
  double initial_covariance_scale{1.0};

  void validate() const
  {
    if (!(process_noise_sigma > 0.0) || !(measurement_noise_sigma > 0.0) || !(initial_covariance_scale > 0.0)) {
      throw ConfigError("Kalman noise parameters must be strictly positive");
    }
  }
};

namespace detail
{

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<double, 4>;  // row-major [a b; c d]

inline Mat2 mul(const Mat2 & a, const Mat2 & b)
{
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}
inline Mat2 transpose(const Mat2 & a) { return {a[0], a[2], a[1], a[3]}; }
inline Mat2 inverse(const Mat2 & a)
{
  const double det = a[0] * a[3] - a[1] * a[2];
  return {a[3] / det, -a[1] / det, -a[2] / det, a[0] / det};
}
inline Vec2 mul(const Mat2 & a, const Vec2 & v) { return {a[0] * v[0] + a[1] * v[1], a[2] * v[0] + a[3] * v[1]}; }

/// Constant-velocity Kalman filter plus Rauch-Tung-Striebel pass for one coordinate axis.
inline std::vector<double> smooth_axis(const std::vector<double> & z, double dt, const KalmanConfig & cfg)
{
  const std::size_t n = z.size();
  const double r = cfg.measurement_noise_sigma * cfg.measurement_noise_sigma;
  const double q = cfg.process_noise_sigma * cfg.process_noise_sigma;
  const Mat2 f{1.0, dt, 0.0, 1.0};
  const Mat2 qm{q * dt * dt * dt * dt / 4.0, q * dt * dt * dt / 2.0, q * dt * dt * dt / 2.0, q * dt * dt};

  std::vector<Vec2> x_post(n), x_prior(n);
  std::vector<Mat2> p_post(n), p_prior(n);
  // State seeded from the first two measurements, so exact constant-velocity tracks produce
  // zero innovations throughout.
  x_post[0] = {z[0], (z[1] - z[0]) / dt};
  p_post[0] = {cfg.initial_covariance_scale * r, 0.0, 0.0, cfg.initial_covariance_scale * 2.0 * r / (dt * dt)};
  x_prior[0] = x_post[0];
  p_prior[0] = p_post[0];
  for (std::size_t k = 1; k < n; ++k) {
    x_prior[k] = mul(f, x_post[k - 1]);
    Mat2 p = mul(mul(f, p_post[k - 1]), transpose(f));
    for (std::size_t i = 0; i < 4; ++i) {
      p[i] += qm[i];
    }
    p_prior[k] = p;
    const double s = p[0] + r;
    const Vec2 gain{p[0] / s, p[2] / s};
    const double innovation = z[k] - x_prior[k][0];
    x_post[k] = {x_prior[k][0] + gain[0] * innovation, x_prior[k][1] + gain[1] * innovation};
    p_post[k] = {(1.0 - gain[0]) * p[0], (1.0 - gain[0]) * p[1], p[2] - gain[1] * p[0], p[3] - gain[1] * p[1]};
  }

  std::vector<Vec2> x_smooth(x_post);
  for (std::size_t k = n - 1; k-- > 0;) {
    const Mat2 c = mul(mul(p_post[k], transpose(f)), inverse(p_prior[k + 1]));
    const Vec2 diff{x_smooth[k + 1][0] - x_prior[k + 1][0], x_smooth[k + 1][1] - x_prior[k + 1][1]};
    const Vec2 corr = mul(c, diff);
    x_smooth[k] = {x_post[k][0] + corr[0], x_post[k][1] + corr[1]};
  }
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = x_smooth[k][0];
  }
  return out;
}

}  // namespace detail

/// Constant-velocity Kalman filter followed by an RTS backward pass. Frame indices are kept.
inline Trajectory smooth(const Trajectory & traj, const KalmanConfig & cfg = {})
{
  cfg.validate();
  traj.validate(2);
  const double dt = 1.0 / traj.frame_rate_hz;
  std::vector<double> xs, ys;
  for (const auto & f : traj.frames) {
    xs.push_back(f.position.x);
    ys.push_back(f.position.y);
  }
  const auto sx = detail::smooth_axis(xs, dt, cfg);
  const auto sy = detail::smooth_axis(ys, dt, cfg);
  Trajectory out = traj;
  for (std::size_t k = 0; k < out.frames.size(); ++k) {
    out.frames[k].position = {sx[k], sy[k]};
  }
  return out;
}

/// Smooths history and future as one continuous track.
inline AgentRecord smooth_agent(const AgentRecord & agent, const KalmanConfig & cfg = {})
{
  const Trajectory s = smooth(agent.full(), cfg);
  AgentRecord out = agent;
  for (std::size_t k = 0; k < out.history.frames.size(); ++k) {
    out.history.frames[k].position = s.frames[k].position;
  }
  for (std::size_t k = 0; k < out.future.frames.size(); ++k) {
    out.future.frames[k].position = s.frames[out.history.frames.size() + k].position;
  }
  return out;
}

/// Sum of signed heading changes (degrees, counter-clockwise positive) from the current
/// heading through every future displacement. Sub-jitter displacements are skipped.
inline double cumulative_heading_change(const AgentRecord & agent, double still_eps = kStillEpsilon)
{
  Direction2 prev = heading_of(agent.history, agent.current_frame(), still_eps);
  Point2 last = agent.current_position();
  double total = 0.0;
  for (const auto & f : agent.future.frames) {
    const Direction2 d = f.position - last;
    if (d.norm() < still_eps) {
      continue;
    }
    total += rad2deg(std::atan2(cross(prev, d), dot(prev, d)));
    prev = d;
    last = f.position;
  }
  return total;
}

inline bool classify_turning(const AgentRecord & agent, double threshold_deg = 30.0)
{
  return std::abs(cumulative_heading_change(agent)) >= threshold_deg;
}

struct AugmentConfig
{
  double rotation_step{15.0};
  std::size_t rotation_count{24};
  std::size_t turn_upsample_factor{6};
  double turn_threshold{30.0};

  void validate() const
  {
    if (rotation_count < 1 || turn_upsample_factor < 1) {
      throw ConfigError("augmentation factors must be at least 1");
    }
    if (std::abs(rotation_step * static_cast<double>(rotation_count) - 360.0) > 1e-9) {
      throw ConfigError("rotation_step x rotation_count must equal 360 degrees");
    }
  }
};

/// Mean of every agent position and lane center point.
inline Point2 scene_centroid(const Scene & scene)
{
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (const auto & a : scene.agents) {
    for (const auto * t : {&a.history, &a.future}) {
      for (const auto & f : t->frames) {
        sx += f.position.x;
        sy += f.position.y;
        ++n;
      }
    }
  }
  for (const auto & c : scene.lane_chunks) {
    for (const auto & p : c.centers) {
      sx += p.x;
      sy += p.y;
      ++n;
    }
  }
  return n ? Point2{sx / static_cast<double>(n), sy / static_cast<double>(n)} : Point2{};
}

/// Rigid rotation of every position in the scene (agents, lanes, raster placement).
inline Scene rotate_scene(const Scene & scene, const Point2 & center, double theta_deg)
{
  Scene out = scene;
  if (theta_deg == 0.0) {
    return out;
  }
  for (auto & a : out.agents) {
    for (auto * t : {&a.history, &a.future}) {
      for (auto & f : t->frames) {
        f.position = rotate_about(f.position, center, theta_deg);
      }
    }
  }
  for (auto & c : out.lane_chunks) {
    for (auto & p : c.centers) {
      p = rotate_about(p, center, theta_deg);
    }
  }
  if (out.occupancy) {
    out.occupancy->origin = rotate_about(out.occupancy->origin, center, theta_deg);
    out.occupancy->rotation_deg += theta_deg;
  }
  return out;
}

/// Rigid translation of every position in the scene.
inline Scene translate_scene(const Scene & scene, const Direction2 & offset)
{
  Scene out = scene;
  for (auto & a : out.agents) {
    for (auto * t : {&a.history, &a.future}) {
      for (auto & f : t->frames) {
        f.position = f.position + offset;
      }
    }
  }
  for (auto & c : out.lane_chunks) {
    for (auto & p : c.centers) {
      p = p + offset;
    }
  }
  if (out.occupancy) {
    out.occupancy->origin = out.occupancy->origin + offset;
  }
  return out;
}

/// Rotation fan-out about the scene centroid; inside every copy, turning agents appear
/// `turn_upsample_factor` times under distinct ids.
inline std::vector<Scene> augment_scene(const Scene & scene, const AugmentConfig & cfg = {})
{
  cfg.validate();
  Scene upsampled = scene;
  upsampled.agents.clear();
  for (const auto & a : scene.agents) {
    bool turning = false;
    try {
      turning = classify_turning(a, cfg.turn_threshold);
    } catch (const StationaryAgent &) {
      turning = false;
    }
    const std::size_t copies = turning ? cfg.turn_upsample_factor : 1;
    for (std::size_t k = 0; k < copies; ++k) {
      AgentRecord copy = a;
      if (k > 0) {
        copy.agent_id = a.agent_id + "#up" + std::to_string(k);
        copy.history.agent_id = copy.future.agent_id = copy.agent_id;
      }
      upsampled.agents.push_back(std::move(copy));
    }
  }

  const Point2 center = scene_centroid(scene);
  std::vector<Scene> out;
  out.reserve(cfg.rotation_count);
  for (std::size_t k = 0; k < cfg.rotation_count; ++k) {
    const double theta = cfg.rotation_step * static_cast<double>(k);
    Scene rotated = rotate_scene(upsampled, center, theta);
    if (k > 0) {
      rotated.scene_id = scene.scene_id + "@rot" + std::to_string(static_cast<long long>(std::llround(theta)));
    }
    out.push_back(std::move(rotated));
  }
  return out;
}

}  // namespace lanecast::preprocess

#endif  // LANECAST__PREPROCESS_HPP_
