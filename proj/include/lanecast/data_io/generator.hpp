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

#ifndef LANECAST__DATA_IO__GENERATOR_HPP_
#define LANECAST__DATA_IO__GENERATOR_HPP_

#include "lanecast/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace lanecast::data_io
{

enum class RoadTemplate { straight, curve, t_intersection, crossroads };

inline const char * to_string(RoadTemplate t)
{
  switch (t) {
    case RoadTemplate::straight:
      return "straight";
    case RoadTemplate::curve:
      return "curve";
    case RoadTemplate::t_intersection:
      return "t_intersection";
    default:
      return "crossroads";
  }
}

inline RoadTemplate parse_template(const std::string & s)
{
  if (s == "straight") return RoadTemplate::straight;
  if (s == "curve") return RoadTemplate::curve;
  if (s == "t_intersection" || s == "t-intersection") return RoadTemplate::t_intersection;
  if (s == "crossroads") return RoadTemplate::crossroads;
  throw InvalidTemplate("unknown road template '" + s + "'");
}

struct GeneratorConfig
{
  std::uint64_t seed{42};
  std::size_t n_scenes{100};
  std::vector<RoadTemplate> templates{
    RoadTemplate::straight, RoadTemplate::curve, RoadTemplate::t_intersection, RoadTemplate::crossroads};
  double curve_radius_min{30.0};
  double curve_radius_max{80.0};
  std::size_t lanes_min{1};
  std::size_t lanes_max{3};
  double chunk_length{20.0};
  double speed_min{6.0};
  double speed_max{12.0};
  double max_accel{0.5};
  double noise_sigma{0.1};
  double turn_fraction{0.3};
  double successor_drop_fraction{0.0};
  std::size_t agents_per_scene{3};
  std::size_t history_frames{kHistoryFrames};
  std::size_t horizon_frames{kHorizonFrames};
  double lane_width{3.5};
  double cell_size{1.0};
  bool single_movement_lanes{true};
  bool occupancy{true};
  bool random_pose{true};

  void validate() const
  {
    if (templates.empty()) {
      throw InvalidTemplate("generator needs at least one road template");
    }
    if (chunk_length < 10.0) {
      throw ConfigError("chunk_length must be at least 10 m");
    }
    if (curve_radius_min < 10.0 || curve_radius_max < curve_radius_min) {
      throw ConfigError("curve radius range must satisfy 10 <= min <= max");
    }
    if (lanes_min < 1 || lanes_max > 3 || lanes_min > lanes_max) {
      throw ConfigError("lanes per road must lie in 1..3");
    }
    if (!(speed_min > 0.0) || speed_max < speed_min) {
      throw ConfigError("speed range must be positive and ordered");
    }
    if (turn_fraction < 0.0 || turn_fraction > 1.0 || successor_drop_fraction < 0.0 || successor_drop_fraction > 1.0) {
      throw ConfigError("fractions must lie in [0, 1]");
    }
    if (history_frames < 2 || horizon_frames < 1 || agents_per_scene < 1) {
      throw ConfigError("need history >= 2, horizon >= 1 and at least one agent");
    }
    if (noise_sigma < 0.0 || !(cell_size > 0.0)) {
      throw ConfigError("noise_sigma must be >= 0 and cell_size > 0");
    }
  }
};

namespace detail
{

inline constexpr double kDenseStep = 0.25;
inline constexpr double kArmLength = 120.0;  // multiple of the 5 m center spacing
inline constexpr double kAheadMargin = 95.0;

inline Direction2 left_normal(const Direction2 & d) { return {-d.dy, d.dx}; }

/// Densely sampled centerline built from straight and circular pieces.
class PathBuilder
{
public:
  PathBuilder(const Point2 & start, const Direction2 & heading) : pos_(start), heading_(heading.normalized())
  {
    points_.push_back(start);
  }

  PathBuilder & straight(double length)
  {
    const auto steps = static_cast<std::size_t>(std::ceil(length / kDenseStep));
    const Point2 origin = pos_;
    for (std::size_t k = 1; k <= steps; ++k) {
      const double s = length * static_cast<double>(k) / static_cast<double>(steps);
      points_.push_back(origin + s * heading_);
    }
    pos_ = points_.back();
    return *this;
  }

  /// Circular arc; positive sweep turns left.
  PathBuilder & arc(double radius, double sweep_deg)
  {
    const double sign = sweep_deg >= 0.0 ? 1.0 : -1.0;
    const Point2 center = pos_ + (sign * radius) * left_normal(heading_);
    const double length = radius * deg2rad(std::abs(sweep_deg));
    const auto steps = static_cast<std::size_t>(std::ceil(length / kDenseStep));
    const Point2 origin = pos_;
    for (std::size_t k = 1; k <= steps; ++k) {
      const double th = sweep_deg * static_cast<double>(k) / static_cast<double>(steps);
      points_.push_back(rotate_about(origin, center, th));
    }
    heading_ = rotate(heading_, sweep_deg);
    pos_ = points_.back();
    return *this;
  }

  const std::vector<Point2> & points() const { return points_; }

private:
  Point2 pos_;
  Direction2 heading_;
  std::vector<Point2> points_;
};

inline std::vector<double> cumulative_length(const std::vector<Point2> & line)
{
  std::vector<double> s(line.size(), 0.0);
  for (std::size_t i = 1; i < line.size(); ++i) {
    s[i] = s[i - 1] + distance(line[i - 1], line[i]);
  }
  return s;
}

inline Point2 point_at(const std::vector<Point2> & line, const std::vector<double> & cum, double s)
{
  if (s <= 0.0) {
    return line.front();
  }
  if (s >= cum.back()) {
    return line.back();
  }
  const auto it = std::upper_bound(cum.begin(), cum.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - cum.begin());
  const double t = (s - cum[i - 1]) / (cum[i] - cum[i - 1]);
  return line[i - 1] + t * (line[i] - line[i - 1]);
}

/// Center points every 5 m of arc length from `first`, stopping `tail` short of the end.
inline std::vector<Point2> resample(const std::vector<Point2> & dense, double first, double tail)
{
  const auto cum = cumulative_length(dense);
  std::vector<Point2> out;
  for (double s = first; s <= cum.back() - tail + 1e-6; s += 5.0) {
    out.push_back(point_at(dense, cum, std::min(s, cum.back())));
  }
  return out;
}

struct Segment
{
  std::vector<Point2> dense;
  std::vector<Point2> centers;
  std::vector<std::int64_t> chunk_ids;
  std::vector<std::size_t> next;
  int turn{0};  // 0 through, +1 left, -1 right
};

struct RoadNetwork
{
  std::vector<Segment> segments;
  // Segment chains agents may drive; each entry is a list of segment indices.
  std::vector<std::vector<std::size_t>> routes;
};

inline void add_two_way_road(
  RoadNetwork & net, const Point2 & start, const Direction2 & heading, std::size_t lanes, double width,
  const std::vector<std::pair<double, double>> & pieces)  // (length or radius, sweep); sweep 0 = straight
{
  const Direction2 nl = left_normal(heading.normalized());
  for (int dir = 0; dir < 2; ++dir) {
    for (std::size_t i = 0; i < lanes; ++i) {
      const double offset = (dir == 0 ? -1.0 : 1.0) * (static_cast<double>(i) + 0.5) * width;
      PathBuilder pb(start + offset * nl, heading);
      for (const auto & [a, sweep] : pieces) {
        if (sweep == 0.0) {
          pb.straight(a);
        } else {
          // Parallel arc: inside lanes use a tighter radius.
          const double r = a - offset * (sweep > 0.0 ? 1.0 : -1.0);
          pb.arc(r, sweep);
        }
      }
      Segment seg;
      seg.dense = pb.points();
      if (dir == 1) {
        std::reverse(seg.dense.begin(), seg.dense.end());
      }
      seg.centers = resample(seg.dense, 0.0, 0.0);
      net.routes.push_back({net.segments.size()});
      net.segments.push_back(std::move(seg));
    }
  }
}

/// Approach lanes feed straight/right/left connectors. With `single_movement`, each approach
/// lane feeds exactly one connector: the rightmost turns right, the leftmost turns left and
/// the rest go straight, falling back to whatever movement the junction offers.
inline RoadNetwork build_junction(
  const std::vector<Direction2> & arms, std::size_t lanes, double width, bool single_movement, std::mt19937_64 & rng)
{
  RoadNetwork net;
  const double h = static_cast<double>(lanes) * width + 10.0;
  std::vector<std::vector<std::size_t>> incoming(arms.size()), outgoing(arms.size());
  for (std::size_t a = 0; a < arms.size(); ++a) {
    const Direction2 u = arms[a];
    const Direction2 nl = left_normal(u);
    for (std::size_t i = 0; i < lanes; ++i) {
      const double o = (static_cast<double>(i) + 0.5) * width;
      {
        Segment out;
        out.dense = PathBuilder(Point2{} + h * u + (-o) * nl, u).straight(kArmLength).points();
        out.centers = resample(out.dense, 0.0, 0.0);
        outgoing[a].push_back(net.segments.size());
        net.segments.push_back(std::move(out));
      }
      {
        Segment in;
        in.dense = PathBuilder(Point2{} + (h + kArmLength) * u + o * nl, -1.0 * u).straight(kArmLength).points();
        in.centers = resample(in.dense, 0.0, 0.0);
        incoming[a].push_back(net.segments.size());
        net.segments.push_back(std::move(in));
      }
    }
  }
  auto find_arm = [&](const Direction2 & u) -> std::optional<std::size_t> {
    for (std::size_t a = 0; a < arms.size(); ++a) {
      if (distance(Point2{} + arms[a], Point2{} + u) < 1e-9) {
        return a;
      }
    }
    return std::nullopt;
  };
  for (std::size_t a = 0; a < arms.size(); ++a) {
    const Direction2 d = -1.0 * arms[a];
    for (std::size_t i = 0; i < lanes; ++i) {
      const double o = (static_cast<double>(i) + 0.5) * width;
      const std::size_t in_idx = incoming[a][i];
      const Point2 p0 = net.segments[in_idx].dense.back();
      struct Option
      {
        Direction2 target;
        int turn;
      };
      std::vector<Option> options{{d, 0}};
      if (i == 0) {
        options.push_back({{d.dy, -d.dx}, -1});
      }
      if (i + 1 == lanes) {
        options.push_back({left_normal(d), +1});
      }
      std::erase_if(options, [&](const Option & opt) { return !find_arm(opt.target); });
      if (single_movement && options.size() > 1) {
        const int wanted = lanes == 1 ? 2 : (i == 0 ? -1 : (i + 1 == lanes ? +1 : 0));
        const auto it = std::find_if(options.begin(), options.end(), [&](const Option & o) { return o.turn == wanted; });
        Option keep = options.front();
        if (it != options.end()) {
          keep = *it;
        } else {
          std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
          keep = options[pick(rng)];
        }
        options = {keep};
      }
      for (const auto & opt : options) {
        const auto b = find_arm(opt.target);
        Segment conn;
        conn.turn = opt.turn;
        PathBuilder pb(p0, d);
        if (opt.turn == 0) {
          pb.straight(2.0 * h);
        } else if (opt.turn < 0) {
          pb.arc(h - o, -90.0);
        } else {
          pb.arc(h + o, 90.0);
        }
        conn.dense = pb.points();
        conn.centers = resample(conn.dense, 5.0, 2.5);
        const std::size_t out_idx = outgoing[*b][i];
        conn.next.push_back(out_idx);
        const std::size_t c_idx = net.segments.size();
        net.segments.push_back(std::move(conn));
        net.segments[in_idx].next.push_back(c_idx);
        net.routes.push_back({in_idx, c_idx, out_idx});
      }
    }
  }
  return net;
}

}  // namespace detail

/// Builds synthetic scenes: lane graphs cut into chunks, agents driving along lanes.
class SceneGenerator
{
public:
  explicit SceneGenerator(GeneratorConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  std::vector<Scene> generate() const
  {
    std::vector<Scene> scenes;
    scenes.reserve(cfg_.n_scenes);
    for (std::size_t i = 0; i < cfg_.n_scenes; ++i) {
      scenes.push_back(generate_one(i));
    }
    return scenes;
  }

  Scene generate_one(std::size_t index) const
  {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                      static_cast<std::uint32_t>(index)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> pick_template(0, cfg_.templates.size() - 1);
    const RoadTemplate tmpl = cfg_.templates[pick_template(rng)];
    std::uniform_int_distribution<std::size_t> pick_lanes(cfg_.lanes_min, cfg_.lanes_max);
    const std::size_t lanes = pick_lanes(rng);
    const double w = cfg_.lane_width;

    detail::RoadNetwork net;
    switch (tmpl) {
      case RoadTemplate::straight:
        detail::add_two_way_road(net, {-150.0, 0.0}, {1.0, 0.0}, lanes, w, {{300.0, 0.0}});
        break;
      case RoadTemplate::curve: {
        const double min_r = std::max(cfg_.curve_radius_min, 10.0 + static_cast<double>(lanes) * w);
        std::uniform_real_distribution<double> radius(min_r, std::max(min_r, cfg_.curve_radius_max));
        std::uniform_real_distribution<double> sweep(45.0, 110.0);
        std::bernoulli_distribution left(0.5);
        const double r = radius(rng);
        const double s = sweep(rng) * (left(rng) ? 1.0 : -1.0);
        detail::add_two_way_road(net, {-100.0, 0.0}, {1.0, 0.0}, lanes, w, {{100.0, 0.0}, {r, s}, {140.0, 0.0}});
        break;
      }
      case RoadTemplate::t_intersection:
        net = detail::build_junction({{-1.0, 0.0}, {1.0, 0.0}, {0.0, -1.0}}, lanes, w, cfg_.single_movement_lanes, rng);
        break;
      case RoadTemplate::crossroads:
        net = detail::build_junction({{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}}, lanes, w, cfg_.single_movement_lanes, rng);
        break;
    }

    Scene scene;
    char id[32];
    std::snprintf(id, sizeof(id), "scene_%05zu", index);
    scene.scene_id = id;
    chunk_network(net, scene, rng);
    place_agents(net, scene, rng, tmpl);
    if (cfg_.occupancy) {
      scene.occupancy = rasterize(net);
    }
    if (cfg_.random_pose) {
      std::uniform_real_distribution<double> angle(0.0, 360.0);
      std::uniform_real_distribution<double> shift(-300.0, 300.0);
      apply_pose(scene, angle(rng), {shift(rng), shift(rng)});
    }
    return scene;
  }

  const GeneratorConfig & config() const { return cfg_; }

private:
  void chunk_network(detail::RoadNetwork & net, Scene & scene, std::mt19937_64 & rng) const
  {
    const auto per_chunk = static_cast<std::size_t>(std::llround(cfg_.chunk_length / 5.0)) + 1;
    std::int64_t next_id = 1;
    std::vector<std::vector<std::size_t>> chunk_slots(net.segments.size());
    for (std::size_t s = 0; s < net.segments.size(); ++s) {
      auto & seg = net.segments[s];
      const auto & c = seg.centers;
      std::size_t begin = 0;
      while (begin < c.size()) {
        std::size_t end = std::min(c.size(), begin + per_chunk);
        if (c.size() - end == 1) {
          --end;  // never leave a single-point tail chunk
        }
        LaneChunk chunk;
        chunk.chunk_id = next_id++;
        chunk.centers.assign(c.begin() + static_cast<std::ptrdiff_t>(begin), c.begin() + static_cast<std::ptrdiff_t>(end));
        seg.chunk_ids.push_back(chunk.chunk_id);
        chunk_slots[s].push_back(scene.lane_chunks.size());
        scene.lane_chunks.push_back(std::move(chunk));
        begin = end;
      }
    }
    std::bernoulli_distribution drop(cfg_.successor_drop_fraction);
    auto link = [&](std::size_t from_slot, std::int64_t to_id) {
      if (!drop(rng)) {
        scene.lane_chunks[from_slot].successor_ids.push_back(to_id);
      }
    };
    for (std::size_t s = 0; s < net.segments.size(); ++s) {
      const auto & slots = chunk_slots[s];
      for (std::size_t k = 0; k + 1 < slots.size(); ++k) {
        link(slots[k], scene.lane_chunks[slots[k + 1]].chunk_id);
      }
      for (std::size_t n : net.segments[s].next) {
        link(slots.back(), net.segments[n].chunk_ids.front());
      }
    }
  }

  void place_agents(const detail::RoadNetwork & net, Scene & scene, std::mt19937_64 & rng, RoadTemplate tmpl) const
  {
    const double dt = 1.0 / kFrameRateHz;
    const auto hist = static_cast<double>(cfg_.history_frames - 1);
    const auto fut = static_cast<double>(cfg_.horizon_frames);
    const bool junction = tmpl == RoadTemplate::t_intersection || tmpl == RoadTemplate::crossroads;
    std::vector<std::size_t> through_routes, turning_routes;
    for (std::size_t r = 0; r < net.routes.size(); ++r) {
      const auto & route = net.routes[r];
      const bool turns = route.size() == 3 && net.segments[route[1]].turn != 0;
      (turns ? turning_routes : through_routes).push_back(r);
    }
    std::bernoulli_distribution want_turn(cfg_.turn_fraction);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, cfg_.noise_sigma);

    for (std::size_t a = 0; a < cfg_.agents_per_scene; ++a) {
      const bool turning = junction && !turning_routes.empty() && (through_routes.empty() || want_turn(rng));
      const auto & pool = turning ? turning_routes : through_routes;
      const auto & route = net.routes[pool[static_cast<std::size_t>(unit(rng) * static_cast<double>(pool.size())) % pool.size()]];

      std::vector<Point2> dense;
      std::vector<double> seg_start;
      for (std::size_t s : route) {
        const auto & d = net.segments[s].dense;
        seg_start.push_back(dense.empty() ? 0.0 : detail::cumulative_length(dense).back());
        dense.insert(dense.end(), d.begin() + (dense.empty() ? 0 : 1), d.end());
      }
      const auto cum = detail::cumulative_length(dense);
      const double total = cum.back();

      double speed = cfg_.speed_min + unit(rng) * (cfg_.speed_max - cfg_.speed_min);
      double accel = turning ? 0.0 : (2.0 * unit(rng) - 1.0) * cfg_.max_accel;
      double lo = 0.0, hi = 0.0;
      if (turning) {
        const double turn_begin = seg_start[1];
        const double turn_end = seg_start[2];
        speed = std::max(speed, (turn_end - turn_begin + 5.0) / (fut * dt) + 0.5);
        lo = std::max(hist * dt * speed + 1.0, turn_end + 5.0 - fut * dt * speed);
        hi = turn_begin;
      } else {
        // Keep the speed positive over the whole window.
        accel = std::max(accel, -(speed - 1.0) / (fut * dt));
        lo = hist * dt * speed + hist * hist * dt * dt * std::abs(accel) + 1.0;
        hi = total - std::max(fut * dt * speed + 0.5 * accel * fut * fut * dt * dt + 1.0, detail::kAheadMargin);
      }
      const double s_now = lo + unit(rng) * std::max(0.0, hi - lo);

      Trajectory full;
      full.agent_id = "agent_" + std::to_string(a);
      const auto n_frames = cfg_.history_frames + cfg_.horizon_frames;
      for (std::size_t k = 0; k < n_frames; ++k) {
        const double t = (static_cast<double>(k) - hist) * dt;
        const double s = s_now + speed * t + 0.5 * accel * t * t;
        Point2 p = detail::point_at(dense, cum, s);
        p.x += cfg_.noise_sigma > 0.0 ? noise(rng) : 0.0;
        p.y += cfg_.noise_sigma > 0.0 ? noise(rng) : 0.0;
        full.frames.push_back({static_cast<std::int64_t>(k), p});
      }
      AgentRecord agent = make_agent(full, cfg_.history_frames - 1, cfg_.horizon_frames);
      for (std::size_t s : route) {
        const auto & ids = net.segments[s].chunk_ids;
        agent.route.insert(agent.route.end(), ids.begin(), ids.end());
      }
      scene.agents.push_back(std::move(agent));
    }
  }

  OccupancyRaster rasterize(const detail::RoadNetwork & net) const
  {
    double minx = 1e300, miny = 1e300, maxx = -1e300, maxy = -1e300;
    for (const auto & seg : net.segments) {
      for (const auto & p : seg.dense) {
        minx = std::min(minx, p.x);
        miny = std::min(miny, p.y);
        maxx = std::max(maxx, p.x);
        maxy = std::max(maxy, p.y);
      }
    }
    const double pad = 10.0;
    OccupancyRaster r;
    r.cell_size = cfg_.cell_size;
    r.origin = {minx - pad, miny - pad};
    r.width = static_cast<std::size_t>(std::ceil((maxx - minx + 2 * pad) / r.cell_size));
    r.height = static_cast<std::size_t>(std::ceil((maxy - miny + 2 * pad) / r.cell_size));
    r.grid.assign(r.width * r.height, 0);
    const double half = 0.5 * cfg_.lane_width;
    const auto reach = static_cast<long>(std::ceil(half / r.cell_size)) + 1;
    for (const auto & seg : net.segments) {
      for (const auto & p : seg.dense) {
        const auto cc = static_cast<long>((p.x - r.origin.x) / r.cell_size);
        const auto cr = static_cast<long>((p.y - r.origin.y) / r.cell_size);
        for (long row = cr - reach; row <= cr + reach; ++row) {
          for (long col = cc - reach; col <= cc + reach; ++col) {
            if (row < 0 || col < 0 || row >= static_cast<long>(r.height) || col >= static_cast<long>(r.width)) {
              continue;
            }
            const Point2 center{
              r.origin.x + (static_cast<double>(col) + 0.5) * r.cell_size,
              r.origin.y + (static_cast<double>(row) + 0.5) * r.cell_size};
            if (distance(center, p) <= half) {
              r.grid[static_cast<std::size_t>(row) * r.width + static_cast<std::size_t>(col)] = 1;
            }
          }
        }
      }
    }
    return r;
  }

  static void apply_pose(Scene & scene, double theta_deg, const Direction2 & shift)
  {
    auto tf = [&](const Point2 & p) { return rotate_about(p, {0.0, 0.0}, theta_deg) + shift; };
    for (auto & a : scene.agents) {
      for (auto * t : {&a.history, &a.future}) {
        for (auto & f : t->frames) {
          f.position = tf(f.position);
        }
      }
    }
    for (auto & c : scene.lane_chunks) {
      for (auto & p : c.centers) {
        p = tf(p);
      }
    }
    if (scene.occupancy) {
      scene.occupancy->origin = tf(scene.occupancy->origin);
      scene.occupancy->rotation_deg = theta_deg;
    }
  }

  GeneratorConfig cfg_;
};

inline std::vector<Scene> generate(const GeneratorConfig & cfg) { return SceneGenerator(cfg).generate(); }

}  // namespace lanecast::data_io

#endif  // LANECAST__DATA_IO__GENERATOR_HPP_
