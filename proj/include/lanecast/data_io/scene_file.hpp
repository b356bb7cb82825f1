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

#ifndef LANECAST__DATA_IO__SCENE_FILE_HPP_
#define LANECAST__DATA_IO__SCENE_FILE_HPP_

#include "lanecast/core.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

namespace lanecast::data_io
{

inline constexpr int kSceneSchemaVersion = 1;

namespace detail
{

using nlohmann::json;

inline const json & require(const json & obj, const char * key, const std::string & where)
{
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError(where + ": missing required key \"" + key + "\"");
  }
  return obj.at(key);
}

inline double number(const json & v, const std::string & where)
{
  if (!v.is_number()) {
    throw ParseError(where + ": expected a number");
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) {
    throw ParseError(where + ": non-finite number");
  }
  return d;
}

inline Point2 point(const json & v, const std::string & where)
{
  if (!v.is_array() || v.size() != 2) {
    throw ParseError(where + ": expected [x, y]");
  }
  return {number(v[0], where), number(v[1], where)};
}

inline json to_json(const Point2 & p) { return json::array({p.x, p.y}); }

inline SplitTag parse_split(const std::string & s, const std::string & where)
{
  if (s == "train") return SplitTag::train;
  if (s == "val") return SplitTag::val;
  if (s == "test") return SplitTag::test;
  if (s == "unassigned") return SplitTag::unassigned;
  throw ParseError(where + ": unknown split \"" + s + "\"");
}

}  // namespace detail

inline nlohmann::json scene_to_json(const Scene & scene)
{
  using nlohmann::json;
  json doc;
  doc["version"] = kSceneSchemaVersion;
  doc["scene_id"] = scene.scene_id;
  doc["split"] = to_string(scene.split_tag);
  json agents = json::array();
  for (const auto & a : scene.agents) {
    json ja;
    ja["id"] = a.agent_id;
    ja["current_frame"] = a.current_frame();
    json frames = json::array();
    for (const auto * t : {&a.history, &a.future}) {
      for (const auto & f : t->frames) {
        frames.push_back(json::array({f.index, f.position.x, f.position.y}));
      }
    }
    ja["frames"] = std::move(frames);
    if (!a.route.empty()) {
      ja["route"] = a.route;
    }
    agents.push_back(std::move(ja));
  }
  doc["agents"] = std::move(agents);
  json chunks = json::array();
  for (const auto & c : scene.lane_chunks) {
    json jc;
    jc["id"] = c.chunk_id;
    json centers = json::array();
    for (const auto & p : c.centers) {
      centers.push_back(detail::to_json(p));
    }
    jc["centers"] = std::move(centers);
    jc["successors"] = c.successor_ids;
    chunks.push_back(std::move(jc));
  }
  doc["lane_chunks"] = std::move(chunks);
  if (scene.occupancy) {
    const auto & r = *scene.occupancy;
    json occ;
    occ["origin"] = detail::to_json(r.origin);
    occ["cell_size"] = r.cell_size;
    occ["rotation_deg"] = r.rotation_deg;
    json rows = json::array();
    for (std::size_t row = 0; row < r.height; ++row) {
      std::string bits(r.width, '0');
      for (std::size_t col = 0; col < r.width; ++col) {
        if (r.at(row, col)) {
          bits[col] = '1';
        }
      }
      rows.push_back(std::move(bits));
    }
    occ["rows"] = std::move(rows);
    doc["occupancy"] = std::move(occ);
  }
  return doc;
}

inline Scene scene_from_json(const nlohmann::json & doc, std::size_t horizon_frames = kHorizonFrames)
{
  using detail::require;
  if (!doc.is_object()) {
    throw ParseError("scene document must be a JSON object");
  }
  const int version = doc.contains("version") ? doc.at("version").get<int>() : kSceneSchemaVersion;
  if (version != kSceneSchemaVersion) {
    throw SchemaVersionMismatch(
      "scene schema version " + std::to_string(version) + ", expected " + std::to_string(kSceneSchemaVersion));
  }
  Scene scene;
  const auto & id = require(doc, "scene_id", "scene");
  if (!id.is_string()) {
    throw ParseError("scene: \"scene_id\" must be a string");
  }
  scene.scene_id = id.get<std::string>();
  const std::string where = "scene '" + scene.scene_id + "'";
  if (doc.contains("split")) {
    scene.split_tag = detail::parse_split(doc.at("split").get<std::string>(), where);
  }

  const auto & agents = require(doc, "agents", where);
  if (!agents.is_array()) {
    throw ParseError(where + ": \"agents\" must be an array");
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string aw = where + " agents[" + std::to_string(i) + "]";
    const auto & ja = agents[i];
    Trajectory full;
    full.agent_id = require(ja, "id", aw).get<std::string>();
    const auto & frames = require(ja, "frames", aw);
    for (std::size_t k = 0; k < frames.size(); ++k) {
      const auto & f = frames[k];
      const std::string fw = aw + " frames[" + std::to_string(k) + "]";
      if (!f.is_array() || f.size() != 3 || !f[0].is_number_integer()) {
        throw ParseError(fw + ": expected [t, x, y]");
      }
      full.frames.push_back({f[0].get<std::int64_t>(), {detail::number(f[1], fw), detail::number(f[2], fw)}});
    }
    try {
      full.validate(2);
    } catch (const InvalidTrajectory & e) {
      throw ParseError(aw + ": " + e.what());
    }
    const auto current = require(ja, "current_frame", aw).get<std::int64_t>();
    const auto off = full.offset_of(current);
    if (!off || *off < 1) {
      throw ParseError(aw + ": current_frame must leave at least two history frames");
    }
    AgentRecord agent = make_agent(full, *off, horizon_frames);
    if (ja.contains("route")) {
      agent.route = ja.at("route").get<std::vector<std::int64_t>>();
    }
    scene.agents.push_back(std::move(agent));
  }

  const auto & chunks = require(doc, "lane_chunks", where);
  if (!chunks.is_array()) {
    throw ParseError(where + ": \"lane_chunks\" must be an array");
  }
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const std::string cw = where + " lane_chunks[" + std::to_string(i) + "]";
    const auto & jc = chunks[i];
    LaneChunk chunk;
    chunk.chunk_id = require(jc, "id", cw).get<std::int64_t>();
    const auto & centers = require(jc, "centers", cw);
    for (std::size_t k = 0; k < centers.size(); ++k) {
      chunk.centers.push_back(detail::point(centers[k], cw + " centers[" + std::to_string(k) + "]"));
    }
    if (jc.contains("successors")) {
      chunk.successor_ids = jc.at("successors").get<std::vector<std::int64_t>>();
    }
    try {
      chunk.validate();
    } catch (const InvalidLaneChunk & e) {
      throw ParseError(cw + ": " + e.what());
    }
    scene.lane_chunks.push_back(std::move(chunk));
  }

  if (doc.contains("occupancy") && !doc.at("occupancy").is_null()) {
    const std::string ow = where + " occupancy";
    const auto & jo = doc.at("occupancy");
    OccupancyRaster r;
    r.origin = detail::point(require(jo, "origin", ow), ow + " origin");
    r.cell_size = detail::number(require(jo, "cell_size", ow), ow + " cell_size");
    if (jo.contains("rotation_deg")) {
      r.rotation_deg = detail::number(jo.at("rotation_deg"), ow + " rotation_deg");
    }
    const auto & rows = require(jo, "rows", ow);
    r.height = rows.size();
    r.width = r.height ? rows[0].get<std::string>().size() : 0;
    for (std::size_t row = 0; row < r.height; ++row) {
      const auto bits = rows[row].get<std::string>();
      if (bits.size() != r.width) {
        throw ParseError(ow + " rows[" + std::to_string(row) + "]: ragged row");
      }
      for (char ch : bits) {
        if (ch != '0' && ch != '1') {
          throw ParseError(ow + " rows[" + std::to_string(row) + "]: expected bit characters");
        }
        r.grid.push_back(ch == '1' ? 1 : 0);
      }
    }
    r.validate();
    scene.occupancy = std::move(r);
  }
  return scene;
}

inline std::string scene_to_string(const Scene & scene) { return scene_to_json(scene).dump(1) + "\n"; }

inline Scene scene_from_string(const std::string & text, const std::string & origin = "<memory>")
{
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error & e) {
    // Convert the byte offset to a line number for the message.
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ParseError(origin + ":" + std::to_string(line) + ": " + e.what());
  }
  try {
    return scene_from_json(doc);
  } catch (const nlohmann::json::exception & e) {
    throw ParseError(origin + ": " + e.what());
  }
}

inline void save_scene(const Scene & scene, const std::string & path)
{
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    throw ParseError("cannot write scene file '" + path + "'");
  }
  os << scene_to_string(scene);
}

inline Scene load_scene(const std::string & path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw ParseError("cannot open scene file '" + path + "'");
  }
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return scene_from_string(ss.str(), path);
  } catch (const ParseError &) {
    throw;
  } catch (const SchemaVersionMismatch &) {
    throw;
  } catch (const Error & e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace lanecast::data_io

#endif  // LANECAST__DATA_IO__SCENE_FILE_HPP_
