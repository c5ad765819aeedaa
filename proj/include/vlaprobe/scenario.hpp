#pragma once

// Driving scenarios: data model, schema (v1) I/O, validation and agent
// interpolation.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlaprobe/errors.hpp"
#include "vlaprobe/geometry.hpp"

namespace vlaprobe {

inline constexpr int kScenarioSchemaVersion = 1;

struct AgentSample {
  double t = 0.0;
  Pose2D pose;
  double speed = 0.0;
  friend bool operator==(const AgentSample&, const AgentSample&) = default;
};

struct AgentTrack {
  std::string agent_id;
  std::vector<AgentSample> samples;
  double half_length = 0.0;
  double half_width = 0.0;
  // Allows constant-velocity extrapolation outside the sampled time range.
  bool extrapolate = false;
  friend bool operator==(const AgentTrack&, const AgentTrack&) = default;
};

struct LaneSegment {
  Polygon polygon;
  Vec2 direction;
  friend bool operator==(const LaneSegment&, const LaneSegment&) = default;
};

struct TimedPoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  Vec2 position() const { return {x, y}; }
  friend bool operator==(const TimedPoint&, const TimedPoint&) = default;
};

struct EgoState {
  Pose2D pose;
  double speed = 0.0;
  friend bool operator==(const EgoState&, const EgoState&) = default;
};

struct Scenario {
  std::string id;
  double duration = 0.0;
  double sim_dt = 0.0;
  EgoState ego_init;
  std::vector<AgentTrack> agents;
  std::vector<LaneSegment> lanes;
  std::vector<Polygon> drivable_area;
  std::vector<TimedPoint> ground_truth;
  std::string clean_text;
  std::optional<std::string> nav_command;

  const AgentTrack& agent(std::string_view agent_id) const {
    for (const auto& a : agents) {
      if (a.agent_id == agent_id) return a;
    }
    throw DomainError("unknown agent id '" + std::string(agent_id) + "'");
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// ---------------------------------------------------------------------------
// Validation

inline std::vector<std::string> scenario_violations(const Scenario& s) {
  constexpr double kTimeTol = 1e-9;
  std::vector<std::string> v;
  auto fail = [&v](std::string msg) { v.push_back(std::move(msg)); };

  if (s.id.empty()) fail("id: must be non-empty");
  if (!(s.duration > 0.0)) fail("duration: must be > 0");
  if (!(s.sim_dt > 0.0)) fail("sim_dt: must be > 0");
  if (s.clean_text.find_first_not_of(" \t\r\n") == std::string::npos) {
    fail("clean_text: must contain a non-whitespace character");
  }

  const auto& gt = s.ground_truth;
  if (gt.size() < 2) {
    fail("ground_truth: needs at least two samples");
  } else {
    for (std::size_t i = 1; i < gt.size(); ++i) {
      if (!(gt[i].t > gt[i - 1].t)) {
        fail("ground_truth: timestamps not strictly increasing at index " +
             std::to_string(i));
        break;
      }
    }
    if (std::abs(gt.front().t) > kTimeTol) fail("ground_truth: must start at t=0");
    if (std::abs(gt.back().t - s.duration) > kTimeTol) {
      fail("ground_truth: must end at t=duration");
    }
  }

  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const auto& a = s.agents[i];
    const std::string where = "agents[" + std::to_string(i) + "]";
    if (a.agent_id.empty()) fail(where + ".agent_id: must be non-empty");
    for (std::size_t j = 0; j < i; ++j) {
      if (s.agents[j].agent_id == a.agent_id) {
        fail(where + ".agent_id: duplicate '" + a.agent_id + "'");
      }
    }
    if (!(a.half_length > 0.0)) fail(where + ".half_length: must be > 0");
    if (!(a.half_width > 0.0)) fail(where + ".half_width: must be > 0");
    if (a.samples.empty()) {
      fail(where + ".samples: must be non-empty");
      continue;
    }
    for (std::size_t k = 1; k < a.samples.size(); ++k) {
      if (!(a.samples[k].t > a.samples[k - 1].t)) {
        fail(where + ".samples: not strictly time-sorted at index " + std::to_string(k));
        break;
      }
    }
    const bool covers = a.samples.front().t <= kTimeTol &&
                        a.samples.back().t >= s.duration - kTimeTol;
    if (!covers && !a.extrapolate) {
      fail(where + ".samples: must cover [0, duration] unless extrapolate is set");
    }
  }

  for (std::size_t i = 0; i < s.lanes.size(); ++i) {
    const auto& lane = s.lanes[i];
    const std::string where = "lanes[" + std::to_string(i) + "]";
    if (!is_simple_polygon(lane.polygon)) fail(where + ".polygon: not a simple polygon");
    if (std::abs(norm(lane.direction) - 1.0) > 1e-9) {
      fail(where + ".direction: must be a unit vector");
    }
  }
  for (std::size_t i = 0; i < s.drivable_area.size(); ++i) {
    if (!is_simple_polygon(s.drivable_area[i])) {
      fail("drivable_area[" + std::to_string(i) + "]: not a simple polygon");
    }
  }
  return v;
}

inline void validate(const Scenario& s) {
  auto v = scenario_violations(s);
  if (!v.empty()) throw ValidationError(std::move(v));
}

// ---------------------------------------------------------------------------
// Interpolation

struct AgentState {
  Pose2D pose;
  double speed = 0.0;
};

inline AgentState agent_pose_at(const Scenario& s, std::string_view agent_id, double t) {
  constexpr double kTimeTol = 1e-9;
  if (t < -kTimeTol || t > s.duration + kTimeTol) {
    throw DomainError("time " + std::to_string(t) + " outside [0, duration]");
  }
  const AgentTrack& a = s.agent(agent_id);
  const auto& smp = a.samples;

  auto extrapolated = [](const AgentSample& from, double dt) {
    const Vec2 p = from.pose.position() + (dt * from.speed) * from.pose.heading_vector();
    return AgentState{{p.x, p.y, from.pose.heading}, from.speed};
  };
  if (t <= smp.front().t) {
    if (t < smp.front().t - kTimeTol && !a.extrapolate) {
      throw DomainError("agent '" + a.agent_id + "' has no sample before t");
    }
    return extrapolated(smp.front(), t - smp.front().t);
  }
  if (t >= smp.back().t) {
    if (t > smp.back().t + kTimeTol && !a.extrapolate) {
      throw DomainError("agent '" + a.agent_id + "' has no sample after t");
    }
    return extrapolated(smp.back(), t - smp.back().t);
  }
  const auto hi = std::upper_bound(smp.begin(), smp.end(), t,
                                   [](double v, const AgentSample& x) { return v < x.t; });
  const AgentSample& s1 = *hi;
  const AgentSample& s0 = *(hi - 1);
  if (t == s0.t) return {s0.pose, s0.speed};
  const double f = (t - s0.t) / (s1.t - s0.t);
  const double dh = normalize_angle(s1.pose.heading - s0.pose.heading);
  return {{s0.pose.x + f * (s1.pose.x - s0.pose.x), s0.pose.y + f * (s1.pose.y - s0.pose.y),
           normalize_angle(s0.pose.heading + f * dh)},
          s0.speed + f * (s1.speed - s0.speed)};
}

inline BoxCorners oriented_box_at(const Scenario& s, std::string_view agent_id, double t) {
  const AgentTrack& a = s.agent(agent_id);
  return box_corners(agent_pose_at(s, agent_id, t).pose, a.half_length, a.half_width);
}

// Ground-truth ego position at time t (linear interpolation, clamped to the
// sampled range).
inline Vec2 ground_truth_at(const std::vector<TimedPoint>& gt, double t) {
  if (t <= gt.front().t) return gt.front().position();
  if (t >= gt.back().t) return gt.back().position();
  const auto hi = std::upper_bound(gt.begin(), gt.end(), t,
                                   [](double v, const TimedPoint& p) { return v < p.t; });
  const TimedPoint& b = *hi;
  const TimedPoint& a = *(hi - 1);
  const double f = (t - a.t) / (b.t - a.t);
  return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
}

// ---------------------------------------------------------------------------
// Schema v1 (JSON)

namespace detail {

using nlohmann::json;

inline json point_json(Vec2 p) { return json::array({p.x, p.y}); }
inline json polygon_json(const Polygon& poly) {
  json out = json::array();
  for (Vec2 p : poly) out.push_back(point_json(p));
  return out;
}
inline Vec2 point_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("expected [x, y] point");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}
inline Polygon polygon_from(const json& j) {
  Polygon out;
  for (const auto& p : j) out.push_back(point_from(p));
  return out;
}

}  // namespace detail

inline nlohmann::json to_json(const Scenario& s) {
  using nlohmann::json;
  using detail::point_json;
  using detail::polygon_json;
  json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["id"] = s.id;
  j["duration"] = s.duration;
  j["sim_dt"] = s.sim_dt;
  j["ego_init"] = {{"x", s.ego_init.pose.x},
                   {"y", s.ego_init.pose.y},
                   {"heading", s.ego_init.pose.heading},
                   {"speed", s.ego_init.speed}};
  json agents = json::array();
  for (const auto& a : s.agents) {
    json samples = json::array();
    for (const auto& smp : a.samples) {
      samples.push_back({{"t", smp.t},
                         {"x", smp.pose.x},
                         {"y", smp.pose.y},
                         {"heading", smp.pose.heading},
                         {"speed", smp.speed}});
    }
    json ja = {{"agent_id", a.agent_id},
               {"half_length", a.half_length},
               {"half_width", a.half_width},
               {"samples", samples}};
    if (a.extrapolate) ja["extrapolate"] = true;
    agents.push_back(std::move(ja));
  }
  j["agents"] = std::move(agents);
  json lanes = json::array();
  for (const auto& lane : s.lanes) {
    lanes.push_back({{"polygon", polygon_json(lane.polygon)},
                     {"direction", point_json(lane.direction)}});
  }
  j["lanes"] = std::move(lanes);
  json area = json::array();
  for (const auto& poly : s.drivable_area) area.push_back(polygon_json(poly));
  j["drivable_area"] = std::move(area);
  json gt = json::array();
  for (const auto& p : s.ground_truth) gt.push_back({{"t", p.t}, {"x", p.x}, {"y", p.y}});
  j["ground_truth"] = std::move(gt);
  j["clean_text"] = s.clean_text;
  j["nav_command"] = s.nav_command ? json(*s.nav_command) : json(nullptr);
  return j;
}

// Parses without validating; structural errors raise ParseError.
inline Scenario scenario_from_json(const nlohmann::json& j) {
  using detail::point_from;
  using detail::polygon_from;
  try {
    if (!j.is_object()) throw ParseError("scenario document must be an object");
    const int version = j.at("schema_version").get<int>();
    if (version != kScenarioSchemaVersion) {
      throw ParseError("unsupported schema_version " + std::to_string(version));
    }
    Scenario s;
    s.id = j.at("id").get<std::string>();
    s.duration = j.at("duration").get<double>();
    s.sim_dt = j.at("sim_dt").get<double>();
    const auto& e = j.at("ego_init");
    s.ego_init = {{e.at("x").get<double>(), e.at("y").get<double>(),
                   normalize_angle(e.at("heading").get<double>())},
                  e.at("speed").get<double>()};
    for (const auto& ja : j.at("agents")) {
      AgentTrack a;
      a.agent_id = ja.at("agent_id").get<std::string>();
      a.half_length = ja.at("half_length").get<double>();
      a.half_width = ja.at("half_width").get<double>();
      a.extrapolate = ja.value("extrapolate", false);
      for (const auto& js : ja.at("samples")) {
        a.samples.push_back({js.at("t").get<double>(),
                             {js.at("x").get<double>(), js.at("y").get<double>(),
                              normalize_angle(js.at("heading").get<double>())},
                             js.at("speed").get<double>()});
      }
      s.agents.push_back(std::move(a));
    }
    for (const auto& jl : j.at("lanes")) {
      s.lanes.push_back({polygon_from(jl.at("polygon")), point_from(jl.at("direction"))});
    }
    for (const auto& jp : j.at("drivable_area")) s.drivable_area.push_back(polygon_from(jp));
    for (const auto& jg : j.at("ground_truth")) {
      s.ground_truth.push_back(
          {jg.at("t").get<double>(), jg.at("x").get<double>(), jg.at("y").get<double>()});
    }
    s.clean_text = j.at("clean_text").get<std::string>();
    if (j.contains("nav_command") && !j.at("nav_command").is_null()) {
      s.nav_command = j.at("nav_command").get<std::string>();
    }
    return s;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("scenario schema: ") + ex.what());
  }
}

inline Scenario parse_scenario(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ParseError(std::string("malformed scenario document: ") + ex.what());
  }
  Scenario s = scenario_from_json(j);
  validate(s);
  return s;
}

inline std::string serialize_scenario(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

inline void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write scenario file " + path.string());
  out << serialize_scenario(s);
}

}  // namespace vlaprobe
