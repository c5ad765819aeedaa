#pragma once

// Model boundary: request/response types, the abstract model interface and
// the v1 wire codec shared by the HTTP and line-delimited stdio transports.
//
// Request (v1):
//   {"version":1, "scene_ref":{"scenario_id":s,"t":x},
//    "ego_state":{"x":..,"y":..,"heading":..,"speed":..},
//    "instruction":s, "nav":s (omitted when absent), "frames":[paths] (optional),
//    "conformance":true (optional; asks the server to echo the request)}
// Response (v1):
//   {"version":1,
//    "reasoning":{"object","relation","implication","planning","full_text","token_count"},
//    "trajectory":{"modes":[[{"t","x","y"},...],...]},
//    "model_token_count":n (optional), "degenerate":bool (optional),
//    "echo":{request} (present when conformance was requested)}
// Error response: {"version":1, "error":{"code":s, "message":s}}

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vlaprobe/errors.hpp"
#include "vlaprobe/reasoning_eval.hpp"
#include "vlaprobe/scenario.hpp"
#include "vlaprobe/trajectory_eval.hpp"

namespace vlaprobe {

inline constexpr int kProtocolVersion = 1;

struct SceneRef {
  std::string scenario_id;
  double t = 0.0;
  friend bool operator==(const SceneRef&, const SceneRef&) = default;
};

struct ModelRequest {
  SceneRef scene_ref;
  EgoState ego_state;
  std::string instruction;
  std::optional<std::string> nav;
  std::vector<std::string> frames;  // reserved, no harness-side meaning
  friend bool operator==(const ModelRequest&, const ModelRequest&) = default;
};

struct ModelResponse {
  ReasoningRecord reasoning;
  TrajectorySet trajectory;
  std::optional<std::size_t> model_token_count;
  bool degenerate = false;  // trajectory may be empty
  friend bool operator==(const ModelResponse&, const ModelResponse&) = default;
};

// Implementations must be safe to call concurrently.
class Model {
 public:
  virtual ~Model() = default;
  virtual ModelResponse infer(const ModelRequest& request) const = 0;
  virtual std::string id() const = 0;
};

inline void check_request(const ModelRequest& r) {
  if (r.instruction.find_first_not_of(" \t\r\n\f\v") == std::string::npos) {
    throw ProtocolError("instruction", "must be non-empty");
  }
  if (!std::isfinite(r.scene_ref.t) || r.scene_ref.t < 0.0) {
    throw ProtocolError("scene_ref.t", "must be a finite non-negative time");
  }
}

// ---------------------------------------------------------------------------
// JSON codec

namespace wire {

using nlohmann::json;

inline const json& member(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ProtocolError(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ProtocolError(path.empty() ? key : path + "." + key, "missing");
  }
  return *it;
}

inline std::string join_path(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

inline double num_field(const json& obj, const char* key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_number()) throw ProtocolError(join_path(path, key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ProtocolError(join_path(path, key), "non-finite number");
  return d;
}

inline std::string str_field(const json& obj, const char* key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_string()) throw ProtocolError(join_path(path, key), "expected a string");
  return v.get<std::string>();
}

inline std::size_t count_field(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw ProtocolError(path, "expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

inline void check_version(const json& j) {
  const json& v = member(j, "version", "");
  if (!v.is_number_integer() || v.get<int>() != kProtocolVersion) {
    throw ProtocolError("version", "unsupported protocol version (expected 1)");
  }
}

}  // namespace wire

inline nlohmann::json to_json(const ModelRequest& r, bool conformance = false) {
  nlohmann::json j;
  j["version"] = kProtocolVersion;
  j["scene_ref"] = {{"scenario_id", r.scene_ref.scenario_id}, {"t", r.scene_ref.t}};
  j["ego_state"] = {{"x", r.ego_state.pose.x},
                    {"y", r.ego_state.pose.y},
                    {"heading", r.ego_state.pose.heading},
                    {"speed", r.ego_state.speed}};
  j["instruction"] = r.instruction;
  if (r.nav) j["nav"] = *r.nav;
  if (!r.frames.empty()) j["frames"] = r.frames;
  if (conformance) j["conformance"] = true;
  return j;
}

inline ModelRequest request_from_json(const nlohmann::json& j) {
  using namespace wire;
  if (!j.is_object()) throw ProtocolError("request", "expected an object");
  check_version(j);
  ModelRequest r;
  const json& scene = member(j, "scene_ref", "");
  r.scene_ref.scenario_id = str_field(scene, "scenario_id", "scene_ref");
  r.scene_ref.t = num_field(scene, "t", "scene_ref");
  const json& ego = member(j, "ego_state", "");
  r.ego_state.pose.x = num_field(ego, "x", "ego_state");
  r.ego_state.pose.y = num_field(ego, "y", "ego_state");
  r.ego_state.pose.heading = num_field(ego, "heading", "ego_state");
  r.ego_state.speed = num_field(ego, "speed", "ego_state");
  r.instruction = str_field(j, "instruction", "");
  if (const auto it = j.find("nav"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw ProtocolError("nav", "expected a string");
    r.nav = it->get<std::string>();
  }
  if (const auto it = j.find("frames"); it != j.end()) {
    if (!it->is_array()) throw ProtocolError("frames", "expected an array of paths");
    for (const auto& f : *it) {
      if (!f.is_string()) throw ProtocolError("frames", "expected an array of paths");
      r.frames.push_back(f.get<std::string>());
    }
  }
  check_request(r);
  return r;
}

inline bool conformance_requested(const nlohmann::json& request) {
  const auto it = request.find("conformance");
  return it != request.end() && it->is_boolean() && it->get<bool>();
}

inline nlohmann::json to_json(const ReasoningRecord& r) {
  return {{"object", r.object},           {"relation", r.relation},
          {"implication", r.implication}, {"planning", r.planning},
          {"full_text", r.full_text},     {"token_count", r.token_count}};
}

inline nlohmann::json to_json(const TrajectorySet& set) {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& mode : set.modes) {
    nlohmann::json m = nlohmann::json::array();
    for (const auto& p : mode) m.push_back({{"t", p.t}, {"x", p.x}, {"y", p.y}});
    modes.push_back(std::move(m));
  }
  return {{"modes", std::move(modes)}};
}

inline nlohmann::json to_json(const ModelResponse& r) {
  nlohmann::json j;
  j["version"] = kProtocolVersion;
  j["reasoning"] = to_json(r.reasoning);
  j["trajectory"] = to_json(r.trajectory);
  if (r.model_token_count) j["model_token_count"] = *r.model_token_count;
  if (r.degenerate) j["degenerate"] = true;
  return j;
}

inline nlohmann::json error_json(std::string_view code, std::string_view message) {
  return {{"version", kProtocolVersion}, {"error", {{"code", code}, {"message", message}}}};
}

inline ReasoningRecord reasoning_from_json(const nlohmann::json& j) {
  using namespace wire;
  ReasoningRecord r;
  r.object = str_field(j, "object", "reasoning");
  r.relation = str_field(j, "relation", "reasoning");
  r.implication = str_field(j, "implication", "reasoning");
  r.planning = str_field(j, "planning", "reasoning");
  r.full_text = str_field(j, "full_text", "reasoning");
  r.token_count = count_field(member(j, "token_count", "reasoning"), "reasoning.token_count");
  return r;
}

inline TrajectorySet trajectory_from_json(const nlohmann::json& j) {
  using namespace wire;
  const json& modes = member(j, "modes", "trajectory");
  if (!modes.is_array()) throw ProtocolError("trajectory.modes", "expected an array");
  TrajectorySet set;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const std::string path = "trajectory.modes[" + std::to_string(m) + "]";
    if (!modes[m].is_array()) throw ProtocolError(path, "expected an array of waypoints");
    Trajectory traj;
    for (std::size_t i = 0; i < modes[m].size(); ++i) {
      const std::string wp = path + "[" + std::to_string(i) + "]";
      const json& p = modes[m][i];
      traj.push_back({num_field(p, "t", wp), num_field(p, "x", wp), num_field(p, "y", wp)});
    }
    set.modes.push_back(std::move(traj));
  }
  return set;
}

// Decodes and validates a response. A server-side error document becomes a
// ProtocolError on field "error".
inline ModelResponse response_from_json(const nlohmann::json& j) {
  using namespace wire;
  if (!j.is_object()) throw ProtocolError("response", "expected an object");
  if (const auto it = j.find("error"); it != j.end()) {
    const std::string msg =
        it->is_object() && it->contains("message") && (*it)["message"].is_string()
            ? (*it)["message"].get<std::string>()
            : it->dump();
    throw ProtocolError("error", "server reported: " + msg);
  }
  check_version(j);
  ModelResponse r;
  if (const auto it = j.find("degenerate"); it != j.end()) {
    if (!it->is_boolean()) throw ProtocolError("degenerate", "expected a boolean");
    r.degenerate = it->get<bool>();
  }
  r.reasoning = reasoning_from_json(member(j, "reasoning", ""));
  r.trajectory = trajectory_from_json(member(j, "trajectory", ""));
  if (const auto it = j.find("model_token_count"); it != j.end() && !it->is_null()) {
    r.model_token_count = count_field(*it, "model_token_count");
  }

  const bool empty_text = r.reasoning.full_text.empty();
  if (r.model_token_count) {
    r.reasoning.token_count = *r.model_token_count;
  } else if (r.reasoning.token_count != token_count(r.reasoning.full_text)) {
    throw ProtocolError("reasoning.token_count",
                        "does not match tokenizer " + std::string(kTokenizerVersion) +
                            " (send model_token_count to override)");
  }
  if (empty_text && r.reasoning.token_count != 0 && !r.model_token_count) {
    throw ProtocolError("reasoning.token_count", "must be 0 for empty reasoning");
  }

  if (r.degenerate && r.trajectory.modes.empty()) return r;
  const auto violations = trajectory_set_violations(r.trajectory);
  if (!violations.empty()) throw ProtocolError("trajectory", violations.front());
  return r;
}

}  // namespace vlaprobe
