#pragma once

// Deterministic stand-in for a reasoning driving policy. It is a test
// fixture with engineered sensitivity to surface corruption, not a model of
// any real network.
//
// Reading the inputs: instruction and nav are split on whitespace and each
// token is matched exactly (case-sensitive) against the vocabulary.
//   r = recognized tokens, u = unrecognized tokens
//   r == 0              -> tier None:    empty reasoning, straight constant speed
//   u <= tolerance      -> tier Full:    parsed intent honored, canonical reasoning
//   otherwise           -> tier Partial: follow_lane at current speed, hedging text
// Hedging text has kHedgeBaseTokens + u * kHedgeGrowthTokens tokens.
//
// Intent is the first command phrase found (slow down, stop, turn left,
// turn right, keep lane); none found means follow_lane. The scene focus is
// the first object phrase (lead car, person, curve), else the surroundings.
//
// Trajectory: unicycle rollout from the request's ego state, 6 s horizon,
// waypoints every 0.5 s at absolute times t_q + k * 0.5. Mode 0 is nominal,
// mode 1 starts at 80% of the current speed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vlaprobe/corruption.hpp"
#include "vlaprobe/errors.hpp"
#include "vlaprobe/lexicon.hpp"
#include "vlaprobe/model.hpp"
#include "vlaprobe/reasoning_eval.hpp"
#include "vlaprobe/scenario.hpp"

namespace vlaprobe {

enum class Intent : std::uint8_t { FollowLane, SlowDown, Stop, TurnLeft, TurnRight };
enum class SceneFocus : std::uint8_t { LeadVehicle, Pedestrian, Curve, Surroundings };
// Ordered from most to least confident.
enum class ConfidenceTier : std::uint8_t { Full, Partial, None };

inline std::string_view to_string(Intent i) {
  switch (i) {
    case Intent::FollowLane: return "follow_lane";
    case Intent::SlowDown: return "slow_down";
    case Intent::Stop: return "stop";
    case Intent::TurnLeft: return "turn_left";
    case Intent::TurnRight: return "turn_right";
  }
  return "?";
}

inline std::string_view to_string(ConfidenceTier t) {
  switch (t) {
    case ConfidenceTier::Full: return "full";
    case ConfidenceTier::Partial: return "partial";
    case ConfidenceTier::None: return "none";
  }
  return "?";
}

inline constexpr std::string_view kHedgeText =
    "The instruction is unclear so maintain current speed and watch the surroundings for "
    "unknown hazard.";
inline constexpr std::string_view kHedgeGrowthText = " Rechecking unreadable input.";
inline constexpr std::size_t kHedgeBaseTokens = 16;
inline constexpr std::size_t kHedgeGrowthTokens = 4;

struct MockParams {
  std::set<std::string> vocabulary = lexicon_words();
  std::size_t tolerance = 2;  // unrecognized tokens still read with full confidence
  double horizon = 6.0;
  double waypoint_dt = 0.5;
  double integration_dt = 0.05;
  double slow_decel = 2.0;  // m/s^2
  double slow_speed = 4.0;  // m/s
  double stop_decel = 3.0;
  double yaw_rate = 0.15;  // rad/s
  double alt_speed_scale = 0.8;

  void check() const {
    if (!(horizon > 0 && waypoint_dt > 0 && integration_dt > 0 && integration_dt <= waypoint_dt)) {
      throw DomainError("mock params: horizon and step sizes must be positive");
    }
    if (!(slow_decel > 0 && stop_decel > 0 && slow_speed >= 0 && yaw_rate >= 0)) {
      throw DomainError("mock params: dynamics limits out of range");
    }
    if (!(alt_speed_scale > 0)) throw DomainError("mock params: alt_speed_scale must be > 0");
  }
};

inline std::size_t hedge_token_count(std::size_t unrecognized) {
  return kHedgeBaseTokens + unrecognized * kHedgeGrowthTokens;
}

inline ConfidenceTier confidence_tier(std::size_t recognized, std::size_t unrecognized,
                                      std::size_t tolerance) {
  if (recognized == 0) return ConfidenceTier::None;
  return unrecognized <= tolerance ? ConfidenceTier::Full : ConfidenceTier::Partial;
}

struct MockReading {
  ConfidenceTier tier = ConfidenceTier::Full;
  Intent intent = Intent::FollowLane;  // as parsed, before tier fallback
  SceneFocus focus = SceneFocus::Surroundings;
  std::size_t recognized = 0;
  std::size_t unrecognized = 0;
};

namespace detail {

inline bool phrase_at(const std::vector<std::string_view>& toks, std::size_t i,
                      std::initializer_list<std::string_view> phrase) {
  if (i + phrase.size() > toks.size()) return false;
  std::size_t k = i;
  for (std::string_view w : phrase) {
    if (toks[k++] != w) return false;
  }
  return true;
}

}  // namespace detail

inline MockReading read_inputs(std::string_view instruction, const std::optional<std::string>& nav,
                               const MockParams& p) {
  std::vector<std::string_view> toks = whitespace_tokens(instruction);
  if (nav) {
    for (std::string_view t : whitespace_tokens(*nav)) toks.push_back(t);
  }
  MockReading m;
  for (std::string_view t : toks) {
    if (p.vocabulary.count(std::string(t))) {
      ++m.recognized;
    } else {
      ++m.unrecognized;
    }
  }
  m.tier = confidence_tier(m.recognized, m.unrecognized, p.tolerance);

  bool have_intent = false;
  bool have_focus = false;
  for (std::size_t i = 0; i < toks.size() && !(have_intent && have_focus); ++i) {
    if (!have_intent) {
      have_intent = true;
      if (detail::phrase_at(toks, i, {"slow", "down"})) {
        m.intent = Intent::SlowDown;
      } else if (detail::phrase_at(toks, i, {"stop"})) {
        m.intent = Intent::Stop;
      } else if (detail::phrase_at(toks, i, {"turn", "left"})) {
        m.intent = Intent::TurnLeft;
      } else if (detail::phrase_at(toks, i, {"turn", "right"})) {
        m.intent = Intent::TurnRight;
      } else if (detail::phrase_at(toks, i, {"keep", "lane"})) {
        m.intent = Intent::FollowLane;
      } else {
        have_intent = false;
      }
    }
    if (!have_focus) {
      have_focus = true;
      if (detail::phrase_at(toks, i, {"lead", "car"})) {
        m.focus = SceneFocus::LeadVehicle;
      } else if (detail::phrase_at(toks, i, {"person"})) {
        m.focus = SceneFocus::Pedestrian;
      } else if (detail::phrase_at(toks, i, {"curve"})) {
        m.focus = SceneFocus::Curve;
      } else {
        have_focus = false;
      }
    }
  }
  return m;
}

// Intent actually executed after the tier fallback.
inline Intent effective_intent(const MockReading& m) {
  return m.tier == ConfidenceTier::Full ? m.intent : Intent::FollowLane;
}

inline std::string mock_reasoning_text(const MockReading& m) {
  if (m.tier == ConfidenceTier::None) return {};
  if (m.tier == ConfidenceTier::Partial) {
    std::string out(kHedgeText);
    for (std::size_t i = 0; i < m.unrecognized; ++i) out += kHedgeGrowthText;
    return out;
  }
  std::string_view plan;
  std::string_view detail;
  switch (m.intent) {
    case Intent::SlowDown:
      plan = "Slow down";
      detail = "Reduce speed gradually and hold a safe gap.";
      break;
    case Intent::Stop:
      plan = "Stop";
      detail = "Brake smoothly and wait until the crosswalk is empty.";
      break;
    case Intent::TurnLeft:
    case Intent::TurnRight:
      plan = m.intent == Intent::TurnLeft ? "Turn left" : "Turn right";
      detail = "Steer smoothly and hold a steady speed through the turn.";
      break;
    case Intent::FollowLane:
      plan = "Keep lane";
      detail = "Hold the current speed and stay centered.";
      break;
  }
  std::string_view clause;
  switch (m.focus) {
    case SceneFocus::LeadVehicle: clause = "to keep distance to the lead vehicle ahead."; break;
    case SceneFocus::Pedestrian:
      clause = "because a pedestrian is crossing ahead and we must yield.";
      break;
    case SceneFocus::Curve:
      clause = "as the lane bends along the curve and drifting wide means going off road.";
      break;
    case SceneFocus::Surroundings:
      clause = "because the surroundings are clear with no hazard.";
      break;
  }
  std::string out;
  out.append(plan).append(" ").append(clause).append(" ").append(detail);
  return out;
}

// Integrates the unicycle under the intent's control law. Controls depend
// only on the current state, so a rollout restarted from any intermediate
// state continues the same profile.
inline Trajectory unicycle_rollout(const EgoState& start, double t0, Intent intent, double speed,
                                   const MockParams& p) {
  const auto substeps =
      static_cast<int>(std::max(1.0, std::round(p.waypoint_dt / p.integration_dt)));
  const double dt = p.waypoint_dt / substeps;
  const auto n = static_cast<int>(std::round(p.horizon / p.waypoint_dt));
  double x = start.pose.x;
  double y = start.pose.y;
  double h = start.pose.heading;
  double v = speed;
  const double omega = intent == Intent::TurnLeft    ? p.yaw_rate
                       : intent == Intent::TurnRight ? -p.yaw_rate
                                                     : 0.0;
  Trajectory out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    for (int s = 0; s < substeps; ++s) {
      double v_next = v;
      if (intent == Intent::SlowDown && v > p.slow_speed) {
        v_next = std::max(p.slow_speed, v - p.slow_decel * dt);
      } else if (intent == Intent::Stop) {
        v_next = std::max(0.0, v - p.stop_decel * dt);
      }
      const double v_mid = 0.5 * (v + v_next);
      const double h_mid = h + 0.5 * omega * dt;
      x += v_mid * std::cos(h_mid) * dt;
      y += v_mid * std::sin(h_mid) * dt;
      h += omega * dt;
      v = v_next;
    }
    out.push_back({t0 + k * p.waypoint_dt, x, y});
  }
  return out;
}

inline ModelResponse mock_infer(const ModelRequest& request, const Scenario& scenario,
                                const MockParams& params) {
  params.check();
  check_request(request);
  if (request.scene_ref.scenario_id != scenario.id) {
    throw DomainError("scene mismatch: request references '" + request.scene_ref.scenario_id +
                      "' but scenario is '" + scenario.id + "'");
  }
  if (request.scene_ref.t > scenario.duration + 1e-9) {
    throw DomainError("scene mismatch: query time beyond scenario duration");
  }
  const MockReading m = read_inputs(request.instruction, request.nav, params);
  ModelResponse out;
  out.reasoning = decompose(mock_reasoning_text(m), default_ontology());
  const Intent intent = effective_intent(m);
  const double t0 = request.scene_ref.t;
  const double v = request.ego_state.speed;
  out.trajectory.modes.push_back(unicycle_rollout(request.ego_state, t0, intent, v, params));
  out.trajectory.modes.push_back(
      unicycle_rollout(request.ego_state, t0, intent, v * params.alt_speed_scale, params));
  return out;
}

class MockModel : public Model {
 public:
  explicit MockModel(const std::vector<Scenario>& scenarios, MockParams params = {})
      : params_(std::move(params)) {
    params_.check();
    for (const auto& s : scenarios) {
      scenarios_.emplace(s.id, std::make_shared<const Scenario>(s));
    }
  }

  ModelResponse infer(const ModelRequest& request) const override {
    const auto it = scenarios_.find(request.scene_ref.scenario_id);
    if (it == scenarios_.end()) {
      throw DomainError("scene mismatch: unknown scenario '" + request.scene_ref.scenario_id +
                        "'");
    }
    return mock_infer(request, *it->second, params_);
  }

  std::string id() const override { return "mock"; }
  const MockParams& params() const { return params_; }

 private:
  MockParams params_;
  std::map<std::string, std::shared_ptr<const Scenario>, std::less<>> scenarios_;
};

}  // namespace vlaprobe
