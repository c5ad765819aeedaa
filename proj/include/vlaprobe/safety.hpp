#pragma once

// Safety metrics from oriented boxes and lane geometry: collision,
// near-encounter, min time-to-collision, off-road and wrong-lane.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "vlaprobe/errors.hpp"
#include "vlaprobe/geometry.hpp"
#include "vlaprobe/scenario.hpp"

namespace vlaprobe {

struct SafetyConfig {
  double near_encounter_gap = 2.0;  // m
  double ttc_cap_ms = 10000.0;
  double ttc_dt = 0.05;  // s
  double ego_half_length = 2.4;
  double ego_half_width = 1.0;

  void check() const {
    if (!(near_encounter_gap > 0 && ttc_cap_ms > 0 && ttc_dt > 0 && ego_half_length > 0 &&
          ego_half_width > 0)) {
      throw DomainError("safety config values must be positive");
    }
  }
};

namespace detail {

inline void require_nondegenerate(const BoxCorners& b) {
  if (polygon_area(b) < 1e-12) throw DomainError("degenerate (zero-area) box");
}

// Projects the box onto `axis` and returns [min, max].
inline std::pair<double, double> project(const BoxCorners& b, Vec2 axis) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Vec2 p : b) {
    const double s = dot(p, axis);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return {lo, hi};
}

inline bool separated_on_edges_of(const BoxCorners& owner, const BoxCorners& a,
                                  const BoxCorners& b) {
  for (std::size_t i = 0; i < 2; ++i) {
    const Vec2 e = owner[i + 1] - owner[i];
    const Vec2 axis{-e.y, e.x};
    const auto [a_lo, a_hi] = project(a, axis);
    const auto [b_lo, b_hi] = project(b, axis);
    if (a_hi < b_lo || b_hi < a_lo) return true;
  }
  return false;
}

}  // namespace detail

// Separating-axis test on the two edge normals of each rectangle. Boxes
// that touch count as intersecting.
inline bool boxes_intersect(const BoxCorners& a, const BoxCorners& b) {
  detail::require_nondegenerate(a);
  detail::require_nondegenerate(b);
  return !detail::separated_on_edges_of(a, a, b) && !detail::separated_on_edges_of(b, a, b);
}

// Minimum distance between the two rectangles; 0 when they intersect.
inline double min_gap(const BoxCorners& a, const BoxCorners& b) {
  if (boxes_intersect(a, b)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      best = std::min(best, point_segment_distance(a[i], b[j], b[(j + 1) % 4]));
      best = std::min(best, point_segment_distance(b[j], a[i], a[(i + 1) % 4]));
    }
  }
  return best;
}

// Smallest tau = m * step (m >= 1, tau <= cap) at which the boxes, moved
// with constant velocities, intersect; `cap` when they never do.
inline double constant_velocity_ttc(const BoxCorners& a, Vec2 va, const BoxCorners& b, Vec2 vb,
                                    double step, double cap) {
  const Vec2 rel = va - vb;
  // Bounding-circle prune: centres cannot close the gap within the horizon.
  auto centre = [](const BoxCorners& c) { return 0.25 * (c[0] + c[1] + c[2] + c[3]); };
  auto radius = [&](const BoxCorners& c) { return distance(centre(c), c[0]); };
  const double reach = norm(rel) * cap + radius(a) + radius(b);
  if (distance(centre(a), centre(b)) > reach) return cap;

  const auto steps = static_cast<long>(std::floor(cap / step + 1e-9));
  for (long m = 1; m <= steps; ++m) {
    const double tau = static_cast<double>(m) * step;
    BoxCorners moved = a;
    for (Vec2& p : moved) p = p + tau * rel;
    if (boxes_intersect(moved, b)) return tau;
  }
  return cap;
}

// ---------------------------------------------------------------------------

enum class IncidentKind : std::uint8_t { Collision, NearEncounter, OffRoad, WrongLane };

inline constexpr std::array<IncidentKind, 4> kIncidentKinds = {
    IncidentKind::Collision, IncidentKind::NearEncounter, IncidentKind::OffRoad,
    IncidentKind::WrongLane};

inline std::string_view to_string(IncidentKind k) {
  switch (k) {
    case IncidentKind::Collision: return "Collision";
    case IncidentKind::NearEncounter: return "Near Encounter";
    case IncidentKind::OffRoad: return "Off-road";
    case IncidentKind::WrongLane: return "Wrong Lane";
  }
  return "?";
}

struct EgoSample {
  double t = 0.0;
  Pose2D pose;
  friend bool operator==(const EgoSample&, const EgoSample&) = default;
};

struct StepSafety {
  double t = 0.0;
  bool collision = false;
  bool near_encounter = false;
  bool off_road = false;
  bool wrong_lane = false;
  double min_gap = std::numeric_limits<double>::infinity();  // over agents, m
  double ttc_ms = 0.0;                                        // over agents, capped

  bool flag(IncidentKind k) const {
    switch (k) {
      case IncidentKind::Collision: return collision;
      case IncidentKind::NearEncounter: return near_encounter;
      case IncidentKind::OffRoad: return off_road;
      case IncidentKind::WrongLane: return wrong_lane;
    }
    return false;
  }
  friend bool operator==(const StepSafety&, const StepSafety&) = default;
};

struct SafetyMetrics {
  std::optional<double> collision;  // first occurrence (s) when present
  std::optional<double> near_encounter;
  std::optional<double> off_road;
  std::optional<double> wrong_lane;
  double min_ttc_ms = 0.0;

  const std::optional<double>& first(IncidentKind k) const {
    switch (k) {
      case IncidentKind::Collision: return collision;
      case IncidentKind::NearEncounter: return near_encounter;
      case IncidentKind::OffRoad: return off_road;
      case IncidentKind::WrongLane: return wrong_lane;
    }
    return collision;
  }
  std::optional<double>& first(IncidentKind k) {
    return const_cast<std::optional<double>&>(std::as_const(*this).first(k));
  }
  friend bool operator==(const SafetyMetrics&, const SafetyMetrics&) = default;
};

inline Vec2 finite_difference_velocity(std::span<const EgoSample> track, std::size_t i) {
  if (track.size() < 2) return {0.0, 0.0};
  const std::size_t a = i + 1 < track.size() ? i : i - 1;
  const std::size_t b = a + 1;
  const double dt = track[b].t - track[a].t;
  return (1.0 / dt) * (track[b].pose.position() - track[a].pose.position());
}

inline Vec2 agent_velocity(const Scenario& s, const AgentTrack& agent, double t, double h) {
  double t0 = t;
  double t1 = t + h;
  if (t1 > s.duration) {
    t1 = t;
    t0 = std::max(0.0, t - h);
  }
  if (t1 <= t0) return {0.0, 0.0};
  const Vec2 p0 = agent_pose_at(s, agent.agent_id, t0).pose.position();
  const Vec2 p1 = agent_pose_at(s, agent.agent_id, t1).pose.position();
  return (1.0 / (t1 - t0)) * (p1 - p0);
}

inline StepSafety evaluate_step(std::span<const EgoSample> track, std::size_t i,
                                const Scenario& s, const SafetyConfig& cfg) {
  const EgoSample& ego = track[i];
  StepSafety out;
  out.t = ego.t;
  out.ttc_ms = cfg.ttc_cap_ms;
  const BoxCorners ego_box = box_corners(ego.pose, cfg.ego_half_length, cfg.ego_half_width);
  const Vec2 ego_v = finite_difference_velocity(track, i);
  double h = s.sim_dt;
  if (track.size() > 1) {
    h = i + 1 < track.size() ? track[i + 1].t - track[i].t : track[i].t - track[i - 1].t;
  }
  const double cap_s = cfg.ttc_cap_ms / 1000.0;
  const double t_agent = std::clamp(ego.t, 0.0, s.duration);
  for (const auto& agent : s.agents) {
    const BoxCorners agent_box = oriented_box_at(s, agent.agent_id, t_agent);
    const double gap = min_gap(ego_box, agent_box);
    out.min_gap = std::min(out.min_gap, gap);
    const Vec2 agent_v = agent_velocity(s, agent, t_agent, h);
    const double ttc = constant_velocity_ttc(ego_box, ego_v, agent_box, agent_v, cfg.ttc_dt, cap_s);
    out.ttc_ms = std::min(out.ttc_ms, ttc * 1000.0);
  }
  out.collision = out.min_gap == 0.0;
  out.near_encounter = !out.collision && out.min_gap < cfg.near_encounter_gap;

  const Vec2 c = ego.pose.position();
  if (!s.drivable_area.empty()) {
    out.off_road = std::none_of(s.drivable_area.begin(), s.drivable_area.end(),
                                [c](const Polygon& p) { return point_in_polygon(c, p); });
  }
  const Vec2 heading = ego.pose.heading_vector();
  out.wrong_lane = std::any_of(s.lanes.begin(), s.lanes.end(), [&](const LaneSegment& lane) {
    return point_in_polygon(c, lane.polygon) && dot(lane.direction, heading) < 0.0;
  });
  return out;
}

inline std::vector<StepSafety> evaluate_safety_steps(std::span<const EgoSample> track,
                                                     const Scenario& s,
                                                     const SafetyConfig& cfg) {
  cfg.check();
  if (track.empty()) throw DomainError("evaluate_safety: empty ego track");
  std::vector<StepSafety> out;
  out.reserve(track.size());
  for (std::size_t i = 0; i < track.size(); ++i) out.push_back(evaluate_step(track, i, s, cfg));
  return out;
}

inline SafetyMetrics summarize_safety(std::span<const StepSafety> steps, double ttc_cap_ms) {
  SafetyMetrics m;
  m.min_ttc_ms = ttc_cap_ms;
  for (const auto& st : steps) {
    for (IncidentKind k : kIncidentKinds) {
      if (st.flag(k) && !m.first(k)) m.first(k) = st.t;
    }
    m.min_ttc_ms = std::min(m.min_ttc_ms, st.ttc_ms);
  }
  return m;
}

inline SafetyMetrics evaluate_safety(std::span<const EgoSample> track, const Scenario& s,
                                     const SafetyConfig& cfg) {
  return summarize_safety(evaluate_safety_steps(track, s, cfg), cfg.ttc_cap_ms);
}

inline std::optional<double> first_incident_time(const SafetyMetrics& m, IncidentKind k) {
  return m.first(k);
}

inline std::optional<double> first_incident_time(std::span<const StepSafety> steps,
                                                 IncidentKind k) {
  for (const auto& st : steps) {
    if (st.flag(k)) return st.t;
  }
  return std::nullopt;
}

}  // namespace vlaprobe
