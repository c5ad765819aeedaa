#pragma once

// Trajectory error metrics (ADE, min-ADE) and the trajectory success
// condition on excess error.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vlaprobe/errors.hpp"
#include "vlaprobe/scenario.hpp"

namespace vlaprobe {

using Trajectory = std::vector<TimedPoint>;

struct TrajectorySet {
  std::vector<Trajectory> modes;
  friend bool operator==(const TrajectorySet&, const TrajectorySet&) = default;
};

inline std::vector<std::string> trajectory_set_violations(const TrajectorySet& set) {
  std::vector<std::string> v;
  if (set.modes.empty()) v.push_back("modes: at least one mode required");
  for (std::size_t m = 0; m < set.modes.size(); ++m) {
    const auto& mode = set.modes[m];
    const std::string where = "modes[" + std::to_string(m) + "]";
    if (mode.empty()) v.push_back(where + ": empty trajectory");
    for (std::size_t i = 1; i < mode.size(); ++i) {
      if (!(mode[i].t > mode[i - 1].t)) {
        v.push_back(where + ": timestamps not strictly increasing at index " + std::to_string(i));
        break;
      }
    }
    for (const auto& p : mode) {
      if (!std::isfinite(p.t) || !std::isfinite(p.x) || !std::isfinite(p.y)) {
        v.push_back(where + ": non-finite waypoint");
        break;
      }
    }
  }
  return v;
}

// Mean distance between predicted waypoints and the ground truth linearly
// interpolated at the predicted timestamps.
inline double ade(std::span<const TimedPoint> pred, std::span<const TimedPoint> gt) {
  constexpr double kTimeTol = 1e-9;
  if (pred.empty()) throw DomainError("ade: empty prediction");
  if (gt.empty()) throw DomainError("ade: empty ground truth");
  if (pred.front().t < gt.front().t - kTimeTol || pred.back().t > gt.back().t + kTimeTol) {
    throw DomainError("ade: ground truth does not cover the predicted time range");
  }
  const std::vector<TimedPoint> gt_vec(gt.begin(), gt.end());
  double sum = 0.0;
  for (const auto& p : pred) sum += distance(p.position(), ground_truth_at(gt_vec, p.t));
  return sum / static_cast<double>(pred.size());
}

inline std::size_t min_ade_mode(const TrajectorySet& set, std::span<const TimedPoint> gt) {
  if (set.modes.empty()) throw DomainError("min_ade: empty trajectory set");
  std::size_t best = 0;
  double best_err = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < set.modes.size(); ++m) {
    const double e = ade(set.modes[m], gt);
    if (e < best_err) {
      best_err = e;
      best = m;
    }
  }
  return best;
}

inline double min_ade(const TrajectorySet& set, std::span<const TimedPoint> gt) {
  return ade(set.modes[min_ade_mode(set, gt)], gt);
}

// Signed; negative when the perturbed output is closer to ground truth.
inline double excess_trajectory_error(double perturbed_err, double benign_err) {
  return perturbed_err - benign_err;
}

inline bool trajectory_success(double excess_error, double delta_traj) {
  if (!(delta_traj > 0.0)) throw DomainError("delta_traj must be > 0");
  return excess_error > delta_traj;
}

}  // namespace vlaprobe
