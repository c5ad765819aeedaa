#pragma once

// Pieces shared by the open- and closed-loop drivers: attack targets, the
// normalization defense sitting in front of the model, prompt construction
// from the corruption stream, and the one-retry query policy.

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vlaprobe/corruption.hpp"
#include "vlaprobe/errors.hpp"
#include "vlaprobe/model.hpp"
#include "vlaprobe/normalize.hpp"
#include "vlaprobe/reasoning_eval.hpp"
#include "vlaprobe/rng.hpp"
#include "vlaprobe/safety.hpp"
#include "vlaprobe/scenario.hpp"

namespace vlaprobe {

enum class AttackTarget : std::uint8_t {
  Object,
  Relation,
  Implication,
  Planning,
  All,
  Slowdown,
  Dos,
  Trajectory,
};

inline constexpr std::array<AttackTarget, 8> kAllAttackTargets = {
    AttackTarget::Object,   AttackTarget::Relation, AttackTarget::Implication,
    AttackTarget::Planning, AttackTarget::All,      AttackTarget::Slowdown,
    AttackTarget::Dos,      AttackTarget::Trajectory};

inline constexpr std::size_t kAttackTargetCount = kAllAttackTargets.size();

inline std::size_t index_of(AttackTarget t) { return static_cast<std::size_t>(t); }

inline std::string_view to_string(AttackTarget t) {
  switch (t) {
    case AttackTarget::Object: return "object";
    case AttackTarget::Relation: return "relation";
    case AttackTarget::Implication: return "implication";
    case AttackTarget::Planning: return "planning";
    case AttackTarget::All: return "all";
    case AttackTarget::Slowdown: return "slowdown";
    case AttackTarget::Dos: return "dos";
    case AttackTarget::Trajectory: return "trajectory";
  }
  return "?";
}

inline std::optional<AttackTarget> attack_target_from_string(std::string_view s) {
  for (AttackTarget t : kAllAttackTargets) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

inline bool is_semantic(AttackTarget t) { return index_of(t) <= index_of(AttackTarget::All); }

inline SemanticScope scope_of(AttackTarget t) {
  if (!is_semantic(t)) throw DomainError("target '" + std::string(to_string(t)) + "' has no scope");
  return static_cast<SemanticScope>(index_of(t));
}

// Targets kept in canonical order without duplicates.
class TargetSet {
 public:
  TargetSet() = default;
  TargetSet(std::initializer_list<AttackTarget> ts) {
    for (AttackTarget t : ts) insert(t);
  }
  static TargetSet all() {
    TargetSet s;
    for (AttackTarget t : kAllAttackTargets) s.insert(t);
    return s;
  }
  void insert(AttackTarget t) { bits_ |= static_cast<std::uint16_t>(1u << index_of(t)); }
  bool contains(AttackTarget t) const { return (bits_ >> index_of(t)) & 1u; }
  bool empty() const { return bits_ == 0; }
  std::vector<AttackTarget> ordered() const {
    std::vector<AttackTarget> out;
    for (AttackTarget t : kAllAttackTargets) {
      if (contains(t)) out.push_back(t);
    }
    return out;
  }
  friend bool operator==(const TargetSet&, const TargetSet&) = default;

 private:
  std::uint16_t bits_ = 0;
};

// ---------------------------------------------------------------------------

// When enabled, every text reaching the model passes through normalize().
class TextDefense {
 public:
  TextDefense() = default;
  explicit TextDefense(std::shared_ptr<const Vocabulary> vocab) : vocab_(std::move(vocab)) {
    if (vocab_ && vocab_->empty()) throw DomainError("defense vocabulary is empty");
  }
  bool enabled() const { return vocab_ != nullptr; }
  std::string apply(std::string_view text) const {
    return vocab_ ? normalize(text, *vocab_) : std::string(text);
  }

 private:
  std::shared_ptr<const Vocabulary> vocab_;
};

struct PromptInputs {
  std::string instruction;
  std::optional<std::string> nav;
  std::string perturbed_text;  // corrupted channel text before the defense
  std::vector<TokenEdit> edits;
};

// Inputs for stream element `index` of `spec` (clean inputs when spec is
// null). The defense applies to both channels.
inline PromptInputs prompt_inputs(const Scenario& s, const CorruptionSpec* spec,
                                  std::uint64_t index, const TextDefense& defense) {
  PromptInputs in;
  in.instruction = s.clean_text;
  in.nav = s.nav_command;
  if (spec) {
    std::string* target = &in.instruction;
    if (spec->channel == TextChannel::Nav) {
      if (!in.nav) throw DomainError("scenario '" + s.id + "' has no nav command to corrupt");
      target = &*in.nav;
    }
    CorruptedText c = sample_corruption(*target, stream_element_spec(*spec, index));
    *target = c.text;
    in.perturbed_text = std::move(c.text);
    in.edits = std::move(c.edits);
  } else {
    in.perturbed_text = s.clean_text;
  }
  in.instruction = defense.apply(in.instruction);
  if (in.nav) in.nav = defense.apply(*in.nav);
  return in;
}

inline ModelRequest make_request(const Scenario& s, double t, const EgoState& ego,
                                 const PromptInputs& in) {
  ModelRequest r;
  r.scene_ref = {s.id, t};
  r.ego_state = ego;
  r.instruction = in.instruction;
  r.nav = in.nav;
  return r;
}

// One retry; nullopt after the second failure.
inline std::optional<ModelResponse> query_with_retry(const Model& model,
                                                     const ModelRequest& request,
                                                     std::string* last_error = nullptr) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      return model.infer(request);
    } catch (const Error& e) {
      if (last_error) *last_error = e.what();
    }
  }
  return std::nullopt;
}

// Per-scenario base seed: every scenario draws its own stream from the
// global seed, independent of corpus order.
inline std::uint64_t scenario_seed(std::uint64_t global_seed, std::string_view scenario_id) {
  return derive_seed(global_seed, fnv1a64(scenario_id));
}

// Open-loop execution of a predicted trajectory: the ego starts at the
// initial pose and follows the waypoints, resampled at sim_dt up to the
// last waypoint or the scenario end. Heading follows the direction of
// travel and is held while stationary.
inline std::vector<EgoSample> open_loop_ego_track(const Scenario& s, const Trajectory& traj) {
  std::vector<TimedPoint> path;
  path.push_back({0.0, s.ego_init.pose.x, s.ego_init.pose.y});
  for (const auto& p : traj) {
    if (p.t > path.back().t) path.push_back(p);
  }
  const double end = std::min(path.back().t, s.duration);
  const auto steps = static_cast<std::size_t>(std::floor(end / s.sim_dt + 1e-9));
  std::vector<EgoSample> out;
  out.reserve(steps + 1);
  double heading = s.ego_init.pose.heading;
  Vec2 prev = s.ego_init.pose.position();
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) * s.sim_dt;
    const Vec2 p = ground_truth_at(path, t);
    const Vec2 d = p - prev;
    if (i > 0 && norm(d) > 1e-9) heading = std::atan2(d.y, d.x);
    out.push_back({t, {p.x, p.y, heading}});
    prev = p;
  }
  return out;
}

}  // namespace vlaprobe
