#pragma once

// Synthetic scenario corpus. Templates cycle by index: lead vehicle,
// crossing pedestrian, curve (nav turn left/right), cruise with oncoming
// traffic. Geometry and the filler stream are drawn from separate
// per-scenario substreams, so prompts of different lengths share scene
// geometry and the shorter prompt is a token prefix of the longer one.
// Ground truth is the benign closed-loop rollout of the mock model.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "vlaprobe/attack_closed.hpp"
#include "vlaprobe/errors.hpp"
#include "vlaprobe/lexicon.hpp"
#include "vlaprobe/mock_model.hpp"
#include "vlaprobe/normalize.hpp"
#include "vlaprobe/reasoning_eval.hpp"
#include "vlaprobe/rng.hpp"
#include "vlaprobe/scenario.hpp"

namespace vlaprobe {

struct CorpusSpec {
  std::size_t count = 50;
  std::size_t prompt_length = 29;  // tokens in clean_text
  std::uint64_t seed = 2025;
  double duration = 10.0;
  double sim_dt = 0.1;

  void check() const {
    if (count == 0) throw DomainError("corpus count must be >= 1");
    if (prompt_length < 6) throw DomainError("prompt_length must be >= 6 (core phrase length)");
    if (!(duration > 0 && sim_dt > 0)) throw DomainError("duration and sim_dt must be positive");
  }
};

inline constexpr double kLaneWidth = 4.2;
inline constexpr double kShoulder = 1.0;

inline std::string scenario_id_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scn-%03zu", index);
  return buf;
}

inline ScenarioTemplate template_for(std::size_t index) {
  return kScenarioTemplates[index % kScenarioTemplates.size()];
}

// Core phrase followed by filler clauses from `rng`, truncated to `length`.
inline std::string build_prompt(ScenarioTemplate t, std::size_t length, SplitMix64 rng) {
  std::vector<std::string> words;
  auto push = [&words](std::string_view phrase) {
    for (std::string_view w : whitespace_tokens(phrase)) words.emplace_back(w);
  };
  push(core_phrase(t));
  while (words.size() < length) push(kFillerClauses[rng.uniform_below(kFillerClauses.size())]);
  words.resize(length);
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

namespace detail {

inline double draw(SplitMix64& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform01(); }

inline Polygon rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

inline AgentTrack linear_agent(std::string id, Vec2 p0, double heading, double speed,
                               double half_length, double half_width, double duration) {
  const Vec2 v{speed * std::cos(heading), speed * std::sin(heading)};
  AgentTrack a;
  a.agent_id = std::move(id);
  a.half_length = half_length;
  a.half_width = half_width;
  a.samples.push_back({0.0, {p0.x, p0.y, heading}, speed});
  const Vec2 p1 = p0 + duration * v;
  a.samples.push_back({duration, {p1.x, p1.y, heading}, speed});
  return a;
}

// Two-lane straight road along +x: ego lane centred on y=0, opposite lane
// to its left.
inline void straight_road(Scenario& s) {
  const double w = kLaneWidth;
  s.lanes.push_back({rect(-20.0, -w / 2, 260.0, w / 2), {1.0, 0.0}});
  s.lanes.push_back({rect(-20.0, w / 2, 260.0, 1.5 * w), {-1.0, 0.0}});
  s.drivable_area.push_back(rect(-20.0, -w / 2 - kShoulder, 260.0, 1.5 * w + kShoulder));
}

// Single-lane arc of radius R starting at the origin heading +x. The
// centre sits at (0, +R) for a left turn and (0, -R) for a right turn.
inline void curved_road(Scenario& s, double radius, bool left) {
  const double side = left ? 1.0 : -1.0;
  auto at = [&](double r, double phi) {
    return Vec2{r * std::sin(phi), side * (radius - r * std::cos(phi))};
  };
  constexpr double kStart = -0.3;
  constexpr double kEnd = 2.0;
  constexpr int kSegments = 46;
  const double step = (kEnd - kStart) / kSegments;
  const double w = kLaneWidth / 2;
  for (int i = 0; i < kSegments; ++i) {
    const double a = kStart + i * step;
    const double b = a + step;
    Polygon quad = {at(radius - w, a), at(radius - w, b), at(radius + w, b), at(radius + w, a)};
    if (!left) std::reverse(quad.begin(), quad.end());
    const double mid = 0.5 * (a + b);
    s.lanes.push_back({std::move(quad), {std::cos(mid), side * std::sin(mid)}});
  }
  Polygon area;
  for (int i = 0; i <= kSegments; ++i) area.push_back(at(radius - w - kShoulder, kStart + i * step));
  for (int i = kSegments; i >= 0; --i) area.push_back(at(radius + w + kShoulder, kStart + i * step));
  if (!left) std::reverse(area.begin(), area.end());
  s.drivable_area.push_back(std::move(area));
}

}  // namespace detail

// Scene without ground truth; geometry depends only on (seed, index).
inline Scenario make_scene(std::size_t index, const CorpusSpec& spec) {
  const std::uint64_t sub = derive_seed(spec.seed, index);
  SplitMix64 geo(derive_seed(sub, 0));
  const ScenarioTemplate tmpl = template_for(index);

  Scenario s;
  s.id = scenario_id_for(index);
  s.duration = spec.duration;
  s.sim_dt = spec.sim_dt;
  const double v0 = detail::draw(geo, 9.0, 12.0);
  s.ego_init = {{0.0, 0.0, 0.0}, v0};
  s.clean_text = build_prompt(tmpl, spec.prompt_length, SplitMix64(derive_seed(sub, 1)));

  switch (tmpl) {
    case ScenarioTemplate::Lead: {
      detail::straight_road(s);
      const double gap = detail::draw(geo, 28.0, 36.0);
      const double v = detail::draw(geo, 4.0, 5.0);
      s.agents.push_back(detail::linear_agent("lead", {gap, 0.0}, 0.0, v, 2.4, 1.0, s.duration));
      break;
    }
    case ScenarioTemplate::Crossing: {
      detail::straight_road(s);
      // The pedestrian reaches the ego lane centre when an ego holding its
      // initial speed would.
      const double xc = detail::draw(geo, 32.0, 42.0);
      constexpr double kWalk = 1.2;
      const double t_mid = xc / v0;
      s.agents.push_back(detail::linear_agent("person", {xc, -kWalk * t_mid},
                                              std::numbers::pi / 2, kWalk, 0.3, 0.3, s.duration));
      break;
    }
    case ScenarioTemplate::Curve: {
      const bool left = (index / kScenarioTemplates.size()) % 2 == 0;
      detail::curved_road(s, v0 / MockParams{}.yaw_rate, left);
      s.nav_command = std::string(left ? kNavCommands[0] : kNavCommands[1]);
      break;
    }
    case ScenarioTemplate::Cruise: {
      detail::straight_road(s);
      const double x = detail::draw(geo, 120.0, 180.0);
      const double v = detail::draw(geo, 8.0, 12.0);
      s.agents.push_back(detail::linear_agent("oncoming", {x, kLaneWidth}, std::numbers::pi, v,
                                              2.4, 1.0, s.duration));
      break;
    }
  }
  return s;
}

// Ground truth: ego positions of the benign closed-loop mock rollout.
inline std::vector<TimedPoint> benign_ground_truth(const Scenario& scene, const MockParams& params = {}) {
  Scenario s = scene;
  s.ground_truth = {{0.0, 0.0, 0.0}, {s.duration, 0.0, 0.0}};
  const MockModel model({s}, params);
  RolloutConfig rc;
  rc.sim_dt = s.sim_dt;
  const RolloutTrace trace = rollout(s, model, nullptr, rc);
  std::vector<TimedPoint> gt;
  gt.reserve(trace.steps.size());
  for (const auto& st : trace.steps) gt.push_back({st.t, st.ego.pose.x, st.ego.pose.y});
  return gt;
}

inline std::vector<Scenario> generate_corpus(const CorpusSpec& spec) {
  spec.check();
  std::vector<Scenario> out;
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    Scenario s = make_scene(i, spec);
    s.ground_truth = benign_ground_truth(s);
    validate(s);
    out.push_back(std::move(s));
  }
  return out;
}

// Every word appearing in a clean prompt or nav command.
inline std::set<std::string> corpus_words(const std::vector<Scenario>& corpus) {
  std::set<std::string> out;
  for (const auto& s : corpus) {
    add_words(out, s.clean_text);
    if (s.nav_command) add_words(out, *s.nav_command);
  }
  return out;
}

// Writes <dir>/corpus/<id>.json, <dir>/vocab.txt and <dir>/ontology.txt.
inline void write_corpus(const std::filesystem::path& dir, const std::vector<Scenario>& corpus) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "corpus");
  for (const auto& s : corpus) save_scenario(s, dir / "corpus" / (s.id + ".json"));
  Vocabulary(corpus_words(corpus)).save(dir / "vocab.txt");
  std::ofstream onto(dir / "ontology.txt", std::ios::binary);
  if (!onto) throw Error("cannot write " + (dir / "ontology.txt").string());
  onto << kDefaultOntologyText;
}

// Scenario files in a directory, sorted by file name.
inline std::vector<Scenario> load_scenario_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ParseError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Scenario> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_scenario(f));
  return out;
}

}  // namespace vlaprobe
