#pragma once

// Word lists shared by the corpus generator and the mock model: one core
// command phrase per scenario template, filler clauses used to pad prompts
// to a requested length, and the navigation commands.

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>

namespace vlaprobe {

enum class ScenarioTemplate : std::uint8_t { Lead, Crossing, Curve, Cruise };

inline constexpr std::array<ScenarioTemplate, 4> kScenarioTemplates = {
    ScenarioTemplate::Lead, ScenarioTemplate::Crossing, ScenarioTemplate::Curve,
    ScenarioTemplate::Cruise};

inline std::string_view to_string(ScenarioTemplate t) {
  switch (t) {
    case ScenarioTemplate::Lead: return "lead";
    case ScenarioTemplate::Crossing: return "crossing";
    case ScenarioTemplate::Curve: return "curve";
    case ScenarioTemplate::Cruise: return "cruise";
  }
  return "?";
}

inline std::string_view core_phrase(ScenarioTemplate t) {
  switch (t) {
    case ScenarioTemplate::Lead: return "slow down for the lead car ahead";
    case ScenarioTemplate::Crossing: return "stop for the person crossing the road";
    case ScenarioTemplate::Curve: return "follow the curve of the road";
    case ScenarioTemplate::Cruise: return "keep lane and hold your speed";
  }
  return "";
}

// None of these contain a command or object phrase.
inline constexpr std::array<std::string_view, 14> kFillerClauses = {
    "drive safely",     "watch the road",    "remain calm",      "check the mirrors",
    "mind the gap",     "be ready to brake", "use smooth inputs", "look well ahead",
    "obey the rules",   "signal early",      "scan for hazards", "respect the limit",
    "give others room", "avoid sudden moves"};

inline constexpr std::array<std::string_view, 2> kNavCommands = {"turn left", "turn right"};

inline void add_words(std::set<std::string>& out, std::string_view phrase) {
  std::size_t i = 0;
  while (i < phrase.size()) {
    const std::size_t sp = phrase.find(' ', i);
    const std::size_t end = sp == std::string_view::npos ? phrase.size() : sp;
    if (end > i) out.emplace(phrase.substr(i, end - i));
    i = end + 1;
  }
}

// Every word the mock model recognizes.
inline std::set<std::string> lexicon_words() {
  std::set<std::string> out;
  for (ScenarioTemplate t : kScenarioTemplates) add_words(out, core_phrase(t));
  for (std::string_view c : kFillerClauses) add_words(out, c);
  for (std::string_view c : kNavCommands) add_words(out, c);
  return out;
}

}  // namespace vlaprobe
