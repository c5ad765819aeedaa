#pragma once
// Small hand-authored scenarios and helpers shared by the tests.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vlaprobe/scenario.hpp"

namespace fixture {

using namespace vlaprobe;

inline Polygon rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

// Straight eastbound road: one lane y in [-2.1, 2.1], an oncoming lane
// above it, ego starting at the origin at `speed` with a matching ground
// truth. One parked car far ahead on the shoulder keeps agents non-empty.
inline Scenario straight(double speed = 10.0, double duration = 6.0, double sim_dt = 0.1) {
  Scenario s;
  s.id = "straight";
  s.duration = duration;
  s.sim_dt = sim_dt;
  s.ego_init = {{0.0, 0.0, 0.0}, speed};
  AgentTrack parked;
  parked.agent_id = "parked";
  parked.half_length = 2.2;
  parked.half_width = 0.9;
  parked.samples = {{0.0, {400.0, -6.0, 0.0}, 0.0}, {duration, {400.0, -6.0, 0.0}, 0.0}};
  s.agents.push_back(parked);
  s.lanes.push_back({rect(-20.0, -2.1, 500.0, 2.1), {1.0, 0.0}});
  s.lanes.push_back({rect(-20.0, 2.1, 500.0, 6.3), {-1.0, 0.0}});
  s.drivable_area.push_back(rect(-20.0, -3.1, 500.0, 7.3));
  const auto n = static_cast<int>(std::lround(duration / 0.5));
  for (int i = 0; i <= n; ++i) {
    const double t = 0.5 * i;
    s.ground_truth.push_back({t, speed * t, 0.0});
  }
  s.clean_text = "slow down for the lead car ahead";
  return s;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("vlaprobe_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace fixture
