#include <gtest/gtest.h>

#include "vlaprobe/rng.hpp"
#include "vlaprobe/trajectory_eval.hpp"

using namespace vlaprobe;

namespace {

Trajectory line(double vx, double vy, double t0, double t1, double dt) {
  Trajectory out;
  for (double t = t0; t <= t1 + 1e-9; t += dt) out.push_back({t, vx * t, vy * t});
  return out;
}

}  // namespace

TEST(Ade, ConstantOffsetAndInterpolation) {
  const Trajectory gt = line(10, 0, 0, 6, 0.5);
  Trajectory pred = line(10, 0, 0.5, 6, 0.5);
  for (auto& p : pred) p.y += 1.5;
  EXPECT_NEAR(ade(pred, gt), 1.5, 1e-12);
  // predicted times between ground-truth samples
  const Trajectory odd = {{0.25, 2.5, 0.0}, {0.75, 7.5, 0.0}};
  EXPECT_NEAR(ade(odd, gt), 0.0, 1e-12);
}

TEST(Ade, Errors) {
  const Trajectory gt = line(1, 0, 0, 2, 0.5);
  EXPECT_THROW(ade({}, gt), DomainError);
  EXPECT_THROW(ade(gt, {}), DomainError);
  EXPECT_THROW(ade(line(1, 0, 0, 3, 0.5), gt), DomainError);
}

TEST(MinAde, PicksClosestMode) {
  const Trajectory gt = line(10, 0, 0, 6, 0.5);
  TrajectorySet set;
  set.modes = {line(8, 0, 0.5, 6, 0.5), line(10, 0.1, 0.5, 6, 0.5), line(0, 0, 0.5, 6, 0.5)};
  EXPECT_EQ(min_ade_mode(set, gt), 1u);
  EXPECT_NEAR(min_ade(set, gt), ade(set.modes[1], gt), 0.0);
  EXPECT_THROW(min_ade(TrajectorySet{}, gt), DomainError);
}

TEST(MinAde, NeverAboveAnyMode) {
  SplitMix64 rng(23);
  const Trajectory gt = line(10, 0, 0, 6, 0.5);
  for (int i = 0; i < 2000; ++i) {
    TrajectorySet set;
    const auto modes = 1 + rng.uniform_below(5);
    for (std::uint64_t m = 0; m < modes; ++m) {
      set.modes.push_back(line(20 * rng.uniform01(), 4 * rng.uniform01() - 2, 0.5, 6, 0.5));
    }
    const double best = min_ade(set, gt);
    for (const auto& mode : set.modes) ASSERT_LE(best, ade(mode, gt));
  }
}

TEST(TrajectorySuccess, ExcessThreshold) {
  EXPECT_DOUBLE_EQ(excess_trajectory_error(3.5, 2.0), 1.5);
  EXPECT_TRUE(trajectory_success(1.5, 1.0));
  EXPECT_FALSE(trajectory_success(1.0, 1.0));
  EXPECT_FALSE(trajectory_success(-2.0, 1.0));
  EXPECT_THROW(trajectory_success(2.0, 0.0), DomainError);
}

TEST(TrajectorySet, Violations) {
  TrajectorySet ok;
  ok.modes = {line(1, 0, 0, 1, 0.5)};
  EXPECT_TRUE(trajectory_set_violations(ok).empty());
  EXPECT_FALSE(trajectory_set_violations(TrajectorySet{}).empty());
  TrajectorySet bad;
  bad.modes = {{{1.0, 0, 0}, {0.5, 1, 1}}, {}};
  const auto v = trajectory_set_violations(bad);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_NE(v[0].find("modes[0]"), std::string::npos);
  EXPECT_NE(v[1].find("modes[1]"), std::string::npos);
}
