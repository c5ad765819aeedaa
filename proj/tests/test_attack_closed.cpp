#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "vlaprobe/attack_closed.hpp"
#include "vlaprobe/mock_model.hpp"

using namespace vlaprobe;

namespace {

// Drives straight at 10 m/s. Once t >= 2 and the instruction is not the
// clean one, it drifts left at 2 m/s and says so.
class DriftModel : public Model {
 public:
  explicit DriftModel(std::string clean) : clean_(std::move(clean)) {}
  ModelResponse infer(const ModelRequest& r) const override {
    const bool drift = r.instruction != clean_ && r.scene_ref.t >= 2.0 - 1e-9;
    ModelResponse out;
    out.reasoning = decompose(drift ? "Turn left because the road is clear." :
                                      "Keep lane because the road is clear.",
                              default_ontology());
    out.trajectory.modes.assign(1, {});
    for (int j = 1; j <= 12; ++j) {
      const double dt = 0.5 * j;
      out.trajectory.modes[0].push_back(
          {r.scene_ref.t + dt, r.ego_state.pose.x + 10.0 * dt,
           r.ego_state.pose.y + (drift ? 2.0 * dt : 0.0)});
    }
    return out;
  }
  std::string id() const override { return "drift"; }

 private:
  std::string clean_;
};

CorruptionSpec flip_everything() {
  CorruptionSpec c;
  c.sigma = 1.0;
  c.operators = OperatorSet{};
  c.operators.insert(CorruptionOp::CaseFlip);
  c.seed = 5;
  return c;
}

std::vector<double> random_series(SplitMix64& rng) {
  std::vector<double> s(rng.uniform_below(16));
  for (double& v : s) v = 3.0 * rng.uniform01() - 1.0;
  return s;
}

}  // namespace

TEST(Windowed, MatchesBruteForce) {
  SplitMix64 rng(61);
  for (SuccessMode mode : {SuccessMode::ConsecutiveExceed, SuccessMode::WindowMean}) {
    int hits = 0;
    for (int i = 0; i < 1000; ++i) {
      const auto s = random_series(rng);
      const std::size_t k = rng.uniform_below(6);
      const double eps = 1.5 * rng.uniform01();
      const bool want = mode == SuccessMode::WindowMean ? oracle::windowed_window_mean(s, k, eps)
                                                        : oracle::windowed_consecutive(s, k, eps);
      ASSERT_EQ(windowed_success(s, k, eps, mode), want) << to_string(mode) << " " << i;
      hits += want;
    }
    EXPECT_GT(hits, 100);
    EXPECT_LT(hits, 900);
  }
}

TEST(Windowed, Examples) {
  const std::vector<double> s = {0.6, 0.6, 0.1, 0.6, 0.6, 0.6};
  EXPECT_TRUE(windowed_success(s, 2, 0.5, SuccessMode::ConsecutiveExceed));
  EXPECT_FALSE(windowed_success(s, 3, 0.5, SuccessMode::ConsecutiveExceed));
  // (0.6 * 5 + 0.1) / 6 > 0.5
  EXPECT_TRUE(windowed_success(s, 5, 0.5, SuccessMode::WindowMean));
  EXPECT_FALSE(windowed_success(s, 6, 0.0, SuccessMode::WindowMean));
  EXPECT_FALSE(windowed_success({}, 0, 0.0, SuccessMode::ConsecutiveExceed));
  // equality is not exceedance
  EXPECT_FALSE(windowed_success(std::vector<double>{0.5}, 0, 0.5, SuccessMode::WindowMean));
}

TEST(Windowed, MonotoneInKAndEpsilon) {
  SplitMix64 rng(62);
  for (SuccessMode mode : {SuccessMode::ConsecutiveExceed, SuccessMode::WindowMean}) {
    for (int i = 0; i < 2000; ++i) {
      const auto s = random_series(rng);
      const std::size_t k = rng.uniform_below(6);
      const double eps = 1.5 * rng.uniform01();
      const double eps2 = eps + rng.uniform01();
      if (windowed_success(s, k + 1, eps, mode)) ASSERT_TRUE(windowed_success(s, k, eps, mode));
      if (windowed_success(s, k, eps2, mode)) ASSERT_TRUE(windowed_success(s, k, eps, mode));
      // a run of exceedances is also a window with a large mean
      if (windowed_success(s, k, eps, SuccessMode::ConsecutiveExceed)) {
        ASSERT_TRUE(windowed_success(s, k, eps, SuccessMode::WindowMean));
      }
    }
  }
}

TEST(Rollout, ConfigValidation) {
  RolloutConfig c;
  c.replan_interval = 0.25;
  EXPECT_THROW(c.check(), DomainError);
  c = {};
  c.epsilon_sem = 0;
  EXPECT_THROW(c.check(), DomainError);
  c = {};
  EXPECT_EQ(c.replan_steps(), 5u);
  EXPECT_EQ(c.epsilon(AttackTarget::Planning), c.epsilon_sem);
  EXPECT_EQ(c.epsilon(AttackTarget::Trajectory), c.epsilon_traj);
}

TEST(Rollout, BenignTracksGroundTruth) {
  Scenario s = fixture::straight();
  s.clean_text = "keep lane and hold your speed";
  const MockModel model({s});
  const auto tr = rollout(s, model, nullptr, {});
  ASSERT_EQ(tr.steps.size(), 61u);
  ASSERT_EQ(tr.replans.size(), 12u);
  for (const auto& st : tr.steps) {
    ASSERT_NEAR(st.ego.pose.x, 10.0 * st.t, 1e-9);
    ASSERT_NEAR(st.ego.pose.y, 0.0, 1e-12);
    ASSERT_NEAR(st.ego.speed, 10.0, 1e-9);
    ASSERT_EQ(st.replan, std::min<std::size_t>(static_cast<std::size_t>(std::lround(st.t * 10)) / 5, 11));
  }
  for (IncidentKind k : kIncidentKinds) EXPECT_FALSE(tr.incidents.first(k).has_value());
  EXPECT_EQ(tr.failed_replans, 0u);
}

TEST(Rollout, ZeroSigmaTwinIsIdentical) {
  const Scenario s = fixture::straight();
  const MockModel model({s});
  CorruptionSpec c;
  c.sigma = 0.0;
  c.seed = 3;
  const auto run = run_closed_loop(s, model, c, TargetSet::all(), {}, BuiltinEvaluator{});
  ASSERT_FALSE(run.error);
  EXPECT_EQ(run.benign, run.perturbed);
  for (AttackTarget t : kAllAttackTargets) {
    for (double d : run.deltas(t)) ASSERT_EQ(d, 0.0) << to_string(t);
    EXPECT_FALSE(closed_loop_success(run, t, {}));
  }
  EXPECT_EQ(run.deltas(AttackTarget::Trajectory).size(), run.benign.steps.size());
  EXPECT_EQ(run.deltas(AttackTarget::All).size(), run.benign.replans.size());
}

TEST(Rollout, DivergenceFromFifthReplan) {
  const Scenario s = fixture::straight();
  const DriftModel model(s.clean_text);
  const auto run = run_closed_loop(s, model, flip_everything(), TargetSet::all(), {},
                                   BuiltinEvaluator{});
  ASSERT_FALSE(run.error);
  const auto& traj = run.deltas(AttackTarget::Trajectory);
  ASSERT_EQ(traj.size(), 61u);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = 0.1 * static_cast<double>(i);
    ASSERT_NEAR(traj[i], std::max(0.0, 2.0 * (t - 2.0)), 1e-9) << i;
  }
  const auto& plan = run.deltas(AttackTarget::Planning);
  ASSERT_EQ(plan.size(), 12u);
  for (std::size_t k = 0; k < plan.size(); ++k) ASSERT_EQ(plan[k], k < 4 ? 0.0 : 1.0);
  EXPECT_TRUE(closed_loop_success(run, AttackTarget::Planning, {}));
  EXPECT_TRUE(closed_loop_success(run, AttackTarget::Trajectory, {}));
  EXPECT_FALSE(closed_loop_success(run, AttackTarget::Dos, {}));
  EXPECT_FALSE(closed_loop_success(run, AttackTarget::Slowdown, {}));
  // 8 diverged replans: k = 7 passes, k = 8 does not
  RolloutConfig c;
  c.k = 7;
  EXPECT_TRUE(closed_loop_success(run, AttackTarget::Planning, c));
  c.k = 8;
  EXPECT_FALSE(closed_loop_success(run, AttackTarget::Planning, c));
  // trajectory exceeds 0.5 m from t = 2.3 on: 38 steps
  c.k = 37;
  EXPECT_TRUE(closed_loop_success(run, AttackTarget::Trajectory, c));
  c.k = 38;
  EXPECT_FALSE(closed_loop_success(run, AttackTarget::Trajectory, c));

  const std::vector<ClosedLoopRun> runs = {run, ClosedLoopRun{}};
  std::vector<ClosedLoopRun> with_error = runs;
  with_error[1].error = "down";
  EXPECT_DOUBLE_EQ(asr_closed(with_error, AttackTarget::Planning, {}), 0.5);
}

TEST(Rollout, DriftEntersOncomingLane) {
  const Scenario s = fixture::straight();
  const DriftModel model(s.clean_text);
  const auto run = run_closed_loop(s, model, flip_everything(), TargetSet::all(), {},
                                   BuiltinEvaluator{});
  // centre crosses y = 2.1 between t = 3.0 (y = 2.0) and t = 3.1 (y = 2.2)
  ASSERT_TRUE(run.perturbed.incidents.wrong_lane.has_value());
  EXPECT_NEAR(*run.perturbed.incidents.wrong_lane, 3.1, 1e-9);
  // and leaves the drivable area past y = 7.3
  ASSERT_TRUE(run.perturbed.incidents.off_road.has_value());
  EXPECT_NEAR(*run.perturbed.incidents.off_road, 5.7, 1e-9);
  EXPECT_FALSE(run.benign.incidents.wrong_lane.has_value());
}

TEST(PreIncident, WindowMeans) {
  const Scenario s = fixture::straight();
  const DriftModel model(s.clean_text);
  const BuiltinEvaluator ev;
  const auto run = run_closed_loop(s, model, flip_everything(), TargetSet::all(), {}, ev);
  const double overall = ev.evaluate(run.perturbed.replans[4].reasoning,
                                     run.benign.replans[4].reasoning).overall;
  ASSERT_GT(overall, 0.0);
  // [2.1, 3.1): ten drifted steps, excess 0.2 .. 2.0
  const auto a = pre_incident_deviation(run.perturbed, run.benign, s, IncidentKind::WrongLane,
                                        1.0, ev);
  EXPECT_EQ(a.steps, 10u);
  EXPECT_NEAR(a.traj_dev, 1.1, 1e-9);
  EXPECT_NEAR(a.reason_dev, overall, 1e-12);
  // [1.1, 3.1): nine clean steps before the replan at 2.0
  const auto b = pre_incident_deviation(run.perturbed, run.benign, s, IncidentKind::WrongLane,
                                        2.0, ev);
  EXPECT_EQ(b.steps, 20u);
  EXPECT_NEAR(b.traj_dev, 0.55, 1e-9);
  EXPECT_NEAR(b.reason_dev, 0.55 * overall, 1e-12);
  // entirely before the divergence
  const auto twin = run_closed_loop(s, model, CorruptionSpec{0.0}, TargetSet::all(), {}, ev);
  EXPECT_THROW(pre_incident_deviation(twin.perturbed, twin.benign, s, IncidentKind::WrongLane,
                                      1.0, ev),
               DomainError);
  EXPECT_THROW(pre_incident_deviation(run.perturbed, run.benign, s, IncidentKind::Collision, 1.0,
                                      ev),
               DomainError);
  EXPECT_THROW(pre_incident_deviation(run.perturbed, run.benign, s, IncidentKind::WrongLane, 0.0,
                                      ev),
               DomainError);
}

TEST(Incidents, SignConvention) {
  // paired collisions average 7.43 s benign and 6.12 s perturbed
  std::vector<SafetyMetrics> benign(4);
  std::vector<SafetyMetrics> pert(4);
  benign[0].collision = 7.0;
  pert[0].collision = 6.0;
  benign[1].collision = 7.86;
  pert[1].collision = 6.24;
  pert[2].collision = 1.0;   // new
  benign[3].collision = 2.0; // resolved
  const auto rows = compare_incidents(benign, pert);
  ASSERT_EQ(rows.size(), kIncidentKinds.size());
  const auto& c = rows[0];
  EXPECT_EQ(c.kind, IncidentKind::Collision);
  EXPECT_EQ(c.benign_count, 3u);
  EXPECT_EQ(c.perturbed_count, 3u);
  EXPECT_EQ(c.new_incidents, 1u);
  EXPECT_EQ(c.resolved, 1u);
  EXPECT_EQ(c.paired, 2u);
  EXPECT_NEAR(*c.avg_benign_s, 7.43, 1e-12);
  EXPECT_NEAR(*c.avg_perturbed_s, 6.12, 1e-12);
  EXPECT_NEAR(*c.delta_s, -1.31, 1e-12);
  EXPECT_FALSE(rows[1].delta_s.has_value());
  EXPECT_THROW(compare_incidents(benign, std::span(pert).first(2)), DomainError);
}

TEST(Trace, TsvShape) {
  const Scenario s = fixture::straight();
  const DriftModel model(s.clean_text);
  const auto spec = flip_everything();
  const auto tr = rollout(s, model, &spec, {});
  std::ostringstream os;
  write_trace_tsv(os, tr);
  std::istringstream in(os.str());
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ASSERT_EQ(std::count(line.begin(), line.end(), '\t'), 13) << line;
    if (rows == 1) EXPECT_EQ(line.rfind("0.000\t0.000000\t0.000000\t", 0), 0u) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 62u);
  EXPECT_NE(os.str().find("SLOW DOWN FOR"), std::string::npos);
}
