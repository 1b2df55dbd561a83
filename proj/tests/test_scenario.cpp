#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "artjoint/error.hpp"
#include "artjoint/scenario.hpp"
#include "support.hpp"

using namespace artjoint;
using testing_support::fixture;
using testing_support::load_fixture_scenario;
using testing_support::Rng;

namespace {

ErrorCode scenario_error(const std::string& text) {
  try {
    check_scenario(parse_scenario(text, ARTJOINT_TEST_FIXTURES));
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected a failure";
  return ErrorCode::Io;
}

Trajectory ramp_trajectory(std::size_t n, double dt, double slope) {
  Trajectory t;
  std::vector<double> q, v;
  for (std::size_t k = 0; k < n; ++k) {
    t.t.push_back(static_cast<double>(k) * dt);
    q.push_back(slope * static_cast<double>(k) * dt);
    v.push_back(std::sin(static_cast<double>(k)));
  }
  t.add_channel("a/j.q", q);
  t.add_channel("a/j.q_dot", v);
  return t;
}

}  // namespace

TEST(Forces, ConstantWindowIsHalfOpen) {
  const ForceProfile p = ConstantForce{2.0, 1.0, 2.0};
  EXPECT_EQ(force_at(p, 0.999), 0.0);
  EXPECT_EQ(force_at(p, 1.0), 2.0);
  EXPECT_EQ(force_at(p, 1.999), 2.0);
  EXPECT_EQ(force_at(p, 2.0), 0.0);
}

TEST(Forces, PiecewiseStepAndLinear) {
  PiecewiseForce p{{{1.0, 2.0}, {2.0, 4.0}}, Interpolation::Step};
  EXPECT_EQ(force_at(p, 0.5), 0.0);
  EXPECT_EQ(force_at(p, 1.5), 2.0);
  EXPECT_EQ(force_at(p, 3.0), 4.0);
  p.interpolation = Interpolation::Linear;
  EXPECT_DOUBLE_EQ(force_at(p, 1.5), 3.0);
  EXPECT_THROW(check_profile(ConstantForce{1, 2, 2}, "x"), Error);
  EXPECT_THROW(check_profile(PiecewiseForce{{{1, 0}, {1, 1}}, Interpolation::Step}, "x"), Error);
}

TEST(ScenarioFile, FixturesLoadAndCheck) {
  for (const char* name : {"drawer", "drawer_sysid", "microwave", "microwave_sysid", "oven", "oven_sysid", "trashcan",
                           "trashcan_sysid", "trashcan_env"}) {
    const Scenario s = load_fixture_scenario(std::string(name) + ".scenario.json");
    EXPECT_NO_THROW(check_scenario(s)) << name;
  }
}

TEST(ScenarioFile, RejectsBadDocuments) {
  EXPECT_EQ(scenario_error(R"({"assemblies": [{"name": "d", "asset": "drawer.artjoint.json"}], "duration": 0})"),
            ErrorCode::InvalidScenario);
  EXPECT_EQ(scenario_error(
                R"({"assemblies": [{"name": "d", "asset": "drawer.artjoint.json"}], "duration": 1, "dt": 0})"),
            ErrorCode::NonPositiveDt);
  EXPECT_EQ(scenario_error(R"({"assemblies": [{"name": "d", "asset": "drawer.artjoint.json"}], "duration": 1,
                               "recordings": ["d/knob"]})"),
            ErrorCode::UnresolvedReference);
  EXPECT_EQ(scenario_error(R"({"assemblies": [{"name": "d", "asset": "drawer.artjoint.json"}], "duration": 1,
                               "forces": [{"joint": "d/hinge", "profile": {"type": "constant", "value": 1,
                               "t_start": 0, "t_end": 1}}]})"),
            ErrorCode::UnresolvedReference);
  EXPECT_EQ(scenario_error(R"({"assemblies": [{"name": "d", "asset": "nowhere.artjoint.json"}], "duration": 1})"),
            ErrorCode::Io);
  EXPECT_EQ(scenario_error(R"({"assemblies": [], "duration": 1, "extra": true})"), ErrorCode::SyntaxError);
}

TEST(ScenarioFile, FixtureSearchPathHonorsEnvironment) {
  const auto tmp = std::filesystem::temp_directory_path() / "artjoint_fixture_env";
  std::filesystem::create_directories(tmp);
  std::filesystem::copy_file(fixture("oven.artjoint.json"), tmp / "special.artjoint.json",
                             std::filesystem::copy_options::overwrite_existing);
  ::setenv("ARTJOINT_FIXTURES", tmp.c_str(), 1);
  EXPECT_EQ(fixture_search_path(), std::vector<std::string>{tmp.string()});
  EXPECT_EQ(resolve_fixture_path("special.artjoint.json"), (tmp / "special.artjoint.json").string());
  ::unsetenv("ARTJOINT_FIXTURES");
  EXPECT_THROW(resolve_fixture_path("special.artjoint.json"), Error);
}

TEST(Run, TrajectoryShape) {
  const Scenario s = load_fixture_scenario("drawer.scenario.json");
  const RunResult r = run(s);
  EXPECT_EQ(r.trajectory.size(), 3001u);
  EXPECT_EQ(r.trajectory.channels,
            (std::vector<std::string>{"drawer/slide.q", "drawer/slide.q_dot", "drawer/handle.x", "drawer/handle.y",
                                      "drawer/handle.z"}));
  for (std::size_t k = 0; k < r.trajectory.size(); ++k) ASSERT_EQ(r.trajectory.t[k], static_cast<double>(k) * 1e-3);
  // The handle rides the slide along x.
  const auto& q = r.trajectory.channel("drawer/slide.q");
  const auto& x = r.trajectory.channel("drawer/handle.x");
  EXPECT_NEAR(x.back() - x.front(), q.back() - q.front(), 1e-12);
}

TEST(Run, DrawerPullIsMonotoneAndAgreesWithFineStep) {
  Scenario s = load_fixture_scenario("drawer.scenario.json");
  const RunResult coarse = run(s);
  const auto& q = coarse.trajectory.channel("drawer/slide.q");
  for (std::size_t k = 1; k < q.size(); ++k) ASSERT_GE(q[k], q[k - 1]) << k;

  s.dt /= 10.0;
  const RunResult fine = run(s);
  const auto& qf = fine.trajectory.channel("drawer/slide.q");
  for (std::size_t k = 1; k < qf.size(); ++k) ASSERT_GE(qf[k], qf[k - 1]) << k;
  EXPECT_LE(compare(fine.trajectory, coarse.trajectory).per_channel[0].max_abs, 5e-3);
}

TEST(Run, ZeroForceKeepsFixturesAtRest) {
  for (const char* name : {"drawer", "microwave", "oven", "trashcan"}) {
    Scenario s = load_fixture_scenario(std::string(name) + ".scenario.json");
    s.forces.clear();
    s.duration = 0.5;
    const RunResult r = run(s);
    for (std::size_t c = 0; c < r.trajectory.channels.size(); ++c)
      for (const double v : r.trajectory.values[c]) ASSERT_EQ(v, r.trajectory.values[c].front()) << name;
    EXPECT_TRUE(r.log.empty());
  }
}

TEST(Run, MicrowaveButtonOpensDoor) {
  const RunResult r = run(load_fixture_scenario("microwave.scenario.json"));
  int opens = 0;
  for (const auto& e : r.log)
    if (e.type == "set_open_state") ++opens;
  EXPECT_EQ(opens, 1);
  const JointSlot& door = r.final_world.joints[*find_joint_slot(r.final_world, "microwave/door")];
  EXPECT_TRUE(door.state.s_open);
  EXPECT_LE(std::abs(door.state.q - door.spec.q_upper_bound), 1e-3);
  EXPECT_EQ(r.final_world.properties.at("microwave/body").at("light_on"), 1.0);
}

TEST(Run, ScenarioLevelRulesCrossAssemblies) {
  Scenario s = load_fixture_scenario("microwave.scenario.json");
  s.assemblies.push_back({"kitchen_drawer", load_asset_file(fixture("drawer.artjoint.json")), {}});
  s.behaviors.push_back(
      {"pop", SignalReceived{"door_open"}, {SetFixedTarget{"kitchen_drawer/slide", 0.3}}});
  s.behaviors.push_back({"notify",
                         ThresholdCrossed{"microwave/door", 1.0, CrossingDirection::Rising},
                         {EmitSignal{"door_open"}}});
  s.recordings.push_back("kitchen_drawer/slide");
  const RunResult r = run(s);
  EXPECT_GT(r.trajectory.channel("kitchen_drawer/slide.q").back(), 0.2);
}

TEST(Run, Deterministic) {
  for (const char* name : {"drawer", "microwave", "oven", "trashcan"}) {
    const Scenario s = load_fixture_scenario(std::string(name) + ".scenario.json");
    EXPECT_EQ(to_csv(run(s).trajectory), to_csv(run(s).trajectory)) << name;
    EXPECT_EQ(run(s).log, run(s).log) << name;
  }
}

TEST(Compare, IdenticalIsZero) {
  const Trajectory a = ramp_trajectory(100, 0.01, 1.0);
  const Comparison c = compare(a, a);
  EXPECT_EQ(c.rmse, 0.0);
  EXPECT_EQ(c.max_abs, 0.0);
  EXPECT_EQ(c.samples, 100u);
}

TEST(Compare, ConstantOffset) {
  const Trajectory a = ramp_trajectory(50, 0.01, 1.0);
  Trajectory b = a;
  for (double& v : b.values[0]) v += 0.1;
  const Comparison c = compare(a, b);
  EXPECT_NEAR(c.per_channel[0].rmse, 0.1, 1e-15);
  EXPECT_NEAR(c.per_channel[0].max_abs, 0.1, 1e-15);
  EXPECT_EQ(c.per_channel[1].rmse, 0.0);
}

// Two-pass oracle: resample by hand, then accumulate.
TEST(Compare, MatchesIndependentComputation) {
  Rng rng(51);
  for (int trial = 0; trial < 50; ++trial) {
    Trajectory a = ramp_trajectory(200, 0.005, rng.uniform(-1, 1));
    Trajectory b = ramp_trajectory(90, 0.011, rng.uniform(-1, 1));
    for (auto& ch : a.values)
      for (double& v : ch) v += rng.uniform(-0.1, 0.1);
    for (auto& ch : b.values)
      for (double& v : ch) v += rng.uniform(-0.1, 0.1);
    const Comparison c = compare(a, b);

    std::vector<double> diffs;
    for (std::size_t ch = 0; ch < 2; ++ch) {
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double x = a.t[k];
        if (x > b.t.back()) continue;
        std::size_t i = 0;
        while (i + 1 < b.size() && b.t[i + 1] < x) ++i;
        double other = b.values[ch][i];
        if (b.t[i] != x) {
          const double w = (x - b.t[i]) / (b.t[i + 1] - b.t[i]);
          other = b.values[ch][i] * (1 - w) + b.values[ch][i + 1] * w;
        }
        diffs.push_back(a.values[ch][k] - other);
      }
    }
    double mean_sq = 0;
    for (const double d : diffs) mean_sq += d * d;
    mean_sq /= static_cast<double>(diffs.size());
    ASSERT_NEAR(c.rmse, std::sqrt(mean_sq), 1e-12 * std::max(1.0, c.rmse));
  }
}

TEST(Compare, SymmetricOnSharedBase) {
  Rng rng(52);
  Trajectory a = ramp_trajectory(100, 0.01, 1.0);
  Trajectory b = a;
  for (auto& ch : b.values)
    for (double& v : ch) v += rng.uniform(-1, 1);
  EXPECT_EQ(compare(a, b).rmse, compare(b, a).rmse);
}

TEST(Compare, Errors) {
  const Trajectory a = ramp_trajectory(10, 0.01, 1.0);
  Trajectory late = a;
  for (double& t : late.t) t += 10.0;
  try {
    compare(a, late);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DisjointTimeSpans);
  }
  Trajectory renamed = a;
  renamed.channels[0] = "b/j.q";
  try {
    compare(a, renamed);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MismatchedChannels);
  }
}

TEST(Csv, RoundTripIsExact) {
  Rng rng(53);
  Trajectory a = ramp_trajectory(100, 1.0 / 90.0, 0.1 + 0.2);
  for (double& v : a.values[1]) v = rng.awkward(-1e6, 1e6);
  EXPECT_EQ(from_csv(to_csv(a)), a);
  const auto path = std::filesystem::temp_directory_path() / "artjoint_roundtrip.csv";
  export_csv(a, path.string());
  EXPECT_EQ(import_csv(path.string()), a);
}

TEST(Csv, EmptyTrajectoryIsHeaderOnly) {
  Trajectory a;
  a.add_channel("a/j.q", {});
  EXPECT_EQ(to_csv(a), "t,a/j.q\n");
  EXPECT_EQ(from_csv(to_csv(a)), a);
}

TEST(Csv, FixtureRunRoundTrips) {
  const RunResult r = run(load_fixture_scenario("oven.scenario.json"));
  EXPECT_EQ(from_csv(to_csv(r.trajectory)), r.trajectory);
}

TEST(Csv, MalformedInput) {
  for (const char* bad : {"", "x,a\n0,1\n", "t,a\n0,1,2\n", "t,a\n0,abc\n", "t,a\n1,0\n1,0\n", "t,a,a\n0,1,1\n",
                          "t,\n0,1\n"}) {
    try {
      from_csv(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MalformedCsv) << bad;
    }
  }
}

TEST(Average, PerSampleMean) {
  Trajectory a = ramp_trajectory(11, 0.1, 1.0);
  Trajectory b = ramp_trajectory(11, 0.1, 3.0);
  const std::vector<Trajectory> trials{a, b};
  const Trajectory m = average(trials);
  ASSERT_EQ(m.size(), 11u);
  for (std::size_t k = 0; k < m.size(); ++k) EXPECT_NEAR(m.values[0][k], 2.0 * a.t[k], 1e-15);
  b.channels[0] = "other";
  EXPECT_THROW(average(std::vector<Trajectory>{a, b}), Error);
}

TEST(Reward, DefaultWeights) {
  const RewardParams p;
  EXPECT_EQ(p.lambda1, 0.5);
  EXPECT_EQ(p.lambda2, 0.125);
  EXPECT_EQ(p.lambda3, 10.0);
  EXPECT_EQ(p.lambda4, -0.01);
}

TEST(Reward, GoalState) {
  RewardState s;
  s.handle_position = {0.3, 0.1, 0.6};
  s.effector_position = s.handle_position;
  s.effector_velocity = {0, 0, -0.2};
  s.goal_q = 0.0;
  s.goal_lower = 0.0;
  s.goal_upper = 1.3;
  EXPECT_DOUBLE_EQ(reward(s, Eigen::Vector3d::Zero(), RewardParams{}), 10.625);
}

TEST(Reward, FarAndOpenLeavesOnlySmoothness) {
  RewardState s;
  s.handle_position = {1e6, 0, 0};
  s.effector_velocity = {-1, 0, 0};
  s.goal_q = 1.3;
  s.goal_upper = 1.3;
  const Eigen::Vector3d a(1, 2, 2);
  EXPECT_DOUBLE_EQ(reward(s, a, RewardParams{}), -0.09);
}

TEST(Reward, TermsStayInRange) {
  Rng rng(54);
  RewardParams p;
  p.lambda4 = 0.0;
  for (int i = 0; i < 1000; ++i) {
    RewardState s;
    s.effector_position = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    s.effector_velocity = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    s.handle_position = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    s.goal_lower = rng.uniform(-1, 0);
    s.goal_upper = rng.uniform(0.1, 2);
    s.goal_q = rng.uniform(s.goal_lower - 1, s.goal_upper + 1);
    const Eigen::Vector3d a(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    const RewardTerms t = reward_terms(s, a, p);
    ASSERT_GE(t.r_cls, 0.0);
    ASSERT_LE(t.r_cls, 1.0);
    ASSERT_GE(t.r_dir, 0.0);
    ASSERT_LE(t.r_dir, 1.0);
    ASSERT_GT(t.r_dst, 0.0);
    ASSERT_LE(t.r_dst, 1.0);
    ASSERT_GE(t.total, 0.0);
  }
}

TEST(Environment, IdleEpisodeTimesOut) {
  Scenario s = load_fixture_scenario("trashcan_env.scenario.json");
  s.duration = 1.0;
  Environment env(s);
  env.reset();
  EnvStep last;
  std::size_t steps = 0;
  while (!env.done()) {
    last = env.step(Eigen::Vector3d::Zero());
    ASSERT_EQ(last.terms.r_cls, 0.0);
    ++steps;
  }
  EXPECT_EQ(steps, 1000u);
  EXPECT_TRUE(last.done);
}

TEST(Environment, ScriptedPressClosesLid) {
  const Scenario s = load_fixture_scenario("trashcan_env.scenario.json");
  Environment env(s);
  env.reset();
  EnvStep last;
  while (!env.done()) {
    // Approach above the button, then push straight down on it.
    const auto contact = env.press_contact();
    ASSERT_TRUE(contact.has_value());
    const Observation o = env.observe();
    Eigen::Vector3d a = 80.0 * (contact->first - o.effector_position) - 15.0 * o.effector_velocity;
    if ((o.effector_position - contact->first).norm() <= env.config().contact_radius) a = 4.0 * contact->second;
    if (a.norm() > env.config().max_action) a *= env.config().max_action / a.norm();
    last = env.step(a);
  }
  EXPECT_EQ(last.terms.r_cls, 1.0);
  EXPECT_LT(env.time(), s.duration);
  bool closed_by_rule = false;
  for (const auto& e : env.log()) closed_by_rule = closed_by_rule || e.rule == "trashcan/close_lid";
  EXPECT_TRUE(closed_by_rule);
}

TEST(Environment, ResetIsRepeatable) {
  Environment env(load_fixture_scenario("trashcan_env.scenario.json"));
  const Observation first = env.reset();
  for (int k = 0; k < 50; ++k) env.step(Eigen::Vector3d(1, 0, -2));
  EXPECT_EQ(env.reset(), first);
  EXPECT_EQ(env.time(), 0.0);
}

TEST(Environment, RejectsOversizedActions) {
  Environment env(load_fixture_scenario("trashcan_env.scenario.json"));
  env.reset();
  try {
    env.step(Eigen::Vector3d(100, 0, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ActionOutOfBounds);
  }
  EXPECT_THROW(Environment(load_fixture_scenario("drawer.scenario.json")), Error);
}
