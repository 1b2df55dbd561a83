#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "artjoint/asset_model.hpp"
#include "artjoint/behavior_graph.hpp"
#include "artjoint/trajectory.hpp"

namespace artjoint {

/// Constant effort on [t_start, t_end).
struct ConstantForce {
  double value = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  bool operator==(const ConstantForce&) const = default;
};

enum class Interpolation { Step, Linear };

/// Knots (t, value) with strictly increasing t. Zero before the first knot,
/// the last value after the final one; between knots either held (Step) or
/// linearly blended (Linear).
struct PiecewiseForce {
  std::vector<std::pair<double, double>> knots;
  Interpolation interpolation = Interpolation::Step;
  bool operator==(const PiecewiseForce&) const = default;
};

using ForceProfile = std::variant<ConstantForce, PiecewiseForce>;

double force_at(const ForceProfile& profile, double t);
/// Throws InvalidScenario for t_start >= t_end or non-increasing knots.
void check_profile(const ForceProfile& profile, const std::string& context);

struct ForceSchedule {
  std::string joint;  // "<assembly>/<joint>"
  ForceProfile profile;
};

struct InitialJointState {
  std::string joint;
  double q = 0.0;
  double q_dot = 0.0;
  bool s_open = false;
};

struct RewardParams {
  double lambda1 = 0.5;
  double lambda2 = 0.125;
  double lambda3 = 10.0;
  double lambda4 = -0.01;
};

/// Point-agent manipulation task built on top of a scenario.
struct EnvConfig {
  std::string goal_joint;     // "<assembly>/<joint>", closed at its lower bound
  std::string handle_marker;  // "<assembly>/<marker>"
  std::string press_joint;    // optional button the effector can push
  std::string press_marker;
  double contact_radius = 0.02;
  double max_action = 20.0;
  Vec3 effector_start{0.0, 0.0, 0.0};
};

struct Scenario {
  std::vector<AssemblyInstance> assemblies;
  std::vector<InitialJointState> initial_states;
  std::vector<ForceSchedule> forces;
  std::vector<BehaviorRule> behaviors;  // scenario-level, qualified references
  double duration = 1.0;
  double dt = 1e-3;
  std::vector<std::string> recordings;  // joint or marker references
  RewardParams reward;
  std::optional<EnvConfig> env;
};

/// Parses a `.scenario.json` document. Asset references resolve against
/// `base_dir` first, then the fixture search path. Throws artjoint::Error.
Scenario parse_scenario(const std::string& text, const std::string& base_dir);
Scenario load_scenario_file(const std::string& path);

/// Directories searched for assets and fixtures: ARTJOINT_FIXTURES when set,
/// otherwise the fixtures shipped with the source tree.
std::vector<std::string> fixture_search_path();
/// Returns an existing file path or throws Io.
std::string resolve_fixture_path(const std::string& name, const std::string& base_dir = "");

/// Throws InvalidScenario / UnresolvedReference when something does not resolve.
void check_scenario(const Scenario& s);

/// World with the scenario's initial states applied.
WorldState initial_world(const Scenario& s);

/// World position of a marker reference "<assembly>/<marker>".
Eigen::Vector3d marker_position(const Scenario& s, const WorldState& world, const std::string& ref);

struct RunResult {
  Trajectory trajectory;
  EventLog log;
  WorldState final_world;
};

/// Fixed-step loop: external forces, one joint step each, behavior
/// evaluation on the post-step states, effect application, recording.
RunResult run(const Scenario& s);

struct RewardState {
  Eigen::Vector3d effector_position = Eigen::Vector3d::Zero();
  Eigen::Vector3d effector_velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d handle_position = Eigen::Vector3d::Zero();
  double goal_q = 0.0;
  double goal_lower = 0.0;
  double goal_upper = 1.0;
};

struct RewardTerms {
  double r_dst = 0.0;   // exp(-distance to handle)
  double r_dir = 0.0;   // max(0, cos) between velocity and handle direction
  double r_cls = 0.0;   // closure fraction in [0, 1]
  double r_smth = 0.0;  // squared action norm
  double total = 0.0;
};

RewardTerms reward_terms(const RewardState& state, const Eigen::Vector3d& action, const RewardParams& p);
double reward(const RewardState& state, const Eigen::Vector3d& action, const RewardParams& p);

struct Observation {
  Eigen::Vector3d effector_position = Eigen::Vector3d::Zero();
  Eigen::Vector3d effector_velocity = Eigen::Vector3d::Zero();
  double goal_q = 0.0;
  double goal_q_dot = 0.0;
  Eigen::Vector3d handle_position = Eigen::Vector3d::Zero();

  bool operator==(const Observation&) const = default;
};

struct EnvStep {
  Observation observation;
  double reward = 0.0;
  RewardTerms terms;
  bool done = false;
};

/// Reset/step facade around a scenario with an `env` section. The effector is
/// a unit-mass point driven by a 3-D force; pushing it against the press
/// marker transmits the force component along the button axis to that joint.
class Environment {
 public:
  explicit Environment(Scenario scenario);

  Observation reset();
  /// Throws ActionOutOfBounds when |action| exceeds the configured maximum.
  EnvStep step(const Eigen::Vector3d& action);

  double time() const { return static_cast<double>(tick_) * scenario_.dt; }
  bool done() const { return done_; }
  const WorldState& world() const { return world_; }
  const EventLog& log() const { return log_; }
  const EnvConfig& config() const { return *scenario_.env; }
  Observation observe() const;
  RewardState reward_state() const;
  /// World position of the press marker and the direction that depresses the
  /// button; nullopt when the scenario has no press joint.
  std::optional<std::pair<Eigen::Vector3d, Eigen::Vector3d>> press_contact() const;

 private:
  Scenario scenario_;
  BehaviorGraph graph_;
  WorldState world_;
  EventLog log_;
  std::size_t goal_ = 0;
  std::optional<std::size_t> press_;
  std::size_t tick_ = 0;
  std::size_t max_ticks_ = 0;
  bool done_ = false;
  Eigen::Vector3d position_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity_ = Eigen::Vector3d::Zero();
};

}  // namespace artjoint
