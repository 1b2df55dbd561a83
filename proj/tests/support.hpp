#pragma once

#include <cmath>
#include <random>
#include <string>

#include "artjoint/asset_model.hpp"
#include "artjoint/scenario.hpp"

namespace testing_support {

inline std::string fixture(const std::string& name) { return std::string(ARTJOINT_TEST_FIXTURES) + "/" + name; }

inline artjoint::Scenario load_fixture_scenario(const std::string& name) {
  return artjoint::load_scenario_file(fixture(name));
}

/// A drive-free, friction-free prismatic joint on [-10, 10].
inline artjoint::JointSpec free_joint() {
  artjoint::JointSpec j;
  j.id = "j";
  j.parent_module = "base";
  j.child_module = "part";
  j.q_lower_bound = -10.0;
  j.q_upper_bound = 10.0;
  j.effective_inertia = 1.0;
  return j;
}

/// Minimal parent/child assembly around one joint.
inline artjoint::Assembly single_joint_assembly(const artjoint::JointSpec& j) {
  artjoint::Assembly a;
  a.id = "single";
  a.category = "test";
  a.root_module = j.parent_module;
  a.modules.push_back({j.parent_module, {}, 1.0, ""});
  a.modules.push_back({j.child_module, {}, 1.0, ""});
  a.joints.push_back(j);
  return a;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
  /// Values chosen to stress decimal round-tripping.
  double awkward(double lo, double hi) {
    const double v = uniform(lo, hi);
    switch (integer(0, 4)) {
      case 0: return v;
      case 1: return std::nextafter(v, hi);
      case 2: return lo + (hi - lo) / 3.0;
      case 3: return lo + (hi - lo) * 1e-7 * uniform(0.0, 1.0);
      default: return v * (1.0 + 1e-15);
    }
  }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

inline artjoint::Vec3 random_unit(Rng& rng) {
  while (true) {
    const double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1), z = rng.uniform(-1, 1);
    const double n = std::sqrt(x * x + y * y + z * z);
    if (n > 0.1) return {x / n, y / n, z / n};
  }
}

inline artjoint::Pose random_pose(Rng& rng) {
  artjoint::Pose p;
  p.position = {rng.awkward(-1, 1), rng.awkward(-1, 1), rng.awkward(-1, 1)};
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Vector4d q(g(rng.engine()), g(rng.engine()), g(rng.engine()), g(rng.engine()));
  q.normalize();
  p.orientation = {q[0], q[1], q[2], q[3]};
  return p;
}

/// Random simulation-ready assembly: a tree of modules, every stiffness and
/// target variant, markers and behavior rules.
inline artjoint::Assembly random_assembly(Rng& rng, int index) {
  using namespace artjoint;
  Assembly a;
  a.id = "asset_" + std::to_string(index);
  a.category = rng.coin() ? "cabinet" : "appliance";
  a.base_frame = random_pose(rng);
  const int n = rng.integer(1, 6);
  for (int m = 0; m < n; ++m)
    a.modules.push_back({"m" + std::to_string(m), random_pose(rng), rng.awkward(0.01, 30.0), rng.coin() ? "pull" : ""});
  a.root_module = "m0";
  for (int m = 1; m < n; ++m) {
    JointSpec j;
    j.id = "j" + std::to_string(m);
    j.kind = rng.coin() ? JointKind::Prismatic : JointKind::Revolute;
    j.parent_module = "m" + std::to_string(rng.integer(0, m - 1));
    j.child_module = "m" + std::to_string(m);
    j.axis = random_unit(rng);
    j.anchor = {rng.awkward(-1, 1), rng.awkward(-1, 1), rng.awkward(-1, 1)};
    j.q_lower_bound = rng.awkward(-1.0, 0.0);
    j.q_upper_bound = rng.awkward(0.1, 2.0);
    j.damping_D = rng.awkward(0.0, 5.0);
    j.mu_s = rng.awkward(0.0, 0.5);
    j.coulomb_floor = rng.coin() ? 0.0 : rng.awkward(0.0, 1.0);
    j.effective_inertia = rng.awkward(0.01, 3.0);
    const double thr = rng.uniform(j.q_lower_bound, j.q_upper_bound);
    if (rng.coin()) {
      j.stiffness = ConstantStiffness{rng.awkward(0.0, 100.0)};
    } else {
      const double k_low = rng.awkward(0.0, 5.0);
      j.stiffness = ScheduledStiffness{k_low + rng.awkward(0.0, 50.0), k_low, rng.awkward(0.0, 50.0),
                                       rng.awkward(0.0, 40.0), rng.awkward(0.0, 10.0), thr};
    }
    if (rng.coin())
      j.target_policy = FixedTarget{rng.uniform(j.q_lower_bound, j.q_upper_bound)};
    else
      j.target_policy = LatchTarget{thr};
    j.target_velocity = rng.coin() ? 0.0 : rng.awkward(-1.0, 1.0);
    a.joints.push_back(j);
  }
  const int markers = rng.integer(0, 3);
  for (int k = 0; k < markers; ++k)
    a.markers.push_back({"m" + std::to_string(rng.integer(0, n - 1)), "mk" + std::to_string(k),
                         {rng.awkward(-1, 1), rng.awkward(-1, 1), rng.awkward(-1, 1)}});
  if (!a.joints.empty()) {
    const int rules = rng.integer(0, 3);
    for (int r = 0; r < rules; ++r) {
      const JointSpec& j = a.joints[static_cast<std::size_t>(rng.integer(0, static_cast<int>(a.joints.size()) - 1))];
      BehaviorRule rule;
      rule.id = "rule" + std::to_string(r);
      if (rng.coin())
        rule.trigger = ThresholdCrossed{j.id, rng.awkward(j.q_lower_bound, j.q_upper_bound),
                                        rng.coin() ? CrossingDirection::Rising : CrossingDirection::Falling};
      else
        rule.trigger = SignalReceived{"sig" + std::to_string(rng.integer(0, 3))};
      rule.effects.push_back(SetOpenState{j.id, rng.coin()});
      if (rng.coin()) rule.effects.push_back(SetFixedTarget{j.id, rng.uniform(j.q_lower_bound, j.q_upper_bound)});
      if (rng.coin()) rule.effects.push_back(EmitSignal{"sig" + std::to_string(rng.integer(0, 3))});
      if (rng.coin()) rule.effects.push_back(SetProperty{"m0", "emissive", rng.awkward(0.0, 1.0)});
      a.behaviors.push_back(rule);
    }
  }
  return a;
}

}  // namespace testing_support
