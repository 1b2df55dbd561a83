#include "artjoint/error.hpp"
#include "artjoint/scenario.hpp"

namespace artjoint {

Environment::Environment(Scenario scenario) : scenario_(std::move(scenario)) {
  if (!scenario_.env) throw Error(ErrorCode::InvalidScenario, "/env", "scenario has no env section");
  check_scenario(scenario_);
  graph_ = bind_rules(scenario_.assemblies, scenario_.behaviors);
  world_ = initial_world(scenario_);
  goal_ = *find_joint_slot(world_, scenario_.env->goal_joint);
  if (!scenario_.env->press_joint.empty()) press_ = find_joint_slot(world_, scenario_.env->press_joint);
  max_ticks_ = step_count(scenario_.duration, scenario_.dt);
  reset();
}

Observation Environment::reset() {
  world_ = initial_world(scenario_);
  log_.clear();
  tick_ = 0;
  done_ = false;
  const Vec3& start = scenario_.env->effector_start;
  position_ = Eigen::Vector3d(start[0], start[1], start[2]);
  velocity_.setZero();
  return observe();
}

Observation Environment::observe() const {
  Observation obs;
  obs.effector_position = position_;
  obs.effector_velocity = velocity_;
  obs.goal_q = world_.joints[goal_].state.q;
  obs.goal_q_dot = world_.joints[goal_].state.q_dot;
  obs.handle_position = marker_position(scenario_, world_, scenario_.env->handle_marker);
  return obs;
}

RewardState Environment::reward_state() const {
  RewardState rs;
  rs.effector_position = position_;
  rs.effector_velocity = velocity_;
  rs.handle_position = marker_position(scenario_, world_, scenario_.env->handle_marker);
  const JointSlot& goal = world_.joints[goal_];
  rs.goal_q = goal.state.q;
  rs.goal_lower = goal.spec.q_lower_bound;
  rs.goal_upper = goal.spec.q_upper_bound;
  return rs;
}

namespace {

// World direction in which the press joint's coordinate increases.
Eigen::Vector3d press_axis_world(const Scenario& s, const WorldState& world, std::size_t slot_index) {
  const JointSlot& slot = world.joints[slot_index];
  const AssemblyInstance& inst = s.assemblies[slot.assembly];
  JointValues q;
  for (const auto& other : world.joints)
    if (other.assembly == slot.assembly) q[other.spec.id] = other.state.q;
  const FkResult fk = forward_kinematics(inst.asset, q);
  const Eigen::Vector3d axis(slot.spec.axis[0], slot.spec.axis[1], slot.spec.axis[2]);
  return inst.world_pose.to_isometry().linear() * fk.module_poses.at(slot.spec.parent_module).linear() * axis;
}

}  // namespace

std::optional<std::pair<Eigen::Vector3d, Eigen::Vector3d>> Environment::press_contact() const {
  if (!press_) return std::nullopt;
  return std::make_pair(marker_position(scenario_, world_, scenario_.env->press_marker),
                        press_axis_world(scenario_, world_, *press_));
}

EnvStep Environment::step(const Eigen::Vector3d& action) {
  if (done_) throw Error(ErrorCode::InvalidScenario, "", "episode finished; call reset()");
  const EnvConfig& cfg = *scenario_.env;
  if (!(action.norm() <= cfg.max_action))
    throw Error(ErrorCode::ActionOutOfBounds, "", "action norm exceeds " + std::to_string(cfg.max_action));

  const double dt = scenario_.dt;
  const double t = static_cast<double>(tick_) * dt;

  Eigen::Vector3d effector_force = action;
  double press_force = 0.0;
  std::optional<Eigen::Vector3d> contact;
  if (press_) {
    contact = marker_position(scenario_, world_, cfg.press_marker);
    if ((position_ - *contact).norm() > cfg.contact_radius) {
      contact.reset();
    } else {
      const Eigen::Vector3d axis = press_axis_world(scenario_, world_, *press_);
      press_force = std::max(0.0, action.dot(axis));
      effector_force -= press_force * axis;
      const double into = velocity_.dot(axis);
      if (into > 0.0) velocity_ -= into * axis;
    }
  }

  std::vector<JointState> prev;
  prev.reserve(world_.joints.size());
  for (const auto& slot : world_.joints) prev.push_back(slot.state);
  for (std::size_t j = 0; j < world_.joints.size(); ++j) {
    double f_ext = press_ && *press_ == j ? press_force : 0.0;
    for (const auto& f : scenario_.forces)
      if (f.joint == world_.joints[j].path) f_ext += force_at(f.profile, t);
    world_.joints[j].state = artjoint::step(world_.joints[j].state, world_.joints[j].spec, f_ext, dt);
  }
  std::vector<JointState> next;
  next.reserve(world_.joints.size());
  for (const auto& slot : world_.joints) next.push_back(slot.state);

  ++tick_;
  Evaluation ev = evaluate(graph_, prev, next, time());
  world_ = apply_effects(ev.effects, std::move(world_));
  log_.insert(log_.end(), ev.log.begin(), ev.log.end());

  // An effector in contact rides along with the button it is pressing.
  if (contact) position_ += marker_position(scenario_, world_, cfg.press_marker) - *contact;
  velocity_ += effector_force * dt;
  position_ += velocity_ * dt;

  EnvStep out;
  out.terms = reward_terms(reward_state(), action, scenario_.reward);
  out.reward = out.terms.total;
  out.observation = observe();
  done_ = out.terms.r_cls >= 1.0 || tick_ >= max_ticks_;
  out.done = done_;
  return out;
}

}  // namespace artjoint
