#include <algorithm>
#include <cmath>

#include "artjoint/error.hpp"
#include "artjoint/joint_dynamics.hpp"

namespace artjoint {

double stiffness_at(const StiffnessProfile& profile, double q, bool s_open, JointBounds bounds) {
  if (const auto* c = std::get_if<ConstantStiffness>(&profile)) return std::max(0.0, c->k);
  const auto& s = std::get<ScheduledStiffness>(profile);
  double k = 0.0;
  if (q <= bounds.lower) {
    k = s.k_high;
  } else if (q <= s.q_threshold) {
    const double travel = q - bounds.lower;
    k = s_open ? s.k_high - s.alpha * travel : s.k_low + s.k_max * std::exp(-s.lambda * travel);
  } else {
    k = s.k_low;
  }
  return std::max(0.0, k);
}

double target_at(const TargetPolicy& policy, double q, bool s_open, double prev_target, JointBounds bounds) {
  if (const auto* f = std::get_if<FixedTarget>(&policy)) return f->q_target;
  const double threshold = std::get<LatchTarget>(policy).q_threshold;
  if (q > threshold && s_open) return bounds.upper;
  if (q < threshold && !s_open) return bounds.lower;
  return prev_target;
}

double drive_effort(const JointState& state, const JointSpec& spec) {
  const JointBounds b = bounds_of(spec);
  const double k = stiffness_at(spec.stiffness, state.q, state.s_open, b);
  const double target = target_at(spec.target_policy, state.q, state.s_open, state.held_target, b);
  return k * (target - state.q) + spec.damping_D * (spec.target_velocity - state.q_dot);
}

double breakaway_threshold(const JointSpec& spec, double tau_drive) {
  return spec.mu_s * std::abs(tau_drive) + spec.coulomb_floor;
}

FrictionResult friction_effort(const JointState& state, const JointSpec& spec, double tau_drive, double f_ext) {
  if (state.q_dot != 0.0) return {-spec.damping_D * state.q_dot, FrictionRegime::Kinetic};
  const double threshold = breakaway_threshold(spec, tau_drive);
  if (std::abs(f_ext) <= threshold) return {-f_ext, FrictionRegime::Static};
  return {f_ext > 0.0 ? -threshold : threshold, FrictionRegime::Kinetic};
}

EffortBreakdown efforts(const JointState& state, const JointSpec& spec, double f_ext) {
  EffortBreakdown e;
  e.tau_drive = drive_effort(state, spec);
  e.f_ext = f_ext;
  // Stiction resists everything that would set the joint moving, the drive
  // included; a drive alone can therefore hold or break away a resting joint.
  const FrictionResult fr = friction_effort(state, spec, e.tau_drive, e.tau_drive + f_ext);
  e.f_friction = fr.effort;
  e.regime = fr.regime;
  e.net = (e.tau_drive + e.f_ext) + e.f_friction;
  return e;
}

JointState step(const JointState& state, const JointSpec& spec, double f_ext, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, spec.id, "dt must be positive");
  if (dt > kMaxTimestep) throw Error(ErrorCode::TimestepTooLarge, spec.id, "dt must not exceed 0.01 s");

  const JointBounds b = bounds_of(spec);
  JointState current = state;
  current.held_target = target_at(spec.target_policy, state.q, state.s_open, state.held_target, b);

  const EffortBreakdown e = efforts(current, spec, f_ext);
  JointState next = current;
  if (e.regime == FrictionRegime::Static) {
    next.q_dot = 0.0;
    next.regime = FrictionRegime::Static;
    return next;
  }

  double v = current.q_dot + (e.net / spec.effective_inertia) * dt;
  // A velocity sign change inside the step means the joint came to rest;
  // the next step decides between sticking and breaking away again.
  if (current.q_dot != 0.0 && v * current.q_dot <= 0.0) v = 0.0;
  double q = current.q + v * dt;
  if (q >= b.upper && v >= 0.0) {
    q = std::min(q, b.upper);
    if (q == b.upper) v = 0.0;
  }
  if (q <= b.lower && v <= 0.0) {
    q = std::max(q, b.lower);
    if (q == b.lower) v = 0.0;
  }
  next.q = q;
  next.q_dot = v;
  next.regime = FrictionRegime::Kinetic;
  return next;
}

JointState initial_state(const JointSpec& spec, double q, bool s_open, double q_dot) {
  JointState s;
  s.q = std::clamp(q, spec.q_lower_bound, spec.q_upper_bound);
  s.q_dot = q_dot;
  s.s_open = s_open;
  s.regime = q_dot == 0.0 ? FrictionRegime::Static : FrictionRegime::Kinetic;
  s.held_target = target_at(spec.target_policy, s.q, s_open, s.q, bounds_of(spec));
  return s;
}

std::size_t step_count(double duration, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, "", "dt must be positive");
  if (!(duration > 0.0) || !std::isfinite(duration))
    throw Error(ErrorCode::InvalidScenario, "", "duration must be positive");
  const double ratio = duration / dt;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio)) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(ratio));
}

std::vector<JointState> simulate_joint(const JointState& state0, const JointSpec& spec, const ForceFunction& force,
                                       double duration, double dt) {
  const std::size_t n = step_count(duration, dt);
  std::vector<JointState> series;
  series.reserve(n + 1);
  series.push_back(state0);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    series.push_back(step(series.back(), spec, force ? force(t) : 0.0, dt));
  }
  return series;
}

}  // namespace artjoint
