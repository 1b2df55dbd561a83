#pragma once

#include <functional>
#include <vector>

#include "artjoint/asset_model.hpp"

namespace artjoint {

enum class FrictionRegime { Static, Kinetic };

struct JointBounds {
  double lower = 0.0;
  double upper = 0.0;
};

inline JointBounds bounds_of(const JointSpec& spec) { return {spec.q_lower_bound, spec.q_upper_bound}; }

struct JointState {
  double q = 0.0;
  double q_dot = 0.0;
  bool s_open = false;
  FrictionRegime regime = FrictionRegime::Static;
  // Drive target carried between steps; the latch policy holds it where its
  // two cases leave the target undefined, and behavior effects overwrite it.
  double held_target = 0.0;

  bool operator==(const JointState&) const = default;
};

struct EffortBreakdown {
  double tau_drive = 0.0;
  double f_ext = 0.0;
  double f_friction = 0.0;
  double net = 0.0;
  FrictionRegime regime = FrictionRegime::Static;
};

struct FrictionResult {
  double effort = 0.0;
  FrictionRegime regime = FrictionRegime::Static;
};

/// Piecewise stiffness K(q). Constant profiles ignore q and s_open.
///
/// Scheduled profiles:
///   q <= lower                         -> k_high
///   lower < q <= threshold, opening    -> k_high - alpha * (q - lower), floored at 0
///   lower < q <= threshold, closing    -> k_low + k_max * exp(-lambda * (q - lower))
///   q > threshold                      -> k_low
double stiffness_at(const StiffnessProfile& profile, double q, bool s_open, JointBounds bounds);

/// Drive target for the current position. Latch: upper bound when opened past
/// the threshold, lower bound when closed below it, otherwise prev_target.
double target_at(const TargetPolicy& policy, double q, bool s_open, double prev_target, JointBounds bounds);

/// K(q) * (q_target(q) - q) + D * (q_dot_target - q_dot): a restoring drive.
double drive_effort(const JointState& state, const JointSpec& spec);

/// Breakaway threshold mu_s * |tau_drive| + coulomb_floor.
double breakaway_threshold(const JointSpec& spec, double tau_drive);

/// Three-regime friction. At rest the friction cancels `f_ext` up to the
/// breakaway threshold and saturates beyond it; in motion it is viscous,
/// -D * q_dot.
FrictionResult friction_effort(const JointState& state, const JointSpec& spec, double tau_drive, double f_ext);

/// Effort terms acting on the joint for the given state and external effort.
EffortBreakdown efforts(const JointState& state, const JointSpec& spec, double f_ext);

/// Largest step accepted by step().
inline constexpr double kMaxTimestep = 0.01;
inline constexpr double kDefaultTimestep = 1e-3;

/// One semi-implicit Euler step of effective_inertia * q_ddot = net effort,
/// followed by limit clamping and stiction latching. Throws NonPositiveDt or
/// TimestepTooLarge.
JointState step(const JointState& state, const JointSpec& spec, double f_ext, double dt);

/// State at rest at q with the target the policy would hold there.
JointState initial_state(const JointSpec& spec, double q, bool s_open, double q_dot = 0.0);

using ForceFunction = std::function<double(double)>;

/// Number of steps covering `duration` at `dt` (ceil, tolerant of round-off).
std::size_t step_count(double duration, double dt);

/// Fixed-step rollout; entry k is the state at t = k * dt. Returns
/// step_count(duration, dt) + 1 states.
std::vector<JointState> simulate_joint(const JointState& state0, const JointSpec& spec, const ForceFunction& force,
                                       double duration, double dt);

}  // namespace artjoint
