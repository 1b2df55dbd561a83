#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Geometry>

namespace artjoint {

using Vec3 = std::array<double, 3>;

/// Position in meters plus orientation as a unit quaternion stored (w, x, y, z).
struct Pose {
  Vec3 position{0.0, 0.0, 0.0};
  std::array<double, 4> orientation{1.0, 0.0, 0.0, 0.0};

  bool operator==(const Pose&) const = default;

  Eigen::Isometry3d to_isometry() const;
  static Pose from_isometry(const Eigen::Isometry3d& iso);
};

struct RigidModule {
  std::string id;
  Pose rest_pose;  // relative to the parent module frame
  double mass = 1.0;
  std::string affordance_label;

  bool operator==(const RigidModule&) const = default;
};

struct Marker {
  std::string module_id;
  std::string name;
  Vec3 local_point{0.0, 0.0, 0.0};

  bool operator==(const Marker&) const = default;
};

enum class JointKind { Prismatic, Revolute };

struct ConstantStiffness {
  double k = 0.0;
  bool operator==(const ConstantStiffness&) const = default;
};

/// Position- and open-state-dependent stiffness of a door-closer / magnetic latch.
struct ScheduledStiffness {
  double k_high = 0.0;
  double k_low = 0.0;
  double k_max = 0.0;
  double alpha = 0.0;   // stiffness lost per joint unit while opening
  double lambda = 0.0;  // decay rate of the closing surge, 1/joint unit
  double q_threshold = 0.0;
  bool operator==(const ScheduledStiffness&) const = default;
};

using StiffnessProfile = std::variant<ConstantStiffness, ScheduledStiffness>;

struct FixedTarget {
  double q_target = 0.0;
  bool operator==(const FixedTarget&) const = default;
};

/// Target jumps to the upper bound once opened past the threshold and to the
/// lower bound once closed below it.
struct LatchTarget {
  double q_threshold = 0.0;
  bool operator==(const LatchTarget&) const = default;
};

using TargetPolicy = std::variant<FixedTarget, LatchTarget>;

struct JointSpec {
  std::string id;
  JointKind kind = JointKind::Prismatic;
  std::string parent_module;
  std::string child_module;
  Vec3 axis{1.0, 0.0, 0.0};
  Vec3 anchor{0.0, 0.0, 0.0};
  double q_lower_bound = 0.0;
  double q_upper_bound = 1.0;
  double damping_D = 0.0;
  double mu_s = 0.0;
  double coulomb_floor = 0.0;
  double effective_inertia = 1.0;
  StiffnessProfile stiffness = ConstantStiffness{};
  TargetPolicy target_policy = FixedTarget{};
  double target_velocity = 0.0;

  bool operator==(const JointSpec&) const = default;
};

// Behavior rules are stored in the asset; their semantics live in behavior_graph.
enum class CrossingDirection { Rising, Falling };

struct ThresholdCrossed {
  std::string joint;
  double value = 0.0;
  CrossingDirection direction = CrossingDirection::Rising;
  bool operator==(const ThresholdCrossed&) const = default;
};

struct SignalReceived {
  std::string name;
  bool operator==(const SignalReceived&) const = default;
};

using Trigger = std::variant<ThresholdCrossed, SignalReceived>;

struct SetOpenState {
  std::string joint;
  bool value = false;
  bool operator==(const SetOpenState&) const = default;
};

struct SetFixedTarget {
  std::string joint;
  double q_target = 0.0;
  bool operator==(const SetFixedTarget&) const = default;
};

struct EmitSignal {
  std::string name;
  bool operator==(const EmitSignal&) const = default;
};

struct SetProperty {
  std::string target;  // "<module>" or "<assembly>/<module>"
  std::string key;
  double value = 0.0;
  bool operator==(const SetProperty&) const = default;
};

using Effect = std::variant<SetOpenState, SetFixedTarget, EmitSignal, SetProperty>;

struct BehaviorRule {
  std::string id;
  Trigger trigger;
  std::vector<Effect> effects;
  bool operator==(const BehaviorRule&) const = default;
};

struct Assembly {
  std::string id;
  std::string category;
  Pose base_frame;
  std::string root_module;
  std::vector<RigidModule> modules;
  std::vector<JointSpec> joints;
  std::vector<BehaviorRule> behaviors;
  std::vector<Marker> markers;

  bool operator==(const Assembly&) const = default;

  const RigidModule* find_module(const std::string& module_id) const;
  const JointSpec* find_joint(const std::string& joint_id) const;
  const Marker* find_marker(const std::string& name) const;
};

struct ValidationEntry {
  std::string path;     // JSON-pointer-like location, e.g. "/joints/2/q_upper_bound"
  std::string message;  // stable human-readable category, e.g. "duplicate module id"
  std::string code;     // error-code name used when parse_asset escalates the entry
  bool operator==(const ValidationEntry&) const = default;
};

using ValidationReport = std::vector<ValidationEntry>;

/// Lists every violated invariant; an empty report means the asset is simulation-ready.
ValidationReport validate(const Assembly& a);

/// Schema-level decode only; invariants are left to validate().
Assembly decode_asset(const std::string& text);
/// Parses and validates a `.artjoint.json` document. Throws artjoint::Error.
Assembly parse_asset(const std::string& text);
std::string serialize_asset(const Assembly& a);

Assembly load_asset_file(const std::string& path);

// Forward kinematics.
using JointValues = std::map<std::string, double>;

struct FkResult {
  std::map<std::string, Eigen::Isometry3d> module_poses;  // world (assembly base) frame
  std::vector<std::string> clamped_joints;
};

/// Poses of every module for the given joint values. Out-of-limit values are
/// clamped and reported, never rejected.
FkResult forward_kinematics(const Assembly& a, const JointValues& q);

Eigen::Vector3d marker_world(const Assembly& a, const JointValues& q, const std::string& marker);

/// Child-module motion relative to its rest placement for a joint value.
Eigen::Isometry3d joint_motion(const JointSpec& joint, double q);

}  // namespace artjoint
