#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "artjoint/asset_model.hpp"
#include "artjoint/joint_dynamics.hpp"

namespace artjoint {

/// An asset placed in a scenario under a scenario-unique name.
struct AssemblyInstance {
  std::string name;
  Assembly asset;
  Pose world_pose;
};

/// Mutable per-joint runtime: the spec copy may be retargeted by behaviors.
struct JointSlot {
  std::string path;  // "<assembly>/<joint>"
  std::size_t assembly = 0;
  JointSpec spec;
  JointState state;
};

using PropertyStore = std::map<std::string, std::map<std::string, double>>;

struct WorldState {
  std::vector<JointSlot> joints;
  PropertyStore properties;  // "<assembly>/<module>" -> key -> scalar
};

/// Joints of every instance, in instance order then asset order, at their
/// default rest states (lower bound, closed).
WorldState make_world(const std::vector<AssemblyInstance>& instances);

std::optional<std::size_t> find_joint_slot(const WorldState& world, const std::string& path);

namespace bound {

struct Threshold {
  std::size_t joint = 0;
  double value = 0.0;
  CrossingDirection direction = CrossingDirection::Rising;
};
struct Signal {
  std::string name;
};
using Trigger = std::variant<Threshold, Signal>;

struct OpenState {
  std::size_t joint = 0;
  bool value = false;
};
struct FixedTarget {
  std::size_t joint = 0;
  double q_target = 0.0;
};
struct Emit {
  std::string name;
};
struct Property {
  std::string path;
  std::string key;
  double value = 0.0;
};
using Effect = std::variant<OpenState, FixedTarget, Emit, Property>;

struct Rule {
  std::string id;  // "<owner>/<rule id>", owner is the assembly name or "scenario"
  Trigger trigger;
  std::vector<Effect> effects;
};

}  // namespace bound

/// Compiled trigger -> effect edges over a fixed set of assembly instances.
/// Immutable after bind_rules().
class BehaviorGraph {
 public:
  BehaviorGraph() = default;
  explicit BehaviorGraph(std::vector<bound::Rule> rules) : rules_(std::move(rules)) {}

  const std::vector<bound::Rule>& rules() const { return rules_; }
  std::size_t edge_count() const;

 private:
  std::vector<bound::Rule> rules_;
};

/// Resolves the rules embedded in each instance (local references) plus any
/// scenario-level rules (references qualified as "<assembly>/<id>").
/// Throws UnresolvedReference.
BehaviorGraph bind_rules(const std::vector<AssemblyInstance>& instances,
                         const std::vector<BehaviorRule>& scenario_rules = {});

enum class EventKind { Trigger, Effect };

struct EventLogEntry {
  double t = 0.0;
  EventKind kind = EventKind::Trigger;
  std::string rule;
  std::string type;    // trigger or effect variant, e.g. "threshold_crossed", "set_open_state"
  std::string detail;

  bool operator==(const EventLogEntry&) const = default;
};

using EventLog = std::vector<EventLogEntry>;

struct FiredEffect {
  std::size_t rule = 0;
  bound::Effect effect;
};

struct Evaluation {
  std::vector<FiredEffect> effects;
  EventLog log;
};

inline constexpr int kMaxSignalDepth = 16;

/// Edge-triggered evaluation of one tick. Threshold rules fire in rule order,
/// then emitted signals resolve breadth-first within the same tick.
/// Throws SignalLoopDetected when a chain exceeds kMaxSignalDepth.
Evaluation evaluate(const BehaviorGraph& graph, std::span<const JointState> prev_states,
                    std::span<const JointState> new_states, double t);

/// Applies effects in order. Re-applying the same effects is a no-op.
WorldState apply_effects(std::span<const FiredEffect> effects, WorldState world);

std::string effect_type(const bound::Effect& effect);

}  // namespace artjoint
