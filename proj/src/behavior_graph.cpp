#include <deque>
#include <sstream>

#include "artjoint/behavior_graph.hpp"
#include "artjoint/error.hpp"

namespace artjoint {

WorldState make_world(const std::vector<AssemblyInstance>& instances) {
  WorldState world;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (const auto& j : instances[i].asset.joints) {
      JointSlot slot;
      slot.path = instances[i].name + "/" + j.id;
      slot.assembly = i;
      slot.spec = j;
      slot.state = initial_state(j, j.q_lower_bound, false);
      world.joints.push_back(std::move(slot));
    }
  }
  return world;
}

std::optional<std::size_t> find_joint_slot(const WorldState& world, const std::string& path) {
  for (std::size_t i = 0; i < world.joints.size(); ++i)
    if (world.joints[i].path == path) return i;
  return std::nullopt;
}

std::size_t BehaviorGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& r : rules_) n += r.effects.size();
  return n;
}

namespace {

class Resolver {
 public:
  explicit Resolver(const std::vector<AssemblyInstance>& instances) : instances_(instances) {
    std::size_t offset = 0;
    for (const auto& inst : instances) {
      offsets_.push_back(offset);
      offset += inst.asset.joints.size();
    }
  }

  // owner < 0 means a scenario-level rule: only qualified references resolve.
  std::size_t joint(int owner, const std::string& ref, const std::string& rule_id) const {
    const auto [inst, local] = split(owner, ref, rule_id);
    const auto& joints = instances_[inst].asset.joints;
    for (std::size_t j = 0; j < joints.size(); ++j)
      if (joints[j].id == local) return offsets_[inst] + j;
    throw Error(ErrorCode::UnresolvedReference, rule_id, "unknown joint '" + ref + "'");
  }

  std::string module_path(int owner, const std::string& ref, const std::string& rule_id) const {
    const auto [inst, local] = split(owner, ref, rule_id);
    if (instances_[inst].asset.find_module(local) == nullptr)
      throw Error(ErrorCode::UnresolvedReference, rule_id, "unknown module '" + ref + "'");
    return instances_[inst].name + "/" + local;
  }

  const JointSpec& spec(std::size_t global) const {
    for (std::size_t i = instances_.size(); i-- > 0;)
      if (global >= offsets_[i]) return instances_[i].asset.joints[global - offsets_[i]];
    throw Error(ErrorCode::UnresolvedReference, "", "joint index out of range");
  }

 private:
  std::pair<std::size_t, std::string> split(int owner, const std::string& ref, const std::string& rule_id) const {
    const auto slash = ref.find('/');
    if (slash == std::string::npos) {
      if (owner < 0)
        throw Error(ErrorCode::UnresolvedReference, rule_id, "scenario rules need qualified references: " + ref);
      return {static_cast<std::size_t>(owner), ref};
    }
    const std::string name = ref.substr(0, slash);
    for (std::size_t i = 0; i < instances_.size(); ++i)
      if (instances_[i].name == name) return {i, ref.substr(slash + 1)};
    throw Error(ErrorCode::UnresolvedReference, rule_id, "unknown assembly '" + name + "'");
  }

  const std::vector<AssemblyInstance>& instances_;
  std::vector<std::size_t> offsets_;
};

bound::Rule compile(const Resolver& res, int owner, const std::string& owner_name, const BehaviorRule& rule) {
  bound::Rule out;
  out.id = owner_name + "/" + rule.id;
  if (rule.effects.empty()) throw Error(ErrorCode::UnresolvedReference, out.id, "rule has no effects");
  if (const auto* tc = std::get_if<ThresholdCrossed>(&rule.trigger)) {
    out.trigger = bound::Threshold{res.joint(owner, tc->joint, out.id), tc->value, tc->direction};
  } else {
    out.trigger = bound::Signal{std::get<SignalReceived>(rule.trigger).name};
  }
  for (const auto& effect : rule.effects) {
    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, SetOpenState>) {
            out.effects.push_back(bound::OpenState{res.joint(owner, e.joint, out.id), e.value});
          } else if constexpr (std::is_same_v<T, SetFixedTarget>) {
            const std::size_t j = res.joint(owner, e.joint, out.id);
            const JointSpec& spec = res.spec(j);
            if (!(e.q_target >= spec.q_lower_bound && e.q_target <= spec.q_upper_bound))
              throw Error(ErrorCode::UnresolvedReference, out.id, "target outside limits of " + e.joint);
            out.effects.push_back(bound::FixedTarget{j, e.q_target});
          } else if constexpr (std::is_same_v<T, EmitSignal>) {
            out.effects.push_back(bound::Emit{e.name});
          } else {
            out.effects.push_back(bound::Property{res.module_path(owner, e.target, out.id), e.key, e.value});
          }
        },
        effect);
  }
  return out;
}

bool crossed(const bound::Threshold& th, double prev, double next) {
  if (th.direction == CrossingDirection::Rising) return prev < th.value && next >= th.value;
  return prev > th.value && next <= th.value;
}

std::string describe(const bound::Effect& effect) {
  std::ostringstream ss;
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, bound::OpenState>)
          ss << "joint " << e.joint << " open=" << (e.value ? "true" : "false");
        else if constexpr (std::is_same_v<T, bound::FixedTarget>)
          ss << "joint " << e.joint << " target=" << e.q_target;
        else if constexpr (std::is_same_v<T, bound::Emit>)
          ss << "signal " << e.name;
        else
          ss << e.path << "." << e.key << "=" << e.value;
      },
      effect);
  return ss.str();
}

}  // namespace

BehaviorGraph bind_rules(const std::vector<AssemblyInstance>& instances, const std::vector<BehaviorRule>& scenario_rules) {
  const Resolver res(instances);
  std::vector<bound::Rule> rules;
  for (std::size_t i = 0; i < instances.size(); ++i)
    for (const auto& rule : instances[i].asset.behaviors)
      rules.push_back(compile(res, static_cast<int>(i), instances[i].name, rule));
  for (const auto& rule : scenario_rules) rules.push_back(compile(res, -1, "scenario", rule));
  return BehaviorGraph(std::move(rules));
}

std::string effect_type(const bound::Effect& effect) {
  switch (effect.index()) {
    case 0: return "set_open_state";
    case 1: return "set_fixed_target";
    case 2: return "emit_signal";
    default: return "set_property";
  }
}

Evaluation evaluate(const BehaviorGraph& graph, std::span<const JointState> prev_states,
                    std::span<const JointState> new_states, double t) {
  Evaluation out;
  std::deque<std::pair<std::string, int>> pending;

  auto fire = [&](std::size_t r, const std::string& trigger_type, const std::string& detail, int depth) {
    const bound::Rule& rule = graph.rules()[r];
    out.log.push_back({t, EventKind::Trigger, rule.id, trigger_type, detail});
    for (const auto& effect : rule.effects) {
      out.log.push_back({t, EventKind::Effect, rule.id, effect_type(effect), describe(effect)});
      out.effects.push_back({r, effect});
      if (const auto* emit = std::get_if<bound::Emit>(&effect)) pending.emplace_back(emit->name, depth + 1);
    }
  };

  const auto& rules = graph.rules();
  for (std::size_t r = 0; r < rules.size(); ++r) {
    const auto* th = std::get_if<bound::Threshold>(&rules[r].trigger);
    if (th == nullptr) continue;
    if (th->joint >= prev_states.size() || th->joint >= new_states.size())
      throw Error(ErrorCode::UnresolvedReference, rules[r].id, "state vector does not cover bound joints");
    const double before = prev_states[th->joint].q;
    const double after = new_states[th->joint].q;
    if (!crossed(*th, before, after)) continue;
    std::ostringstream detail;
    detail << "joint " << th->joint << " " << before << " -> " << after;
    fire(r, "threshold_crossed", detail.str(), 0);
  }

  while (!pending.empty()) {
    const auto [signal, depth] = pending.front();
    pending.pop_front();
    if (depth > kMaxSignalDepth)
      throw Error(ErrorCode::SignalLoopDetected, signal, "signal chain deeper than " + std::to_string(kMaxSignalDepth));
    for (std::size_t r = 0; r < rules.size(); ++r) {
      const auto* sig = std::get_if<bound::Signal>(&rules[r].trigger);
      if (sig != nullptr && sig->name == signal) fire(r, "signal_received", "signal " + signal, depth);
    }
  }
  return out;
}

WorldState apply_effects(std::span<const FiredEffect> effects, WorldState world) {
  for (const auto& fired : effects) {
    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, bound::OpenState>) {
            world.joints.at(e.joint).state.s_open = e.value;
          } else if constexpr (std::is_same_v<T, bound::FixedTarget>) {
            JointSlot& slot = world.joints.at(e.joint);
            if (std::holds_alternative<artjoint::FixedTarget>(slot.spec.target_policy))
              slot.spec.target_policy = artjoint::FixedTarget{e.q_target};
            slot.state.held_target = e.q_target;
          } else if constexpr (std::is_same_v<T, bound::Property>) {
            world.properties[e.path][e.key] = e.value;
          }
        },
        fired.effect);
  }
  return world;
}

}  // namespace artjoint
