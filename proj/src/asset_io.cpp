#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "artjoint/asset_model.hpp"
#include "artjoint/error.hpp"
#include "json_util.hpp"

namespace artjoint {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

using detail::JsonReader;

Pose read_pose(const JsonReader& r) {
  r.allow_keys({"position", "orientation"});
  Pose p;
  p.position = r.at("position").vec3();
  p.orientation = r.at("orientation").array<4>();
  return p;
}

ordered_json write_pose(const Pose& p) {
  return ordered_json{{"position", p.position}, {"orientation", p.orientation}};
}

StiffnessProfile read_stiffness(const JsonReader& r) {
  const std::string type = r.at("type").str();
  if (type == "constant") {
    r.allow_keys({"type", "k"});
    return ConstantStiffness{r.at("k").num()};
  }
  if (type == "schedule") {
    r.allow_keys({"type", "k_high", "k_low", "k_max", "alpha", "lambda", "q_threshold"});
    ScheduledStiffness s;
    s.k_high = r.at("k_high").num();
    s.k_low = r.at("k_low").num();
    s.k_max = r.at("k_max").num();
    s.alpha = r.at("alpha").num();
    s.lambda = r.at("lambda").num();
    s.q_threshold = r.at("q_threshold").num();
    return s;
  }
  r.at("type").fail("unknown stiffness type '" + type + "'");
}

ordered_json write_stiffness(const StiffnessProfile& p) {
  if (const auto* c = std::get_if<ConstantStiffness>(&p)) return ordered_json{{"type", "constant"}, {"k", c->k}};
  const auto& s = std::get<ScheduledStiffness>(p);
  return ordered_json{{"type", "schedule"}, {"k_high", s.k_high}, {"k_low", s.k_low}, {"k_max", s.k_max},
                      {"alpha", s.alpha},   {"lambda", s.lambda}, {"q_threshold", s.q_threshold}};
}

TargetPolicy read_target(const JsonReader& r) {
  const std::string type = r.at("type").str();
  if (type == "fixed") {
    r.allow_keys({"type", "q_target"});
    return FixedTarget{r.at("q_target").num()};
  }
  if (type == "latch") {
    r.allow_keys({"type", "q_threshold"});
    return LatchTarget{r.at("q_threshold").num()};
  }
  r.at("type").fail("unknown target policy type '" + type + "'");
}

ordered_json write_target(const TargetPolicy& p) {
  if (const auto* f = std::get_if<FixedTarget>(&p)) return ordered_json{{"type", "fixed"}, {"q_target", f->q_target}};
  return ordered_json{{"type", "latch"}, {"q_threshold", std::get<LatchTarget>(p).q_threshold}};
}

JointSpec read_joint(const JsonReader& r) {
  r.allow_keys({"id", "kind", "parent_module", "child_module", "axis", "anchor", "q_lower_bound", "q_upper_bound",
                "damping_D", "mu_s", "coulomb_floor", "effective_inertia", "stiffness", "target_policy",
                "target_velocity"});
  JointSpec j;
  j.id = r.at("id").str();
  const std::string kind = r.at("kind").str();
  if (kind == "prismatic")
    j.kind = JointKind::Prismatic;
  else if (kind == "revolute")
    j.kind = JointKind::Revolute;
  else
    r.at("kind").fail("unknown joint kind '" + kind + "'");
  j.parent_module = r.at("parent_module").str();
  j.child_module = r.at("child_module").str();
  j.axis = r.at("axis").vec3();
  if (r.has("anchor")) j.anchor = r.at("anchor").vec3();
  j.q_lower_bound = r.at("q_lower_bound").num();
  j.q_upper_bound = r.at("q_upper_bound").num();
  j.damping_D = r.at("damping_D").num();
  j.mu_s = r.at("mu_s").num();
  if (r.has("coulomb_floor")) j.coulomb_floor = r.at("coulomb_floor").num();
  j.effective_inertia = r.at("effective_inertia").num();
  j.stiffness = read_stiffness(r.at("stiffness"));
  j.target_policy = read_target(r.at("target_policy"));
  if (r.has("target_velocity")) j.target_velocity = r.at("target_velocity").num();
  return j;
}

ordered_json write_joint(const JointSpec& j) {
  ordered_json o;
  o["id"] = j.id;
  o["kind"] = j.kind == JointKind::Prismatic ? "prismatic" : "revolute";
  o["parent_module"] = j.parent_module;
  o["child_module"] = j.child_module;
  o["axis"] = j.axis;
  o["anchor"] = j.anchor;
  o["q_lower_bound"] = j.q_lower_bound;
  o["q_upper_bound"] = j.q_upper_bound;
  o["damping_D"] = j.damping_D;
  o["mu_s"] = j.mu_s;
  o["coulomb_floor"] = j.coulomb_floor;
  o["effective_inertia"] = j.effective_inertia;
  o["stiffness"] = write_stiffness(j.stiffness);
  o["target_policy"] = write_target(j.target_policy);
  o["target_velocity"] = j.target_velocity;
  return o;
}

}  // namespace

namespace detail {

Trigger read_trigger(const JsonReader& r) {
  const std::string type = r.at("type").str();
  if (type == "threshold_crossed") {
    r.allow_keys({"type", "joint", "value", "direction"});
    ThresholdCrossed t;
    t.joint = r.at("joint").str();
    t.value = r.at("value").num();
    const std::string dir = r.at("direction").str();
    if (dir == "rising")
      t.direction = CrossingDirection::Rising;
    else if (dir == "falling")
      t.direction = CrossingDirection::Falling;
    else
      r.at("direction").fail("direction must be 'rising' or 'falling'");
    return t;
  }
  if (type == "signal_received") {
    r.allow_keys({"type", "name"});
    return SignalReceived{r.at("name").str()};
  }
  r.at("type").fail("unknown trigger type '" + type + "'");
}

Effect read_effect(const JsonReader& r) {
  const std::string type = r.at("type").str();
  if (type == "set_open_state") {
    r.allow_keys({"type", "joint", "value"});
    return SetOpenState{r.at("joint").str(), r.at("value").boolean()};
  }
  if (type == "set_fixed_target") {
    r.allow_keys({"type", "joint", "q_target"});
    return SetFixedTarget{r.at("joint").str(), r.at("q_target").num()};
  }
  if (type == "emit_signal") {
    r.allow_keys({"type", "name"});
    return EmitSignal{r.at("name").str()};
  }
  if (type == "set_property") {
    r.allow_keys({"type", "target", "key", "value"});
    return SetProperty{r.at("target").str(), r.at("key").str(), r.at("value").num()};
  }
  r.at("type").fail("unknown effect type '" + type + "'");
}

BehaviorRule read_rule(const JsonReader& r) {
  r.allow_keys({"id", "trigger", "effects"});
  BehaviorRule rule;
  rule.id = r.at("id").str();
  rule.trigger = read_trigger(r.at("trigger"));
  const JsonReader effects = r.at("effects");
  for (std::size_t i = 0; i < effects.size(); ++i) rule.effects.push_back(read_effect(effects[i]));
  return rule;
}

ordered_json write_rule(const BehaviorRule& rule) {
  ordered_json o;
  o["id"] = rule.id;
  if (const auto* tc = std::get_if<ThresholdCrossed>(&rule.trigger)) {
    o["trigger"] = ordered_json{{"type", "threshold_crossed"},
                                {"joint", tc->joint},
                                {"value", tc->value},
                                {"direction", tc->direction == CrossingDirection::Rising ? "rising" : "falling"}};
  } else {
    o["trigger"] = ordered_json{{"type", "signal_received"}, {"name", std::get<SignalReceived>(rule.trigger).name}};
  }
  o["effects"] = ordered_json::array();
  for (const auto& effect : rule.effects) {
    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, SetOpenState>)
            o["effects"].push_back({{"type", "set_open_state"}, {"joint", e.joint}, {"value", e.value}});
          else if constexpr (std::is_same_v<T, SetFixedTarget>)
            o["effects"].push_back({{"type", "set_fixed_target"}, {"joint", e.joint}, {"q_target", e.q_target}});
          else if constexpr (std::is_same_v<T, EmitSignal>)
            o["effects"].push_back({{"type", "emit_signal"}, {"name", e.name}});
          else
            o["effects"].push_back(
                {{"type", "set_property"}, {"target", e.target}, {"key", e.key}, {"value", e.value}});
        },
        effect);
  }
  return o;
}

}  // namespace detail

Assembly decode_asset(const std::string& text) {
  const json doc = detail::parse_json_text(text);
  const JsonReader r(doc, "");
  r.allow_keys({"id", "category", "base_frame", "root_module", "modules", "joints", "behaviors", "markers"});

  Assembly a;
  a.id = r.at("id").str();
  a.category = r.at("category").str();
  a.base_frame = read_pose(r.at("base_frame"));
  a.root_module = r.at("root_module").str();

  const JsonReader modules = r.at("modules");
  for (std::size_t i = 0; i < modules.size(); ++i) {
    const JsonReader m = modules[i];
    m.allow_keys({"id", "rest_pose", "mass", "affordance_label"});
    RigidModule mod;
    mod.id = m.at("id").str();
    mod.rest_pose = read_pose(m.at("rest_pose"));
    mod.mass = m.at("mass").num();
    if (m.has("affordance_label")) mod.affordance_label = m.at("affordance_label").str();
    a.modules.push_back(std::move(mod));
  }
  const JsonReader joints = r.at("joints");
  for (std::size_t i = 0; i < joints.size(); ++i) a.joints.push_back(read_joint(joints[i]));
  if (r.has("behaviors")) {
    const JsonReader rules = r.at("behaviors");
    for (std::size_t i = 0; i < rules.size(); ++i) a.behaviors.push_back(detail::read_rule(rules[i]));
  }
  if (r.has("markers")) {
    const JsonReader markers = r.at("markers");
    for (std::size_t i = 0; i < markers.size(); ++i) {
      const JsonReader m = markers[i];
      m.allow_keys({"module_id", "name", "local_point"});
      a.markers.push_back(Marker{m.at("module_id").str(), m.at("name").str(), m.at("local_point").vec3()});
    }
  }

  return a;
}

Assembly parse_asset(const std::string& text) {
  Assembly a = decode_asset(text);
  const ValidationReport report = validate(a);
  if (!report.empty()) {
    // Structural failures take precedence over the generic ones so callers get
    // the most specific code available.
    static const char* const precedence[] = {"MissingModule", "InvalidLimits", "NonUnitAxis", "CyclicStructure"};
    for (const char* code : precedence) {
      for (const auto& e : report) {
        if (e.code != code) continue;
        if (e.code == "MissingModule") throw Error(ErrorCode::MissingModule, e.path, e.message);
        if (e.code == "InvalidLimits") throw Error(ErrorCode::InvalidLimits, e.path, e.message);
        if (e.code == "NonUnitAxis") throw Error(ErrorCode::NonUnitAxis, e.path, e.message);
        throw Error(ErrorCode::CyclicStructure, e.path, e.message);
      }
    }
    const auto& first = report.front();
    const ErrorCode code =
        first.code == "UnresolvedReference" ? ErrorCode::UnresolvedReference : ErrorCode::InvalidAsset;
    throw Error(code, first.path, first.message);
  }
  return a;
}

std::string serialize_asset(const Assembly& a) {
  ordered_json o;
  o["id"] = a.id;
  o["category"] = a.category;
  o["base_frame"] = write_pose(a.base_frame);
  o["root_module"] = a.root_module;
  o["modules"] = ordered_json::array();
  for (const auto& m : a.modules) {
    o["modules"].push_back(ordered_json{{"id", m.id},
                                        {"rest_pose", write_pose(m.rest_pose)},
                                        {"mass", m.mass},
                                        {"affordance_label", m.affordance_label}});
  }
  o["joints"] = ordered_json::array();
  for (const auto& j : a.joints) o["joints"].push_back(write_joint(j));
  o["behaviors"] = ordered_json::array();
  for (const auto& rule : a.behaviors) o["behaviors"].push_back(detail::write_rule(rule));
  o["markers"] = ordered_json::array();
  for (const auto& mk : a.markers)
    o["markers"].push_back(ordered_json{{"module_id", mk.module_id}, {"name", mk.name}, {"local_point", mk.local_point}});
  return o.dump(2) + "\n";
}

Assembly load_asset_file(const std::string& path) {
  try {
    return parse_asset(detail::read_text_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw;
    throw Error(e.code(), path + ":" + e.context(), e.message());
  }
}

}  // namespace artjoint
