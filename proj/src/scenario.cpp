#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <set>

#include "artjoint/error.hpp"
#include "artjoint/scenario.hpp"
#include "json_util.hpp"
#include "scenario_io.hpp"

#ifndef ARTJOINT_FIXTURE_DIR
#define ARTJOINT_FIXTURE_DIR "fixtures"
#endif

namespace artjoint {

namespace fs = std::filesystem;
using detail::JsonReader;

double force_at(const ForceProfile& profile, double t) {
  if (const auto* c = std::get_if<ConstantForce>(&profile))
    return (t >= c->t_start && t < c->t_end) ? c->value : 0.0;
  const auto& p = std::get<PiecewiseForce>(profile);
  if (p.knots.empty() || t < p.knots.front().first) return 0.0;
  const auto it = std::upper_bound(p.knots.begin(), p.knots.end(), t,
                                   [](double x, const std::pair<double, double>& k) { return x < k.first; });
  const auto& lo = *(it - 1);
  if (it == p.knots.end() || p.interpolation == Interpolation::Step) return lo.second;
  const double w = (t - lo.first) / (it->first - lo.first);
  return lo.second + w * (it->second - lo.second);
}

void check_profile(const ForceProfile& profile, const std::string& context) {
  if (const auto* c = std::get_if<ConstantForce>(&profile)) {
    if (!(c->t_start < c->t_end)) throw Error(ErrorCode::InvalidScenario, context, "t_start must precede t_end");
    if (!std::isfinite(c->value)) throw Error(ErrorCode::InvalidScenario, context, "non-finite force");
    return;
  }
  const auto& p = std::get<PiecewiseForce>(profile);
  for (std::size_t i = 0; i < p.knots.size(); ++i) {
    if (!std::isfinite(p.knots[i].first) || !std::isfinite(p.knots[i].second))
      throw Error(ErrorCode::InvalidScenario, context, "non-finite knot");
    if (i > 0 && !(p.knots[i].first > p.knots[i - 1].first))
      throw Error(ErrorCode::InvalidScenario, context, "knot times must be strictly increasing");
  }
}

namespace detail {

ForceProfile read_force_profile(const JsonReader& r) {
  const std::string type = r.at("type").str();
  if (type == "constant") {
    r.allow_keys({"type", "value", "t_start", "t_end"});
    return ConstantForce{r.at("value").num(), r.at("t_start").num(), r.at("t_end").num()};
  }
  if (type == "piecewise") {
    r.allow_keys({"type", "knots", "interpolation"});
    PiecewiseForce p;
    const JsonReader knots = r.at("knots");
    for (std::size_t i = 0; i < knots.size(); ++i) {
      const auto k = knots[i].array<2>();
      p.knots.emplace_back(k[0], k[1]);
    }
    if (r.has("interpolation")) {
      const std::string mode = r.at("interpolation").str();
      if (mode == "linear")
        p.interpolation = Interpolation::Linear;
      else if (mode != "step")
        r.at("interpolation").fail("interpolation must be 'step' or 'linear'");
    }
    return p;
  }
  r.at("type").fail("unknown force profile type '" + type + "'");
}

nlohmann::ordered_json write_force_profile(const ForceProfile& profile) {
  if (const auto* c = std::get_if<ConstantForce>(&profile))
    return {{"type", "constant"}, {"value", c->value}, {"t_start", c->t_start}, {"t_end", c->t_end}};
  const auto& p = std::get<PiecewiseForce>(profile);
  nlohmann::ordered_json knots = nlohmann::ordered_json::array();
  for (const auto& [t, v] : p.knots) knots.push_back({t, v});
  return {{"type", "piecewise"},
          {"knots", knots},
          {"interpolation", p.interpolation == Interpolation::Linear ? "linear" : "step"}};
}

}  // namespace detail

std::vector<std::string> fixture_search_path() {
  std::vector<std::string> dirs;
  if (const char* env = std::getenv("ARTJOINT_FIXTURES"); env != nullptr && *env != '\0') {
    std::string value(env);
    std::size_t start = 0;
    while (start <= value.size()) {
      const auto colon = value.find(':', start);
      const std::string dir = value.substr(start, colon - start);
      if (!dir.empty()) dirs.push_back(dir);
      if (colon == std::string::npos) break;
      start = colon + 1;
    }
    return dirs;
  }
  dirs.emplace_back(ARTJOINT_FIXTURE_DIR);
  return dirs;
}

std::string resolve_fixture_path(const std::string& name, const std::string& base_dir) {
  const fs::path p(name);
  if (p.is_absolute()) {
    if (fs::exists(p)) return p.string();
    throw Error(ErrorCode::Io, name, "file not found");
  }
  if (!base_dir.empty() && fs::exists(fs::path(base_dir) / p)) return (fs::path(base_dir) / p).string();
  if (base_dir.empty() && fs::exists(p)) return p.string();
  for (const auto& dir : fixture_search_path())
    if (fs::exists(fs::path(dir) / p)) return (fs::path(dir) / p).string();
  throw Error(ErrorCode::Io, name, "file not found in scenario directory or fixture search path");
}

Scenario parse_scenario(const std::string& text, const std::string& base_dir) {
  const nlohmann::json doc = detail::parse_json_text(text);
  const JsonReader r(doc, "");
  r.allow_keys({"assemblies", "initial_states", "forces", "behaviors", "duration", "dt", "recordings", "reward", "env"});

  Scenario s;
  const JsonReader assemblies = r.at("assemblies");
  for (std::size_t i = 0; i < assemblies.size(); ++i) {
    const JsonReader a = assemblies[i];
    a.allow_keys({"name", "asset", "pose"});
    AssemblyInstance inst;
    inst.name = a.at("name").str();
    inst.asset = load_asset_file(resolve_fixture_path(a.at("asset").str(), base_dir));
    if (a.has("pose")) {
      const JsonReader pose = a.at("pose");
      pose.allow_keys({"position", "orientation"});
      inst.world_pose.position = pose.at("position").vec3();
      inst.world_pose.orientation = pose.at("orientation").array<4>();
    }
    s.assemblies.push_back(std::move(inst));
  }
  if (r.has("initial_states")) {
    const JsonReader states = r.at("initial_states");
    for (std::size_t i = 0; i < states.size(); ++i) {
      const JsonReader st = states[i];
      st.allow_keys({"joint", "q", "q_dot", "s_open"});
      InitialJointState init;
      init.joint = st.at("joint").str();
      init.q = st.at("q").num();
      if (st.has("q_dot")) init.q_dot = st.at("q_dot").num();
      if (st.has("s_open")) init.s_open = st.at("s_open").boolean();
      s.initial_states.push_back(init);
    }
  }
  if (r.has("forces")) {
    const JsonReader forces = r.at("forces");
    for (std::size_t i = 0; i < forces.size(); ++i) {
      const JsonReader f = forces[i];
      f.allow_keys({"joint", "profile"});
      s.forces.push_back({f.at("joint").str(), detail::read_force_profile(f.at("profile"))});
    }
  }
  if (r.has("behaviors")) {
    const JsonReader rules = r.at("behaviors");
    for (std::size_t i = 0; i < rules.size(); ++i) s.behaviors.push_back(detail::read_rule(rules[i]));
  }
  s.duration = r.at("duration").num();
  if (r.has("dt")) s.dt = r.at("dt").num();
  if (r.has("recordings")) {
    const JsonReader recs = r.at("recordings");
    for (std::size_t i = 0; i < recs.size(); ++i) s.recordings.push_back(recs[i].str());
  }
  if (r.has("reward")) {
    const JsonReader rw = r.at("reward");
    rw.allow_keys({"lambda1", "lambda2", "lambda3", "lambda4"});
    if (rw.has("lambda1")) s.reward.lambda1 = rw.at("lambda1").num();
    if (rw.has("lambda2")) s.reward.lambda2 = rw.at("lambda2").num();
    if (rw.has("lambda3")) s.reward.lambda3 = rw.at("lambda3").num();
    if (rw.has("lambda4")) s.reward.lambda4 = rw.at("lambda4").num();
  }
  if (r.has("env")) {
    const JsonReader e = r.at("env");
    e.allow_keys({"goal_joint", "handle_marker", "press_joint", "press_marker", "contact_radius", "max_action",
                  "effector_start"});
    EnvConfig env;
    env.goal_joint = e.at("goal_joint").str();
    env.handle_marker = e.at("handle_marker").str();
    if (e.has("press_joint")) env.press_joint = e.at("press_joint").str();
    if (e.has("press_marker")) env.press_marker = e.at("press_marker").str();
    if (e.has("contact_radius")) env.contact_radius = e.at("contact_radius").num();
    if (e.has("max_action")) env.max_action = e.at("max_action").num();
    if (e.has("effector_start")) env.effector_start = e.at("effector_start").vec3();
    s.env = env;
  }
  check_scenario(s);
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  const std::string text = detail::read_text_file(path);
  try {
    return parse_scenario(text, fs::path(path).parent_path().string());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw;
    throw Error(e.code(), path + ":" + e.context(), e.message());
  }
}

namespace {

struct MarkerRef {
  std::size_t assembly = 0;
  const Marker* marker = nullptr;
};

std::optional<MarkerRef> find_marker_ref(const Scenario& s, const std::string& ref) {
  const auto slash = ref.find('/');
  if (slash == std::string::npos) return std::nullopt;
  const std::string name = ref.substr(0, slash);
  for (std::size_t i = 0; i < s.assemblies.size(); ++i) {
    if (s.assemblies[i].name != name) continue;
    const Marker* mk = s.assemblies[i].asset.find_marker(ref.substr(slash + 1));
    if (mk != nullptr) return MarkerRef{i, mk};
  }
  return std::nullopt;
}

bool has_joint(const Scenario& s, const std::string& ref) {
  const auto slash = ref.find('/');
  if (slash == std::string::npos) return false;
  for (const auto& inst : s.assemblies)
    if (inst.name == ref.substr(0, slash) && inst.asset.find_joint(ref.substr(slash + 1)) != nullptr) return true;
  return false;
}

JointValues assembly_values(const WorldState& world, std::size_t assembly) {
  JointValues q;
  for (const auto& slot : world.joints)
    if (slot.assembly == assembly) q[slot.spec.id] = slot.state.q;
  return q;
}

void require_joint(const Scenario& s, const std::string& ref, const std::string& what) {
  if (!has_joint(s, ref)) throw Error(ErrorCode::UnresolvedReference, ref, "unknown joint in " + what);
}

}  // namespace

void check_scenario(const Scenario& s) {
  if (!(s.duration > 0.0) || !std::isfinite(s.duration))
    throw Error(ErrorCode::InvalidScenario, "/duration", "duration must be positive");
  if (!(s.dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, "/dt", "dt must be positive");
  if (s.dt > kMaxTimestep) throw Error(ErrorCode::TimestepTooLarge, "/dt", "dt must not exceed 0.01 s");
  if (s.assemblies.empty()) throw Error(ErrorCode::InvalidScenario, "/assemblies", "no assemblies");

  std::set<std::string> names;
  for (const auto& inst : s.assemblies) {
    if (inst.name.empty() || inst.name.find('/') != std::string::npos)
      throw Error(ErrorCode::InvalidScenario, inst.name, "assembly names must be non-empty and contain no '/'");
    if (!names.insert(inst.name).second) throw Error(ErrorCode::InvalidScenario, inst.name, "duplicate assembly name");
  }
  for (const auto& init : s.initial_states) {
    require_joint(s, init.joint, "initial_states");
    const auto slash = init.joint.find('/');
    for (const auto& inst : s.assemblies) {
      if (inst.name != init.joint.substr(0, slash)) continue;
      const JointSpec* j = inst.asset.find_joint(init.joint.substr(slash + 1));
      if (!(init.q >= j->q_lower_bound && init.q <= j->q_upper_bound))
        throw Error(ErrorCode::InvalidScenario, init.joint, "initial q outside joint limits");
    }
  }
  for (const auto& f : s.forces) {
    require_joint(s, f.joint, "forces");
    check_profile(f.profile, f.joint);
  }
  for (const auto& rec : s.recordings) {
    const bool joint = has_joint(s, rec);
    const bool marker = find_marker_ref(s, rec).has_value();
    if (joint && marker) throw Error(ErrorCode::InvalidScenario, rec, "recording names both a joint and a marker");
    if (!joint && !marker) throw Error(ErrorCode::UnresolvedReference, rec, "unknown recording reference");
  }
  if (s.env) {
    require_joint(s, s.env->goal_joint, "env.goal_joint");
    if (!find_marker_ref(s, s.env->handle_marker))
      throw Error(ErrorCode::UnresolvedReference, s.env->handle_marker, "unknown handle marker");
    if (!s.env->press_joint.empty()) {
      require_joint(s, s.env->press_joint, "env.press_joint");
      if (!find_marker_ref(s, s.env->press_marker))
        throw Error(ErrorCode::UnresolvedReference, s.env->press_marker, "unknown press marker");
    }
    if (!(s.env->max_action > 0.0)) throw Error(ErrorCode::InvalidScenario, "/env/max_action", "must be positive");
  }
  bind_rules(s.assemblies, s.behaviors);
}

WorldState initial_world(const Scenario& s) {
  WorldState world = make_world(s.assemblies);
  for (const auto& init : s.initial_states) {
    const auto slot = find_joint_slot(world, init.joint);
    if (!slot) throw Error(ErrorCode::UnresolvedReference, init.joint, "unknown joint in initial_states");
    auto& js = world.joints[*slot];
    js.state = initial_state(js.spec, init.q, init.s_open, init.q_dot);
  }
  return world;
}

Eigen::Vector3d marker_position(const Scenario& s, const WorldState& world, const std::string& ref) {
  const auto mref = find_marker_ref(s, ref);
  if (!mref) throw Error(ErrorCode::UnknownMarker, ref, "unknown marker reference");
  const AssemblyInstance& inst = s.assemblies[mref->assembly];
  const FkResult fk = forward_kinematics(inst.asset, assembly_values(world, mref->assembly));
  const Eigen::Vector3d local(mref->marker->local_point[0], mref->marker->local_point[1],
                              mref->marker->local_point[2]);
  return inst.world_pose.to_isometry() * (fk.module_poses.at(mref->marker->module_id) * local);
}

namespace {

struct Recorder {
  struct Channel {
    bool joint = false;
    std::size_t slot = 0;
    std::string ref;
  };

  Recorder(const Scenario& s, const WorldState& world) {
    for (const auto& rec : s.recordings) {
      if (const auto slot = find_joint_slot(world, rec)) {
        channels.push_back({true, *slot, rec});
        traj.add_channel(rec + ".q", {});
        traj.add_channel(rec + ".q_dot", {});
      } else {
        channels.push_back({false, 0, rec});
        traj.add_channel(rec + ".x", {});
        traj.add_channel(rec + ".y", {});
        traj.add_channel(rec + ".z", {});
      }
    }
  }

  void record(const Scenario& s, const WorldState& world, double t) {
    traj.t.push_back(t);
    std::size_t c = 0;
    for (const auto& ch : channels) {
      if (ch.joint) {
        traj.values[c++].push_back(world.joints[ch.slot].state.q);
        traj.values[c++].push_back(world.joints[ch.slot].state.q_dot);
      } else {
        const Eigen::Vector3d p = marker_position(s, world, ch.ref);
        for (int i = 0; i < 3; ++i) traj.values[c++].push_back(p[i]);
      }
    }
  }

  std::vector<Channel> channels;
  Trajectory traj;
};

std::vector<JointState> states_of(const WorldState& world) {
  std::vector<JointState> out;
  out.reserve(world.joints.size());
  for (const auto& slot : world.joints) out.push_back(slot.state);
  return out;
}

}  // namespace

RunResult run(const Scenario& s) {
  check_scenario(s);
  const BehaviorGraph graph = bind_rules(s.assemblies, s.behaviors);
  WorldState world = initial_world(s);

  std::vector<std::vector<const ForceProfile*>> forces(world.joints.size());
  for (const auto& f : s.forces) forces[*find_joint_slot(world, f.joint)].push_back(&f.profile);

  RunResult result;
  Recorder rec(s, world);
  rec.record(s, world, 0.0);

  const std::size_t n = step_count(s.duration, s.dt);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * s.dt;
    const std::vector<JointState> prev = states_of(world);
    for (std::size_t j = 0; j < world.joints.size(); ++j) {
      double f_ext = 0.0;
      for (const ForceProfile* p : forces[j]) f_ext += force_at(*p, t);
      world.joints[j].state = step(world.joints[j].state, world.joints[j].spec, f_ext, s.dt);
    }
    const std::vector<JointState> next = states_of(world);
    const double t_next = static_cast<double>(k + 1) * s.dt;
    Evaluation ev = evaluate(graph, prev, next, t_next);
    world = apply_effects(ev.effects, std::move(world));
    result.log.insert(result.log.end(), ev.log.begin(), ev.log.end());
    rec.record(s, world, t_next);
  }
  result.trajectory = std::move(rec.traj);
  result.final_world = std::move(world);
  return result;
}

RewardTerms reward_terms(const RewardState& state, const Eigen::Vector3d& action, const RewardParams& p) {
  RewardTerms r;
  const Eigen::Vector3d to_handle = state.handle_position - state.effector_position;
  const double d = to_handle.norm();
  r.r_dst = std::exp(-d);
  const double speed = state.effector_velocity.norm();
  if (d == 0.0) {
    r.r_dir = 1.0;  // already at the handle
  } else if (speed > 0.0) {
    r.r_dir = std::max(0.0, state.effector_velocity.dot(to_handle) / (speed * d));
  }
  const double span = state.goal_upper - state.goal_lower;
  r.r_cls = span > 0.0 ? std::clamp((state.goal_upper - state.goal_q) / span, 0.0, 1.0) : 0.0;
  r.r_smth = action.squaredNorm();
  r.total = p.lambda1 * r.r_dst + p.lambda2 * r.r_dir + p.lambda3 * r.r_cls + p.lambda4 * r.r_smth;
  return r;
}

double reward(const RewardState& state, const Eigen::Vector3d& action, const RewardParams& p) {
  return reward_terms(state, action, p).total;
}

}  // namespace artjoint
