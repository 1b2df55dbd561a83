#include <cmath>
#include <functional>
#include <set>

#include "artjoint/asset_model.hpp"

namespace artjoint {

Eigen::Isometry3d Pose::to_isometry() const {
  Eigen::Isometry3d iso = Eigen::Isometry3d::Identity();
  iso.translation() = Eigen::Vector3d(position[0], position[1], position[2]);
  Eigen::Quaterniond rot(orientation[0], orientation[1], orientation[2], orientation[3]);
  iso.linear() = rot.normalized().toRotationMatrix();
  return iso;
}

Pose Pose::from_isometry(const Eigen::Isometry3d& iso) {
  Pose p;
  const Eigen::Vector3d t = iso.translation();
  p.position = {t.x(), t.y(), t.z()};
  Eigen::Quaterniond rot(iso.rotation());
  if (rot.w() < 0.0) rot.coeffs() = -rot.coeffs();
  p.orientation = {rot.w(), rot.x(), rot.y(), rot.z()};
  return p;
}

const RigidModule* Assembly::find_module(const std::string& module_id) const {
  for (const auto& m : modules)
    if (m.id == module_id) return &m;
  return nullptr;
}

const JointSpec* Assembly::find_joint(const std::string& joint_id) const {
  for (const auto& j : joints)
    if (j.id == joint_id) return &j;
  return nullptr;
}

const Marker* Assembly::find_marker(const std::string& ref) const {
  // "module:name" disambiguates markers that share a name across modules.
  const auto colon = ref.find(':');
  const Marker* found = nullptr;
  for (const auto& mk : markers) {
    const bool match = colon == std::string::npos
                           ? mk.name == ref
                           : mk.module_id == ref.substr(0, colon) && mk.name == ref.substr(colon + 1);
    if (!match) continue;
    if (found != nullptr) return nullptr;
    found = &mk;
  }
  return found;
}

namespace {

class ReportBuilder {
 public:
  void add(std::string path, std::string message, std::string code = "InvalidAsset") {
    report_.push_back({std::move(path), std::move(message), std::move(code)});
  }
  ValidationReport take() { return std::move(report_); }

 private:
  ValidationReport report_;
};

bool finite(double v) { return std::isfinite(v); }

double norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

void check_stiffness(const JointSpec& j, const std::string& path, ReportBuilder& out) {
  if (const auto* c = std::get_if<ConstantStiffness>(&j.stiffness)) {
    if (!finite(c->k) || c->k < 0.0) out.add(path + "/stiffness/k", "negative stiffness");
    return;
  }
  const auto& s = std::get<ScheduledStiffness>(j.stiffness);
  const std::pair<const char*, double> values[] = {
      {"k_high", s.k_high}, {"k_low", s.k_low}, {"k_max", s.k_max}, {"alpha", s.alpha}, {"lambda", s.lambda}};
  for (const auto& [name, v] : values) {
    if (!finite(v) || v < 0.0) out.add(path + "/stiffness/" + name, "negative stiffness");
  }
  if (s.k_low > s.k_high) out.add(path + "/stiffness/k_low", "k_low exceeds k_high");
  if (!(s.q_threshold >= j.q_lower_bound && s.q_threshold <= j.q_upper_bound))
    out.add(path + "/stiffness/q_threshold", "threshold out of range");
}

void check_target(const JointSpec& j, const std::string& path, ReportBuilder& out) {
  if (const auto* f = std::get_if<FixedTarget>(&j.target_policy)) {
    if (!(f->q_target >= j.q_lower_bound && f->q_target <= j.q_upper_bound))
      out.add(path + "/target_policy/q_target", "target out of range");
    return;
  }
  const auto& l = std::get<LatchTarget>(j.target_policy);
  if (!(l.q_threshold >= j.q_lower_bound && l.q_threshold <= j.q_upper_bound))
    out.add(path + "/target_policy/q_threshold", "threshold out of range");
}

void check_tree(const Assembly& a, ReportBuilder& out) {
  if (a.find_module(a.root_module) == nullptr) {
    out.add("/root_module", "root module missing", "MissingModule");
    return;
  }
  std::map<std::string, std::vector<std::string>> children;
  std::map<std::string, int> parents;
  for (const auto& j : a.joints) {
    if (a.find_module(j.parent_module) == nullptr || a.find_module(j.child_module) == nullptr) continue;
    children[j.parent_module].push_back(j.child_module);
    ++parents[j.child_module];
  }
  bool cyclic = parents.count(a.root_module) > 0;
  for (const auto& [id, n] : parents)
    if (n > 1) cyclic = true;

  std::set<std::string> seen;
  std::function<void(const std::string&)> visit = [&](const std::string& id) {
    if (!seen.insert(id).second) {
      cyclic = true;
      return;
    }
    for (const auto& c : children[id]) visit(c);
  };
  visit(a.root_module);
  if (cyclic) out.add("/joints", "cyclic structure", "CyclicStructure");

  for (std::size_t i = 0; i < a.modules.size(); ++i) {
    if (seen.count(a.modules[i].id) == 0)
      out.add("/modules/" + std::to_string(i), "unreachable module", "CyclicStructure");
  }
}

void check_behaviors(const Assembly& a, ReportBuilder& out) {
  std::set<std::string> rule_ids;
  for (std::size_t r = 0; r < a.behaviors.size(); ++r) {
    const auto& rule = a.behaviors[r];
    const std::string path = "/behaviors/" + std::to_string(r);
    if (!rule_ids.insert(rule.id).second) out.add(path + "/id", "duplicate behavior id");
    if (const auto* tc = std::get_if<ThresholdCrossed>(&rule.trigger)) {
      if (a.find_joint(tc->joint) == nullptr)
        out.add(path + "/trigger/joint", "unknown joint", "UnresolvedReference");
    }
    if (rule.effects.empty()) out.add(path + "/effects", "empty effect list");
    for (std::size_t e = 0; e < rule.effects.size(); ++e) {
      const std::string epath = path + "/effects/" + std::to_string(e);
      std::visit(
          [&](const auto& eff) {
            using T = std::decay_t<decltype(eff)>;
            if constexpr (std::is_same_v<T, SetOpenState>) {
              if (a.find_joint(eff.joint) == nullptr)
                out.add(epath + "/joint", "unknown joint", "UnresolvedReference");
            } else if constexpr (std::is_same_v<T, SetFixedTarget>) {
              const JointSpec* j = a.find_joint(eff.joint);
              if (j == nullptr)
                out.add(epath + "/joint", "unknown joint", "UnresolvedReference");
              else if (!(eff.q_target >= j->q_lower_bound && eff.q_target <= j->q_upper_bound))
                out.add(epath + "/q_target", "target out of range");
            } else if constexpr (std::is_same_v<T, SetProperty>) {
              // Local module targets are checked here; qualified ones at bind time.
              if (eff.target.find('/') == std::string::npos && a.find_module(eff.target) == nullptr)
                out.add(epath + "/target", "unknown module", "UnresolvedReference");
            }
          },
          rule.effects[e]);
    }
  }
}

}  // namespace

ValidationReport validate(const Assembly& a) {
  ReportBuilder out;
  if (a.id.empty()) out.add("/id", "empty id");

  const auto& q = a.base_frame.orientation;
  if (std::abs(std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]) - 1.0) > 1e-9)
    out.add("/base_frame/orientation", "non-unit quaternion");

  std::set<std::string> module_ids;
  for (std::size_t i = 0; i < a.modules.size(); ++i) {
    const auto& m = a.modules[i];
    const std::string path = "/modules/" + std::to_string(i);
    if (!module_ids.insert(m.id).second) out.add(path + "/id", "duplicate module id");
    if (!finite(m.mass) || m.mass <= 0.0) out.add(path + "/mass", "non-positive mass");
    const auto& r = m.rest_pose.orientation;
    if (std::abs(std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2] + r[3] * r[3]) - 1.0) > 1e-9)
      out.add(path + "/rest_pose/orientation", "non-unit quaternion");
  }

  std::set<std::string> joint_ids;
  for (std::size_t i = 0; i < a.joints.size(); ++i) {
    const auto& j = a.joints[i];
    const std::string path = "/joints/" + std::to_string(i);
    if (!joint_ids.insert(j.id).second) out.add(path + "/id", "duplicate joint id");
    if (a.find_module(j.parent_module) == nullptr)
      out.add(path + "/parent_module", "missing module " + j.parent_module, "MissingModule");
    if (a.find_module(j.child_module) == nullptr)
      out.add(path + "/child_module", "missing module " + j.child_module, "MissingModule");
    if (!finite(j.q_lower_bound) || !finite(j.q_upper_bound) || !(j.q_lower_bound < j.q_upper_bound))
      out.add(path + "/q_upper_bound", "invalid limits", "InvalidLimits");
    if (std::abs(norm(j.axis) - 1.0) > 1e-9) out.add(path + "/axis", "non-unit axis", "NonUnitAxis");
    if (!finite(j.effective_inertia) || j.effective_inertia <= 0.0)
      out.add(path + "/effective_inertia", "non-positive effective inertia");
    if (!finite(j.damping_D) || j.damping_D < 0.0) out.add(path + "/damping_D", "negative damping");
    if (!finite(j.mu_s) || j.mu_s < 0.0) out.add(path + "/mu_s", "negative friction coefficient");
    if (!finite(j.coulomb_floor) || j.coulomb_floor < 0.0)
      out.add(path + "/coulomb_floor", "negative coulomb floor");
    if (!finite(j.target_velocity)) out.add(path + "/target_velocity", "non-finite target velocity");
    check_stiffness(j, path, out);
    check_target(j, path, out);
  }

  check_tree(a, out);

  std::set<std::pair<std::string, std::string>> marker_keys;
  for (std::size_t i = 0; i < a.markers.size(); ++i) {
    const auto& mk = a.markers[i];
    const std::string path = "/markers/" + std::to_string(i);
    if (a.find_module(mk.module_id) == nullptr)
      out.add(path + "/module_id", "missing module " + mk.module_id, "MissingModule");
    if (!marker_keys.insert({mk.module_id, mk.name}).second) out.add(path + "/name", "duplicate marker name");
  }

  check_behaviors(a, out);
  return out.take();
}

}  // namespace artjoint
