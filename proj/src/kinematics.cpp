#include <algorithm>

#include "artjoint/asset_model.hpp"
#include "artjoint/error.hpp"

namespace artjoint {

Eigen::Isometry3d joint_motion(const JointSpec& joint, double q) {
  const Eigen::Vector3d axis(joint.axis[0], joint.axis[1], joint.axis[2]);
  Eigen::Isometry3d m = Eigen::Isometry3d::Identity();
  if (joint.kind == JointKind::Prismatic) {
    m.translation() = q * axis;
    return m;
  }
  // Rotation about the line through the anchor.
  const Eigen::Vector3d anchor(joint.anchor[0], joint.anchor[1], joint.anchor[2]);
  m.linear() = Eigen::AngleAxisd(q, axis.normalized()).toRotationMatrix();
  m.translation() = anchor - m.linear() * anchor;
  return m;
}

FkResult forward_kinematics(const Assembly& a, const JointValues& q) {
  for (const auto& [id, value] : q) {
    if (a.find_joint(id) == nullptr) throw Error(ErrorCode::UnknownJoint, id, "no such joint in " + a.id);
  }
  const RigidModule* root = a.find_module(a.root_module);
  if (root == nullptr) throw Error(ErrorCode::MissingModule, a.root_module, "root module missing");

  FkResult out;
  out.module_poses[root->id] = a.base_frame.to_isometry() * root->rest_pose.to_isometry();

  // Breadth-first from the root; joints are edges parent -> child.
  std::vector<std::string> frontier{root->id};
  while (!frontier.empty()) {
    std::vector<std::string> next;
    for (const auto& parent : frontier) {
      for (const auto& j : a.joints) {
        if (j.parent_module != parent || out.module_poses.count(j.child_module) != 0) continue;
        const RigidModule* child = a.find_module(j.child_module);
        if (child == nullptr) throw Error(ErrorCode::MissingModule, j.child_module, "joint " + j.id);
        const auto it = q.find(j.id);
        if (it == q.end()) throw Error(ErrorCode::UnknownJoint, j.id, "missing joint value");
        double value = it->second;
        const double clamped = std::clamp(value, j.q_lower_bound, j.q_upper_bound);
        if (clamped != value) {
          out.clamped_joints.push_back(j.id);
          value = clamped;
        }
        out.module_poses[child->id] =
            out.module_poses.at(parent) * joint_motion(j, value) * child->rest_pose.to_isometry();
        next.push_back(child->id);
      }
    }
    frontier = std::move(next);
  }
  return out;
}

Eigen::Vector3d marker_world(const Assembly& a, const JointValues& q, const std::string& marker) {
  const Marker* mk = a.find_marker(marker);
  if (mk == nullptr) throw Error(ErrorCode::UnknownMarker, marker, "no unique marker in " + a.id);
  const FkResult fk = forward_kinematics(a, q);
  const auto it = fk.module_poses.find(mk->module_id);
  if (it == fk.module_poses.end()) throw Error(ErrorCode::UnknownMarker, marker, "marker module unreachable");
  return it->second * Eigen::Vector3d(mk->local_point[0], mk->local_point[1], mk->local_point[2]);
}

}  // namespace artjoint
