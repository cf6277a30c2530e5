// Copyright 2026 The fic-stack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial-chain model, forward kinematics, geometric Jacobians and the
// wrench -> joint torque transpose map. Nothing in here inverts a matrix.

#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fic/common.hpp"

namespace fic {

struct Transform {
  Matrix3 rotation = Matrix3::Identity();
  Vector3 translation = Vector3::Zero();

  static Transform identity() { return {}; }
  static Transform from_translation(const Vector3& t) { return {Matrix3::Identity(), t}; }

  Transform operator*(const Transform& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
  Vector3 operator*(const Vector3& p) const { return rotation * p + translation; }

  Transform inverse() const {
    Matrix3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  // Max-abs deviation of R^T R from identity and |det R - 1|.
  double orthonormality_error() const {
    double e = (rotation.transpose() * rotation - Matrix3::Identity()).cwiseAbs().maxCoeff();
    return std::max(e, std::abs(rotation.determinant() - 1.0));
  }
};

inline Matrix3 axis_angle_rotation(const Vector3& unit_axis, double angle) {
  return Eigen::AngleAxisd(angle, unit_axis).toRotationMatrix();
}

inline Matrix3 rpy_rotation(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Vector3::UnitZ()) * Eigen::AngleAxisd(pitch, Vector3::UnitY()) *
          Eigen::AngleAxisd(roll, Vector3::UnitX()))
      .toRotationMatrix();
}

struct Twist {
  Vector3 linear = Vector3::Zero();
  Vector3 angular = Vector3::Zero();

  Vector6 as_vector() const {
    Vector6 v;
    v << linear, angular;
    return v;
  }
};

struct Wrench {
  Vector3 force = Vector3::Zero();
  Vector3 torque = Vector3::Zero();

  static Wrench from_vector(const Vector6& v) { return {v.head<3>(), v.tail<3>()}; }
  Vector6 as_vector() const {
    Vector6 v;
    v << force, torque;
    return v;
  }
};

enum class JointKind { kRevolute, kPrismatic };

struct JointLimits {
  double min = 0.0;
  double max = 0.0;
};

// A joint frame is placed at parent_frame * origin; the joint then rotates
// about (or slides along) `axis`, expressed in that placed frame.
struct JointSpec {
  std::string name;
  JointKind kind = JointKind::kRevolute;
  Vector3 axis = Vector3::UnitZ();
  Transform origin;
  std::optional<JointLimits> limits;
  // Reflected actuator (rotor) inertia about the joint axis, kg m^2 or kg.
  double armature = 0.0;
};

// Inertial parameters of the link rigidly attached after a joint, in that
// joint's frame. `inertia` is taken about the center of mass.
struct LinkInertia {
  double mass = 1.0;
  Vector3 com = Vector3::Zero();
  Matrix3 inertia = Matrix3::Identity() * 1e-3;
};

struct NamedFrame {
  std::size_t link = 0;
  Transform offset;
};

struct ChainModel {
  std::string name;
  std::vector<JointSpec> joints;
  std::vector<LinkInertia> links;
  Vector3 gravity{0.0, 0.0, -9.81};
  std::map<std::string, NamedFrame> frames;
  // Viscous joint friction coefficient (N m s/rad), plant-side only.
  double joint_damping = 0.0;
  // When false the plant behaves as if gravity were compensated.
  bool gravity_on = true;

  Vector3 effective_gravity() const { return gravity_on ? gravity : Vector3::Zero(); }

  std::size_t dof() const { return joints.size(); }

  const NamedFrame& frame(const std::string& frame_name) const {
    auto it = frames.find(frame_name);
    if (it == frames.end()) throw Error("unknown frame '" + frame_name + "' in model '" + name + "'");
    return it->second;
  }

  bool has_frame(const std::string& frame_name) const { return frames.count(frame_name) != 0; }

  // Throws Error describing the first violated invariant.
  void validate() const {
    constexpr double kTol = 1e-9;
    if (joints.empty()) throw Error("chain model needs at least one joint");
    if (links.size() != joints.size())
      throw Error("chain model has " + std::to_string(links.size()) + " links for " +
                  std::to_string(joints.size()) + " joints");
    for (std::size_t i = 0; i < joints.size(); ++i) {
      const auto& j = joints[i];
      if (!j.axis.allFinite() || std::abs(j.axis.norm() - 1.0) > kTol)
        throw Error("joint " + std::to_string(i) + " axis is not unit length");
      if (!j.origin.rotation.allFinite() || !j.origin.translation.allFinite() ||
          j.origin.orthonormality_error() > kTol)
        throw Error("joint " + std::to_string(i) + " origin rotation is not a proper rotation");
      if (j.limits && !(j.limits->min <= j.limits->max))
        throw Error("joint " + std::to_string(i) + " has inverted limits");
      if (!(j.armature >= 0.0) || !std::isfinite(j.armature))
        throw Error("joint " + std::to_string(i) + " armature must be non-negative");
    }
    for (std::size_t i = 0; i < links.size(); ++i) {
      const auto& l = links[i];
      if (!(l.mass > 0.0) || !std::isfinite(l.mass))
        throw Error("link " + std::to_string(i) + " mass must be positive");
      if (!l.com.allFinite()) throw Error("link " + std::to_string(i) + " com is not finite");
      if ((l.inertia - l.inertia.transpose()).cwiseAbs().maxCoeff() > kTol)
        throw Error("link " + std::to_string(i) + " inertia is not symmetric");
      Eigen::SelfAdjointEigenSolver<Matrix3> es(l.inertia);
      if (!(es.eigenvalues().minCoeff() > 0.0))
        throw Error("link " + std::to_string(i) + " inertia is not positive definite");
    }
    for (const auto& [frame_name, f] : frames) {
      if (f.link >= joints.size())
        throw Error("frame '" + frame_name + "' references missing link " + std::to_string(f.link));
      if (f.offset.orthonormality_error() > kTol)
        throw Error("frame '" + frame_name + "' offset rotation is not a proper rotation");
    }
    if (!gravity.allFinite()) throw Error("gravity is not finite");
  }
};

namespace detail {

inline void check_configuration(const ChainModel& model, const VectorX& q) {
  if (static_cast<std::size_t>(q.size()) != model.dof())
    throw Error("configuration has " + std::to_string(q.size()) + " entries, model '" + model.name +
                "' has " + std::to_string(model.dof()) + " joints");
  if (!q.allFinite()) throw Error("configuration is not finite");
}

inline Transform joint_motion(const JointSpec& joint, double qi) {
  if (joint.kind == JointKind::kRevolute) return {axis_angle_rotation(joint.axis, qi), Vector3::Zero()};
  return Transform::from_translation(joint.axis * qi);
}

}  // namespace detail

struct FkResult {
  // World pose of each joint frame (the frame link i is attached to).
  std::vector<Transform> joints;
  std::map<std::string, Transform> frames;
};

inline FkResult forward_kinematics(const ChainModel& model, const VectorX& q) {
  detail::check_configuration(model, q);
  FkResult out;
  out.joints.reserve(model.dof());
  Transform world;
  for (std::size_t i = 0; i < model.dof(); ++i) {
    world = world * model.joints[i].origin * detail::joint_motion(model.joints[i], q[static_cast<Eigen::Index>(i)]);
    out.joints.push_back(world);
  }
  for (const auto& [frame_name, f] : model.frames) out.frames.emplace(frame_name, out.joints[f.link] * f.offset);
  return out;
}

inline Transform frame_pose(const ChainModel& model, const VectorX& q, const std::string& frame_name) {
  const NamedFrame& f = model.frame(frame_name);
  return forward_kinematics(model, q).joints[f.link] * f.offset;
}

// World-frame joint axes and axis anchor points, shared by the Jacobian and
// the dynamics code.
struct JointAxes {
  std::vector<Vector3> axis;
  std::vector<Vector3> anchor;
};

inline JointAxes joint_axes(const ChainModel& model, const FkResult& fk) {
  JointAxes ax;
  ax.axis.reserve(model.dof());
  ax.anchor.reserve(model.dof());
  for (std::size_t i = 0; i < model.dof(); ++i) {
    ax.axis.push_back(fk.joints[i].rotation * model.joints[i].axis);
    ax.anchor.push_back(fk.joints[i].translation);
  }
  return ax;
}

// Geometric Jacobian of a point rigidly attached to `link`, located at
// `point` (world). Rows are (linear; angular), both in the world frame.
inline Jacobian point_jacobian(const ChainModel& model, const FkResult& fk, std::size_t link,
                               const Vector3& point) {
  const JointAxes ax = joint_axes(model, fk);
  Jacobian jac = Jacobian::Zero(6, static_cast<Eigen::Index>(model.dof()));
  for (std::size_t j = 0; j <= link && j < model.dof(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    if (model.joints[j].kind == JointKind::kRevolute) {
      jac.block<3, 1>(0, col) = ax.axis[j].cross(point - ax.anchor[j]);
      jac.block<3, 1>(3, col) = ax.axis[j];
    } else {
      jac.block<3, 1>(0, col) = ax.axis[j];
    }
  }
  return jac;
}

inline Jacobian geometric_jacobian(const ChainModel& model, const VectorX& q, const std::string& frame_name) {
  const NamedFrame& f = model.frame(frame_name);
  const FkResult fk = forward_kinematics(model, q);
  return point_jacobian(model, fk, f.link, (fk.joints[f.link] * f.offset).translation);
}

// tau = J^T * (masked h).
inline VectorX wrench_to_torque(const Jacobian& jac, const Wrench& h, const DofMask& mask = kAllDofs) {
  Vector6 hv = h.as_vector();
  for (int k = 0; k < 6; ++k)
    if (!mask[static_cast<std::size_t>(k)]) hv[k] = 0.0;
  return jac.transpose() * hv;
}

}  // namespace fic
