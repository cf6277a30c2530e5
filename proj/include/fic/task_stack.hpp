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

// Superimposed task-space FIC attachments. Each attachment turns the pose
// error of one link frame into a wrench, and the wrenches reach the joints
// only through J^T: tau = sum_i J_i^T h_i. There is no projector, no inverse
// and no dynamics model anywhere on this path.

#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fic/fic.hpp"
#include "fic/kinematics.hpp"

namespace fic {

// Rotation vector (axis * angle, angle in [0, pi]) of a rotation matrix.
inline Vector3 rotation_log(const Matrix3& r) {
  const double cos_a = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const Vector3 vee(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));  // 2 sin(a) n
  // atan2 keeps full precision at both ends, where acos does not.
  const double angle = std::atan2(0.5 * vee.norm(), cos_a);
  if (angle < 1e-6) return 0.5 * vee;  // first order; exact to O(a^3)
  if (angle < 2.5) return angle / (2.0 * std::sin(angle)) * vee;
  // Near pi: n n^T from the symmetric part, column with the largest diagonal
  // (lowest index on ties), sign from the antisymmetric part unless that is
  // round-off (an exact half turn has no preferred sign).
  const Matrix3 nnt = (0.5 * (r + r.transpose()) - cos_a * Matrix3::Identity()) / (1.0 - cos_a);
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (nnt(i, i) > nnt(k, k)) k = i;
  Vector3 n = nnt.col(k) / std::sqrt(std::max(nnt(k, k), 1e-300));
  n.normalize();
  if (n.dot(vee) < -1e-12) n = -n;
  return angle * n;
}

// 6-vector (translation; rotation vector) taking `current` to `target`, both
// in the world frame.
inline Vector6 pose_error(const Transform& target, const Transform& current) {
  Vector6 e;
  e.head<3>() = target.translation - current.translation;
  e.tail<3>() = rotation_log(target.rotation * current.rotation.transpose());
  return e;
}

struct TaskAttachment {
  std::string frame;
  DofMask mask = kPositionDofs;
  FicParams pos_params;
  std::optional<FicParams> rot_params;
  // One state per active axis, in axis order.
  std::vector<FicAxisState> axis_states;
  Transform target;

  TaskAttachment() = default;
  TaskAttachment(std::string frame_name, DofMask dof_mask, FicParams pos, std::optional<FicParams> rot = {})
      : frame(std::move(frame_name)), mask(dof_mask), pos_params(pos), rot_params(rot) {
    reset();
  }

  int active_axes() const {
    int n = 0;
    for (bool m : mask) n += m ? 1 : 0;
    return n;
  }

  bool rotational() const { return mask[3] || mask[4] || mask[5]; }

  const FicParams& params_for_axis(int axis) const { return axis < 3 ? pos_params : *rot_params; }

  void reset() { axis_states.assign(static_cast<std::size_t>(active_axes()), fic_init()); }

  void validate() const {
    if (frame.empty()) throw Error("attachment needs a frame name");
    if (active_axes() == 0) throw Error("attachment '" + frame + "' controls no axis");
    pos_params.validate();
    if (rotational()) {
      if (!rot_params) throw Error("attachment '" + frame + "' controls rotation without rotational params");
      rot_params->validate();
    }
    if (axis_states.size() != static_cast<std::size_t>(active_axes()))
      throw Error("attachment '" + frame + "' state count does not match its mask");
  }
};

struct ControllerStack {
  std::vector<TaskAttachment> attachments;

  void validate() const {
    if (attachments.empty()) throw Error("controller stack is empty");
    std::set<std::string> seen;
    for (const auto& a : attachments) {
      a.validate();
      if (!seen.insert(a.frame).second) throw Error("frame '" + a.frame + "' is attached twice");
    }
  }

  void reset() {
    for (auto& a : attachments) a.reset();
  }
};

struct AttachmentOutput {
  Transform pose;          // current frame pose
  Vector6 error = Vector6::Zero();
  Wrench wrench;
  VectorX tau;
  double stored_energy = 0.0;  // sum over active axes after this tick
  bool switched = false;       // some axis changed phase this tick
};

struct StackOutput {
  VectorX tau;
  std::vector<AttachmentOutput> attachments;
  bool switched = false;
};

// One control tick. Updates the axis states in `stack` and returns the summed
// joint torque. `targets` (one per attachment) replace the stored targets when
// given.
inline StackOutput stack_step(ControllerStack& stack, const ChainModel& model, const VectorX& q,
                              std::span<const Transform> targets = {}, const FicOptions& opt = {}) {
  if (!targets.empty() && targets.size() != stack.attachments.size())
    throw Error("got " + std::to_string(targets.size()) + " targets for " +
                std::to_string(stack.attachments.size()) + " attachments");
  const FkResult fk = forward_kinematics(model, q);
  StackOutput out;
  out.tau = VectorX::Zero(static_cast<Eigen::Index>(model.dof()));
  out.attachments.reserve(stack.attachments.size());
  for (std::size_t i = 0; i < stack.attachments.size(); ++i) {
    TaskAttachment& att = stack.attachments[i];
    if (!targets.empty()) att.target = targets[i];
    const NamedFrame& nf = model.frame(att.frame);
    AttachmentOutput ao;
    ao.pose = fk.joints[nf.link] * nf.offset;
    ao.error = pose_error(att.target, ao.pose);
    Vector6 h = Vector6::Zero();
    std::size_t slot = 0;
    for (int axis = 0; axis < 6; ++axis) {
      if (!att.mask[static_cast<std::size_t>(axis)]) continue;
      const FicParams& p = att.params_for_axis(axis);
      const FicStepResult r = fic_step(p, att.axis_states[slot], ao.error[axis], opt);
      att.axis_states[slot] = r.state;
      h[axis] = r.force;
      ao.stored_energy += stored_energy(p, r.state, ao.error[axis]);
      ao.switched |= r.switched;
      ++slot;
    }
    ao.wrench = Wrench::from_vector(h);
    const Jacobian jac = point_jacobian(model, fk, nf.link, ao.pose.translation);
    ao.tau = wrench_to_torque(jac, ao.wrench, att.mask);
    if (!ao.tau.allFinite()) throw Error("non-finite torque from attachment '" + att.frame + "'");
    out.tau += ao.tau;
    out.switched |= ao.switched;
    out.attachments.push_back(std::move(ao));
  }
  return out;
}

// Certified per-joint ceiling on |tau_tot|: sum_i |J_i^T| (2 f_max per active
// axis). Every FIC force stays within 2 f_max, whatever its phase.
inline VectorX saturation_bound(const ControllerStack& stack, const ChainModel& model, const VectorX& q) {
  const FkResult fk = forward_kinematics(model, q);
  VectorX bound = VectorX::Zero(static_cast<Eigen::Index>(model.dof()));
  for (const auto& att : stack.attachments) {
    const NamedFrame& nf = model.frame(att.frame);
    const Jacobian jac = point_jacobian(model, fk, nf.link, (fk.joints[nf.link] * nf.offset).translation);
    Vector6 limit = Vector6::Zero();
    for (int axis = 0; axis < 6; ++axis)
      if (att.mask[static_cast<std::size_t>(axis)]) limit[axis] = 2.0 * att.params_for_axis(axis).f_max;
    bound += jac.transpose().cwiseAbs() * limit;
  }
  return bound;
}

}  // namespace fic
