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

// End-effector reference trajectories and a one-step postural IK that turns
// the end-effector reference into a joint-space reference, from which every
// attachment target is read off by forward kinematics.

#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "fic/task_stack.hpp"

namespace fic {

enum class TrajectoryKind { kLemniscate, kLine, kHold };

inline const char* to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::kLemniscate: return "lemniscate";
    case TrajectoryKind::kLine: return "line";
    case TrajectoryKind::kHold: return "hold";
  }
  return "?";
}

inline TrajectoryKind trajectory_kind(const std::string& s) {
  if (s == "lemniscate") return TrajectoryKind::kLemniscate;
  if (s == "line") return TrajectoryKind::kLine;
  if (s == "hold") return TrajectoryKind::kHold;
  throw Error("unknown trajectory kind '" + s + "'");
}

// Lemniscate: center + (a.x sin wt, a.y sin wt, a.z sin 2wt), the vertical
// (z) component running at twice the frequency to close the figure-8.
// Line: center + a sin wt. Hold: center. Orientation stays at the center's.
struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::kHold;
  Transform center;
  Vector3 amplitudes = Vector3::Zero();
  double period = 4.0;

  void validate() const {
    if (!(period > 0.0) || !std::isfinite(period)) throw Error("trajectory period must be positive");
    if (!amplitudes.allFinite() || (amplitudes.array() < 0.0).any())
      throw Error("trajectory amplitudes must be non-negative");
    if (center.orthonormality_error() > 1e-9 || !center.translation.allFinite())
      throw Error("trajectory center is not a valid transform");
  }

  // Peak Cartesian speed, used to size line trajectories.
  double peak_speed() const {
    const double w = 2.0 * std::numbers::pi / period;
    switch (kind) {
      case TrajectoryKind::kLine: return w * amplitudes.norm();
      case TrajectoryKind::kLemniscate:
        return w * std::sqrt(amplitudes.head<2>().squaredNorm() + 4.0 * amplitudes.z() * amplitudes.z());
      case TrajectoryKind::kHold: return 0.0;
    }
    return 0.0;
  }
};

inline Transform sample(const TrajectorySpec& spec, double t) {
  const double w = 2.0 * std::numbers::pi / spec.period;
  Vector3 offset = Vector3::Zero();
  switch (spec.kind) {
    case TrajectoryKind::kLemniscate: {
      const double s1 = std::sin(w * t);
      offset = Vector3(spec.amplitudes.x() * s1, spec.amplitudes.y() * s1, spec.amplitudes.z() * std::sin(2.0 * w * t));
      break;
    }
    case TrajectoryKind::kLine: offset = spec.amplitudes * std::sin(w * t); break;
    case TrajectoryKind::kHold: break;
  }
  return {spec.center.rotation, spec.center.translation + offset};
}

struct IkWeights {
  double damping = 1e-3;     // lambda, >= 1e-6
  double posture = 0.0;      // pull toward the posture prior
  double rotation = 1.0;     // weight of the orientation error rows
  DofMask mask = kAllDofs;   // end-effector rows that count
  double max_step = 0.5;     // joint-space step norm cap (rad)
  int backtracks = 12;       // halvings tried before giving up on a step

  void validate() const {
    if (!(damping >= 1e-6)) throw Error("IK damping must be at least 1e-6");
    if (!(posture >= 0.0) || !(rotation >= 0.0)) throw Error("IK weights must be non-negative");
    if (!(max_step > 0.0)) throw Error("IK max_step must be positive");
  }
};

namespace detail {

inline Vector6 weighted_ee_error(const ChainModel& model, const VectorX& q, const std::string& frame,
                                 const Transform& target, const IkWeights& w) {
  Vector6 e = pose_error(target, frame_pose(model, q, frame));
  for (int k = 0; k < 6; ++k) {
    if (!w.mask[static_cast<std::size_t>(k)]) e[k] = 0.0;
    if (k >= 3) e[k] *= w.rotation;
  }
  return e;
}

inline double ik_objective(const ChainModel& model, const VectorX& q, const std::string& frame,
                           const Transform& target, const VectorX& prior, const IkWeights& w) {
  return weighted_ee_error(model, q, frame, target, w).squaredNorm() + w.posture * w.posture * (q - prior).squaredNorm();
}

inline VectorX clamp_to_limits(const ChainModel& model, VectorX q) {
  for (std::size_t i = 0; i < model.dof(); ++i) {
    if (const auto& lim = model.joints[i].limits)
      q[static_cast<Eigen::Index>(i)] = std::clamp(q[static_cast<Eigen::Index>(i)], lim->min, lim->max);
  }
  return q;
}

}  // namespace detail

// One damped least-squares step from q_seed toward the end-effector target,
// regularized toward the posture prior:
//   (J^T W^2 J + (lambda^2 + w_p^2) I) dq = J^T W^2 e + w_p^2 (prior - q_seed).
// The step is capped at max_step, clamped to the joint limits, and halved
// until the objective does not increase (q_seed itself is the fallback).
inline VectorX postural_ik(const ChainModel& model, const VectorX& q_seed, const std::string& ee_frame,
                           const Transform& ee_target, const VectorX& posture_prior, const IkWeights& w = {}) {
  w.validate();
  detail::check_configuration(model, q_seed);
  detail::check_configuration(model, posture_prior);
  const auto n = static_cast<Eigen::Index>(model.dof());
  Jacobian jac = geometric_jacobian(model, q_seed, ee_frame);
  const Vector6 e = detail::weighted_ee_error(model, q_seed, ee_frame, ee_target, w);
  for (int k = 0; k < 6; ++k) {
    if (!w.mask[static_cast<std::size_t>(k)]) jac.row(k).setZero();
    if (k >= 3) jac.row(k) *= w.rotation;
  }
  const double reg = w.damping * w.damping + w.posture * w.posture;
  const MatrixX a = jac.transpose() * jac + reg * MatrixX::Identity(n, n);
  const VectorX b = jac.transpose() * e + w.posture * w.posture * (posture_prior - q_seed);
  VectorX dq = a.ldlt().solve(b);
  if (!dq.allFinite()) return q_seed;
  const double norm = dq.norm();
  if (norm > w.max_step) dq *= w.max_step / norm;

  const double before = detail::ik_objective(model, q_seed, ee_frame, ee_target, posture_prior, w);
  for (int k = 0; k <= w.backtracks; ++k) {
    const VectorX q = detail::clamp_to_limits(model, q_seed + dq);
    if (detail::ik_objective(model, q, ee_frame, ee_target, posture_prior, w) <= before) return q;
    dq *= 0.5;
  }
  return q_seed;
}

// Targets for every attachment, read off the joint reference by FK.
inline std::vector<Transform> attachment_targets(const ChainModel& model, const VectorX& q_ref,
                                                 const ControllerStack& stack) {
  const FkResult fk = forward_kinematics(model, q_ref);
  std::vector<Transform> out;
  out.reserve(stack.attachments.size());
  for (const auto& att : stack.attachments) {
    const NamedFrame& nf = model.frame(att.frame);
    out.push_back(fk.joints[nf.link] * nf.offset);
  }
  return out;
}

}  // namespace fic
