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

// Rigid-body plant for the serial chain: recursive Newton-Euler inverse
// dynamics, composite-rigid-body mass matrix, forward dynamics, scripted
// wrench disturbances, penalty contact against primitive obstacles and a
// substepped semi-implicit Euler integrator. Everything is computed in the
// world frame.

#pragma once

#include <string>
#include <variant>
#include <vector>

#include "fic/kinematics.hpp"

namespace fic {

using Matrix6 = Eigen::Matrix<double, 6, 6>;

namespace detail {

struct LinkKinematics {
  std::vector<Vector3> omega, omega_dot, origin_acc, com, axis, origin;
};

// Velocities and accelerations of every link. The base is given the
// fictitious acceleration -g so gravity enters through the inertial terms.
inline LinkKinematics propagate(const ChainModel& model, const FkResult& fk, const VectorX& qd, const VectorX& qdd,
                                const Vector3& gravity) {
  const std::size_t n = model.dof();
  LinkKinematics lk;
  lk.omega.resize(n);
  lk.omega_dot.resize(n);
  lk.origin_acc.resize(n);
  lk.com.resize(n);
  lk.axis.resize(n);
  lk.origin.resize(n);
  Vector3 w = Vector3::Zero(), wd = Vector3::Zero(), a = -gravity, o = Vector3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const Vector3 z = fk.joints[i].rotation * model.joints[i].axis;
    const Vector3 oi = fk.joints[i].translation;
    const Vector3 r = oi - o;
    a = a + wd.cross(r) + w.cross(w.cross(r));
    if (model.joints[i].kind == JointKind::kRevolute) {
      wd = wd + z * qdd[ii] + w.cross(z * qd[ii]);
      w = w + z * qd[ii];
    } else {
      a = a + z * qdd[ii] + 2.0 * w.cross(z * qd[ii]);
    }
    o = oi;
    lk.omega[i] = w;
    lk.omega_dot[i] = wd;
    lk.origin_acc[i] = a;
    lk.axis[i] = z;
    lk.origin[i] = oi;
    lk.com[i] = fk.joints[i].rotation * model.links[i].com;
  }
  return lk;
}

inline void check_state(const ChainModel& model, const VectorX& q, const VectorX& qd) {
  check_configuration(model, q);
  if (qd.size() != q.size()) throw Error("velocity has " + std::to_string(qd.size()) + " entries, expected " +
                                         std::to_string(q.size()));
  if (!qd.allFinite()) throw Error("velocity is not finite");
}

}  // namespace detail

// Joint torques that produce the motion (q, qd, qdd), gravity included as
// configured on the model.
inline VectorX inverse_dynamics(const ChainModel& model, const VectorX& q, const VectorX& qd, const VectorX& qdd) {
  detail::check_state(model, q, qd);
  if (qdd.size() != q.size() || !qdd.allFinite()) throw Error("acceleration has wrong size or is not finite");
  const FkResult fk = forward_kinematics(model, q);
  const auto lk = detail::propagate(model, fk, qd, qdd, model.effective_gravity());
  const std::size_t n = model.dof();
  VectorX tau(static_cast<Eigen::Index>(n));
  Vector3 f_next = Vector3::Zero(), n_next = Vector3::Zero(), o_next = Vector3::Zero();
  for (std::size_t k = n; k-- > 0;) {
    const LinkInertia& L = model.links[k];
    const Matrix3& R = fk.joints[k].rotation;
    const Matrix3 inertia = R * L.inertia * R.transpose();
    const Vector3& w = lk.omega[k];
    const Vector3& rc = lk.com[k];
    const Vector3 ac = lk.origin_acc[k] + lk.omega_dot[k].cross(rc) + w.cross(w.cross(rc));
    const Vector3 f = L.mass * ac + f_next;
    // Moment about this joint's origin.
    Vector3 m = inertia * lk.omega_dot[k] + w.cross(inertia * w) + rc.cross(L.mass * ac) + n_next;
    if (k + 1 < n) m += (o_next - lk.origin[k]).cross(f_next);
    const auto kk = static_cast<Eigen::Index>(k);
    tau[kk] = (model.joints[k].kind == JointKind::kRevolute ? lk.axis[k].dot(m) : lk.axis[k].dot(f)) +
              model.joints[k].armature * qdd[kk];
    f_next = f;
    n_next = m;
    o_next = lk.origin[k];
  }
  return tau;
}

// Coriolis, centrifugal and gravity torques.
inline VectorX bias_forces(const ChainModel& model, const VectorX& q, const VectorX& qd) {
  return inverse_dynamics(model, q, qd, VectorX::Zero(q.size()));
}

inline VectorX gravity_torque(const ChainModel& model, const VectorX& q) {
  return inverse_dynamics(model, q, VectorX::Zero(q.size()), VectorX::Zero(q.size()));
}

// Composite-rigid-body mass matrix with spatial quantities taken about the
// world origin, motion vectors ordered (angular; linear).
inline MatrixX mass_matrix(const ChainModel& model, const VectorX& q) {
  const FkResult fk = forward_kinematics(model, q);
  const std::size_t n = model.dof();
  std::vector<Eigen::Matrix<double, 6, 1>> s(n);
  std::vector<Matrix6> composite(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector3 z = fk.joints[i].rotation * model.joints[i].axis;
    const Vector3 p = fk.joints[i].translation;
    if (model.joints[i].kind == JointKind::kRevolute)
      s[i] << z, p.cross(z);
    else
      s[i] << Vector3::Zero(), z;
    const LinkInertia& L = model.links[i];
    const Matrix3& R = fk.joints[i].rotation;
    const Vector3 c = fk.joints[i] * L.com;
    const Matrix3 cx = skew(c);
    Matrix6 I;
    I.topLeftCorner<3, 3>() = R * L.inertia * R.transpose() + L.mass * cx * cx.transpose();
    I.topRightCorner<3, 3>() = L.mass * cx;
    I.bottomLeftCorner<3, 3>() = L.mass * cx.transpose();
    I.bottomRightCorner<3, 3>() = L.mass * Matrix3::Identity();
    composite[i] = I;
  }
  for (std::size_t i = n - 1; i-- > 0;) composite[i] += composite[i + 1];
  MatrixX M(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = s[i].dot(composite[j] * s[j]) + (i == j ? model.joints[i].armature : 0.0);
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      M(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return M;
}

inline VectorX forward_dynamics(const ChainModel& model, const VectorX& q, const VectorX& qd, const VectorX& tau) {
  if (tau.size() != q.size() || !tau.allFinite()) throw Error("torque has wrong size or is not finite");
  const MatrixX M = mass_matrix(model, q);
  Eigen::LLT<MatrixX> llt(M);
  if (llt.info() != Eigen::Success) throw Error("mass matrix is not positive definite");
  return llt.solve(tau - bias_forces(model, q, qd));
}

// Includes the rotor energy of the armature terms.
inline double kinetic_energy(const ChainModel& model, const VectorX& q, const VectorX& qd) {
  return 0.5 * qd.dot(mass_matrix(model, q) * qd);
}

inline double potential_energy(const ChainModel& model, const VectorX& q) {
  const FkResult fk = forward_kinematics(model, q);
  const Vector3 g = model.effective_gravity();
  double u = 0.0;
  for (std::size_t i = 0; i < model.dof(); ++i) u -= model.links[i].mass * g.dot(fk.joints[i] * model.links[i].com);
  return u;
}

// Copy of the model with plant gravity switched on or off.
inline ChainModel gravity_mode(ChainModel model, bool on) {
  model.gravity_on = on;
  return model;
}

struct Disturbance {
  std::string frame;
  Wrench wrench;  // world frame, applied at the frame origin
  double t_start = 0.0;
  double t_end = 0.0;

  bool active(double t) const { return t >= t_start && t < t_end; }

  void validate() const {
    if (!(t_start < t_end)) throw Error("disturbance on '" + frame + "' needs t_start < t_end");
    if (!wrench.force.allFinite() || !wrench.torque.allFinite())
      throw Error("disturbance on '" + frame + "' has a non-finite wrench");
  }
};

struct Sphere {
  Vector3 center = Vector3::Zero();
  double radius = 0.0;
};

struct HalfSpace {
  Vector3 point = Vector3::Zero();
  Vector3 normal = Vector3::UnitZ();  // points out of the solid
};

struct Obstacle {
  std::variant<Sphere, HalfSpace> shape;
  double stiffness = 1e4;
  double damping = 1e2;
  std::vector<std::string> probes;  // frame names checked for contact

  void validate() const {
    if (!(stiffness > 0.0)) throw Error("obstacle stiffness must be positive");
    if (!(damping >= 0.0)) throw Error("obstacle damping must be non-negative");
    if (const auto* s = std::get_if<Sphere>(&shape)) {
      if (!(s->radius > 0.0) || !s->center.allFinite()) throw Error("sphere obstacle needs a positive radius");
    } else {
      const auto& h = std::get<HalfSpace>(shape);
      if (std::abs(h.normal.norm() - 1.0) > 1e-9 || !h.point.allFinite())
        throw Error("half-space obstacle normal must be unit length");
    }
  }

  // Penetration depth (> 0 inside) and outward normal at point p.
  std::pair<double, Vector3> penetration(const Vector3& p) const {
    if (const auto* s = std::get_if<Sphere>(&shape)) {
      const Vector3 d = p - s->center;
      const double dist = d.norm();
      const Vector3 nrm = dist > 1e-12 ? Vector3(d / dist) : Vector3::UnitZ();
      return {s->radius - dist, nrm};
    }
    const auto& h = std::get<HalfSpace>(shape);
    return {-(p - h.point).dot(h.normal), h.normal};
  }
};

struct Contact {
  std::size_t obstacle = 0;
  std::string probe;
  Vector3 point = Vector3::Zero();
  Vector3 normal = Vector3::Zero();
  double penetration = 0.0;
  double force = 0.0;  // along the normal, >= 0
};

struct SimState {
  double t = 0.0;
  VectorX q;
  VectorX qd;
  VectorX last_tau;     // commanded torque of the last step
  VectorX tau_ext;      // joint torque from disturbances and contacts, last substep
  std::vector<Contact> contacts;      // active contacts, last substep
  std::vector<double> probe_forces;   // one per (obstacle, probe) pair, obstacle-major

  static SimState at_rest(const VectorX& q) {
    SimState s;
    s.q = q;
    s.qd = VectorX::Zero(q.size());
    s.last_tau = VectorX::Zero(q.size());
    s.tau_ext = VectorX::Zero(q.size());
    return s;
  }
};

struct StepOptions {
  int substeps = 10;
};

namespace detail {

struct ExternalLoad {
  VectorX tau;
  std::vector<Contact> contacts;
  std::vector<double> probe_forces;
};

inline ExternalLoad external_load(const ChainModel& model, const FkResult& fk, const VectorX& qd, double t,
                                  const std::vector<Disturbance>& disturbances,
                                  const std::vector<Obstacle>& obstacles) {
  ExternalLoad out;
  out.tau = VectorX::Zero(qd.size());
  for (const auto& d : disturbances) {
    if (!d.active(t)) continue;
    const NamedFrame& nf = model.frame(d.frame);
    const Vector3 p = (fk.joints[nf.link] * nf.offset).translation;
    out.tau += wrench_to_torque(point_jacobian(model, fk, nf.link, p), d.wrench);
  }
  for (std::size_t k = 0; k < obstacles.size(); ++k) {
    const Obstacle& ob = obstacles[k];
    for (const auto& probe : ob.probes) {
      const NamedFrame& nf = model.frame(probe);
      const Vector3 p = (fk.joints[nf.link] * nf.offset).translation;
      const auto [depth, nrm] = ob.penetration(p);
      double f = 0.0;
      if (depth > 0.0) {
        const Jacobian jac = point_jacobian(model, fk, nf.link, p);
        const Vector3 v = jac.topRows<3>() * qd;
        f = std::max(0.0, ob.stiffness * depth - ob.damping * nrm.dot(v));
        if (f > 0.0) out.tau += jac.topRows<3>().transpose() * (f * nrm);
        out.contacts.push_back({k, probe, p, nrm, depth, f});
      }
      out.probe_forces.push_back(f);
    }
  }
  return out;
}

}  // namespace detail

// Advances the plant by dt under the commanded torque (held for the whole
// step), split into opt.substeps semi-implicit Euler substeps.
inline SimState step(const ChainModel& model, const SimState& state, const VectorX& tau_cmd,
                     const std::vector<Disturbance>& disturbances, const std::vector<Obstacle>& obstacles, double dt,
                     const StepOptions& opt = {}) {
  detail::check_state(model, state.q, state.qd);
  if (tau_cmd.size() != state.q.size()) throw Error("commanded torque has the wrong size");
  if (!tau_cmd.allFinite()) throw Error("commanded torque is not finite at t = " + std::to_string(state.t));
  if (!(dt > 0.0) || opt.substeps < 1) throw Error("step needs dt > 0 and at least one substep");
  SimState s = state;
  s.last_tau = tau_cmd;
  const double h = dt / opt.substeps;
  for (int k = 0; k < opt.substeps; ++k) {
    const FkResult fk = forward_kinematics(model, s.q);
    detail::ExternalLoad ext = detail::external_load(model, fk, s.qd, s.t, disturbances, obstacles);
    const VectorX tau = tau_cmd + ext.tau - model.joint_damping * s.qd;
    const VectorX qdd = forward_dynamics(model, s.q, s.qd, tau);
    s.qd += h * qdd;
    s.q += h * s.qd;
    s.t = state.t + (k + 1) * h;
    s.tau_ext = std::move(ext.tau);
    s.contacts = std::move(ext.contacts);
    s.probe_forces = std::move(ext.probe_forces);
  }
  if (!s.q.allFinite() || !s.qd.allFinite()) throw Error("plant state diverged at t = " + std::to_string(s.t));
  return s;
}

}  // namespace fic
