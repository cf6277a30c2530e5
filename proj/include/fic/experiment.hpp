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

// Closed-loop experiment runner: reference -> postural IK -> attachment
// targets -> controller stack -> plant, once per control tick, with a tick
// log, CSV export and tracking metrics.

#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "fic/csv.hpp"
#include "fic/dynamics.hpp"
#include "fic/reference.hpp"
#include "fic/task_stack.hpp"

namespace fic {

// Randomly timed wrench pulses, drawn from the run seed.
struct RandomPulses {
  int count = 0;
  std::string frame = "elbow";
  double magnitude = 0.0;  // N, direction drawn uniformly on the sphere
  double width = 0.2;      // s
  double t_min = 0.0;
  double t_max = 0.0;
};

struct ExperimentConfig {
  static constexpr int kSchema = 1;

  std::string name = "experiment";
  std::string robot_name;  // built-in name, or empty for an inline model
  ChainModel robot;
  VectorX q_home;
  ControllerStack stack;
  std::string ee_frame = "ee";
  TrajectorySpec trajectory;
  bool center_at_home = true;  // trajectory center is the home end-effector pose
  IkWeights ik;
  std::vector<Disturbance> disturbances;
  RandomPulses random_pulses;
  std::vector<Obstacle> obstacles;
  bool gravity_on = true;
  double duration = 12.0;
  double control_rate = 333.3;
  int substeps = 30;  // 10 kHz physics at the default control rate
  std::uint64_t seed = 0;
  FicOptions fic;
  // Start of the evaluation window; negative means one trajectory period.
  double eval_start = -1.0;

  double dt() const { return 1.0 / control_rate; }
  long ticks() const { return std::lround(duration * control_rate); }
  double window_start() const {
    return eval_start >= 0.0 ? eval_start : (trajectory.kind == TrajectoryKind::kHold ? 0.0 : trajectory.period);
  }

  void validate() const {
    robot.validate();
    detail::check_configuration(robot, q_home);
    stack.validate();
    for (const auto& a : stack.attachments) (void)robot.frame(a.frame);
    (void)robot.frame(ee_frame);
    trajectory.validate();
    ik.validate();
    for (const auto& d : disturbances) {
      d.validate();
      (void)robot.frame(d.frame);
    }
    for (const auto& o : obstacles) {
      o.validate();
      for (const auto& p : o.probes) (void)robot.frame(p);
    }
    if (random_pulses.count < 0) throw Error("random pulse count must be non-negative");
    if (random_pulses.count > 0) {
      (void)robot.frame(random_pulses.frame);
      if (!(random_pulses.width > 0.0) || !(random_pulses.t_max >= random_pulses.t_min))
        throw Error("random pulses need a positive width and t_min <= t_max");
    }
    if (!(control_rate > 0.0) || !std::isfinite(control_rate)) throw Error("control_rate must be positive");
    if (!(duration > 0.0) || !std::isfinite(duration)) throw Error("duration must be positive");
    if (substeps < 1) throw Error("substeps must be at least 1");
    if (window_start() >= duration) throw Error("evaluation window starts after the run ends");
  }
};

// The end-effector reference resolved against the configured home pose.
inline TrajectorySpec resolved_trajectory(const ExperimentConfig& cfg) {
  TrajectorySpec t = cfg.trajectory;
  if (cfg.center_at_home) t.center = frame_pose(cfg.robot, cfg.q_home, cfg.ee_frame);
  return t;
}

inline std::vector<Disturbance> all_disturbances(const ExperimentConfig& cfg) {
  std::vector<Disturbance> out = cfg.disturbances;
  const RandomPulses& rp = cfg.random_pulses;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < rp.count; ++k) {
    Vector3 dir(n(rng), n(rng), n(rng));
    dir.normalize();
    const double t0 = rp.t_min + (rp.t_max - rp.t_min) * u(rng);
    out.push_back({rp.frame, Wrench{rp.magnitude * dir, Vector3::Zero()}, t0, t0 + rp.width});
  }
  return out;
}

class RunAborted : public Error {
 public:
  RunAborted(long tick, const std::string& quantity, const std::string& why)
      : Error("run aborted at tick " + std::to_string(tick) + ": " + quantity + " " + why),
        tick_(tick),
        quantity_(quantity) {}
  long tick() const { return tick_; }
  const std::string& quantity() const { return quantity_; }

 private:
  long tick_;
  std::string quantity_;
};

struct TickRecord {
  double t = 0.0;
  VectorX q, qd, tau, tau_ext, bound;
  std::vector<double> probe_forces;
  Vector3 ee_pos = Vector3::Zero();
  Vector3 ee_ref = Vector3::Zero();
  std::vector<Vector6> errors;  // per attachment
  double stored_energy = 0.0;   // controller, all axes, after this tick
  bool switched = false;
};

struct RunLog {
  std::vector<std::string> joint_names;
  std::vector<std::string> probe_names;  // "<obstacle index>:<frame>"
  std::vector<std::string> attachment_frames;
  std::vector<DofMask> attachment_masks;
  std::vector<TickRecord> ticks;
  double energy_injected = 0.0;  // sum of tau . dq over the run
};

struct AttachmentMetrics {
  std::string frame;
  double rmse = 0.0;       // of the translational error norm
  double max_error = 0.0;  // same
};

struct RunReport {
  std::string name;
  Vector3 rmse = Vector3::Zero();
  Vector3 max_error = Vector3::Zero();
  VectorX torque_peak;
  double energy_ledger = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
  long samples = 0;
  std::vector<AttachmentMetrics> attachments;
  long saturation_violations = 0;  // ticks with |tau_i| above the certified bound
  double max_bound_ratio = 0.0;    // max_i,t |tau_i| / bound_i
  std::string log_path;
};

// Tracking metrics over [window_start, window_end] (end < 0: to the last tick).
inline RunReport report_metrics(const RunLog& log, double window_start, double window_end = -1.0) {
  RunReport r;
  r.window_start = window_start;
  r.window_end = window_end >= 0.0 ? window_end : (log.ticks.empty() ? 0.0 : log.ticks.back().t);
  r.energy_ledger = log.energy_injected;
  const std::size_t na = log.attachment_frames.size();
  std::vector<double> att_sq(na, 0.0), att_max(na, 0.0);
  Vector3 sq = Vector3::Zero();
  for (const auto& rec : log.ticks) {
    if (r.torque_peak.size() == 0) r.torque_peak = VectorX::Zero(rec.tau.size());
    r.torque_peak = r.torque_peak.cwiseMax(rec.tau.cwiseAbs());
    if (rec.bound.size() == rec.tau.size()) {
      for (Eigen::Index i = 0; i < rec.tau.size(); ++i) {
        const double a = std::abs(rec.tau[i]);
        if (a > rec.bound[i] + 1e-9) ++r.saturation_violations;
        if (rec.bound[i] > 0.0) r.max_bound_ratio = std::max(r.max_bound_ratio, a / rec.bound[i]);
      }
    }
    if (rec.t < r.window_start || rec.t > r.window_end) continue;
    const Vector3 e = rec.ee_ref - rec.ee_pos;
    sq += e.cwiseAbs2();
    r.max_error = r.max_error.cwiseMax(e.cwiseAbs());
    for (std::size_t a = 0; a < na && a < rec.errors.size(); ++a) {
      const double en = rec.errors[a].head<3>().norm();
      att_sq[a] += en * en;
      att_max[a] = std::max(att_max[a], en);
    }
    ++r.samples;
  }
  if (r.samples > 0) r.rmse = (sq / static_cast<double>(r.samples)).cwiseSqrt();
  for (std::size_t a = 0; a < na; ++a) {
    r.attachments.push_back({log.attachment_frames[a],
                             r.samples > 0 ? std::sqrt(att_sq[a] / static_cast<double>(r.samples)) : 0.0, att_max[a]});
  }
  return r;
}

namespace detail {

inline void require_finite(long tick, const std::string& what, const VectorX& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i])) throw RunAborted(tick, what + "[" + std::to_string(i) + "]", "is not finite");
}

}  // namespace detail

// Runs the closed loop. Throws RunAborted on any non-finite quantity.
inline RunLog run_log(const ExperimentConfig& cfg) {
  cfg.validate();
  const ChainModel plant = gravity_mode(cfg.robot, cfg.gravity_on);
  const ChainModel& ctrl_model = cfg.robot;  // kinematics only
  const TrajectorySpec traj = resolved_trajectory(cfg);
  const std::vector<Disturbance> disturbances = all_disturbances(cfg);
  ControllerStack stack = cfg.stack;
  stack.reset();

  RunLog log;
  for (const auto& j : cfg.robot.joints) log.joint_names.push_back(j.name);
  for (std::size_t k = 0; k < cfg.obstacles.size(); ++k)
    for (const auto& p : cfg.obstacles[k].probes) log.probe_names.push_back(std::to_string(k) + ":" + p);
  for (const auto& a : stack.attachments) {
    log.attachment_frames.push_back(a.frame);
    log.attachment_masks.push_back(a.mask);
  }
  const long n_ticks = cfg.ticks();
  log.ticks.reserve(static_cast<std::size_t>(n_ticks));

  const double dt = cfg.dt();
  SimState state = SimState::at_rest(cfg.q_home);
  state.probe_forces.assign(log.probe_names.size(), 0.0);
  VectorX q_ref = cfg.q_home;
  const StepOptions step_opt{cfg.substeps};
  for (long k = 0; k < n_ticks; ++k) {
    const double t = static_cast<double>(k) * dt;
    state.t = t;  // no drift from summing substeps
    const Transform x_ref = sample(traj, t);
    q_ref = postural_ik(ctrl_model, q_ref, cfg.ee_frame, x_ref, cfg.q_home, cfg.ik);
    detail::require_finite(k, "q_ref", q_ref);
    const std::vector<Transform> targets = attachment_targets(ctrl_model, q_ref, stack);
    StackOutput out;
    try {
      out = stack_step(stack, ctrl_model, state.q, targets, cfg.fic);
    } catch (const RunAborted&) {
      throw;
    } catch (const Error& e) {
      throw RunAborted(k, "tau_cmd", e.what());
    }
    detail::require_finite(k, "tau_cmd", out.tau);

    TickRecord rec;
    rec.t = t;
    rec.q = state.q;
    rec.qd = state.qd;
    rec.tau = out.tau;
    rec.tau_ext = state.tau_ext;
    rec.probe_forces = state.probe_forces;
    rec.bound = saturation_bound(stack, ctrl_model, state.q);
    rec.ee_pos = frame_pose(ctrl_model, state.q, cfg.ee_frame).translation;
    rec.ee_ref = x_ref.translation;
    for (const auto& a : out.attachments) {
      rec.errors.push_back(a.error);
      rec.stored_energy += a.stored_energy;
    }
    rec.switched = out.switched;

    const VectorX q_before = state.q;
    try {
      state = step(plant, state, out.tau, disturbances, cfg.obstacles, dt, step_opt);
    } catch (const Error& e) {
      throw RunAborted(k, "plant state", e.what());
    }
    detail::require_finite(k, "q", state.q);
    detail::require_finite(k, "qd", state.qd);
    log.energy_injected += out.tau.dot(state.q - q_before);
    log.ticks.push_back(std::move(rec));
  }
  return log;
}

inline RunReport run(const ExperimentConfig& cfg) {
  const RunLog log = run_log(cfg);
  RunReport r = report_metrics(log, cfg.window_start());
  r.name = cfg.name;
  return r;
}

// Column order: t, q*, qd*, tau_cmd*, tau_ext*, contact_force*, ee_*, ref_*,
// err_<frame>_<axis> for every active attachment axis, stored_energy.
inline void write_log_csv(std::ostream& os, const RunLog& log) {
  static const char* kAxes[6] = {"x", "y", "z", "rx", "ry", "rz"};
  os << "t";
  for (const char* group : {"q", "qd", "tau_cmd", "tau_ext"})
    for (const auto& j : log.joint_names) os << ',' << group << '_' << j;
  for (const auto& p : log.probe_names) os << ",contact_force_" << p;
  os << ",ee_x,ee_y,ee_z,ref_x,ref_y,ref_z";
  for (std::size_t a = 0; a < log.attachment_frames.size(); ++a)
    for (int k = 0; k < 6; ++k)
      if (log.attachment_masks[a][static_cast<std::size_t>(k)]) os << ",err_" << log.attachment_frames[a] << '_' << kAxes[k];
  os << ",stored_energy\n";
  for (const auto& r : log.ticks) {
    os << csv::num(r.t);
    for (const VectorX* v : {&r.q, &r.qd, &r.tau, &r.tau_ext})
      for (Eigen::Index i = 0; i < v->size(); ++i) os << ',' << csv::num((*v)[i]);
    for (double f : r.probe_forces) os << ',' << csv::num(f);
    for (int i = 0; i < 3; ++i) os << ',' << csv::num(r.ee_pos[i]);
    for (int i = 0; i < 3; ++i) os << ',' << csv::num(r.ee_ref[i]);
    for (std::size_t a = 0; a < r.errors.size(); ++a)
      for (int k = 0; k < 6; ++k)
        if (log.attachment_masks[a][static_cast<std::size_t>(k)]) os << ',' << csv::num(r.errors[a][k]);
    os << ',' << csv::num(r.stored_energy) << '\n';
  }
}

}  // namespace fic
