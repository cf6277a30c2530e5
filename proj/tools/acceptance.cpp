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

// Acceptance checks. One PASS/FAIL line per criterion; exit status 0 iff all
// pass.

#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fic/attractor.hpp"
#include "fic/dynamics.hpp"
#include "fic/experiment.hpp"
#include "fic/io.hpp"
#include "fic/models.hpp"
#include "test_support.hpp"

namespace {

using namespace fic;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

int g_failures = 0;

void report(int id, const char* title, const Outcome& o) {
  std::printf("criterion %2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", title, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++g_failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void run_criterion(int id, const char* title, const std::function<Outcome()>& body) {
  try {
    report(id, title, body());
  } catch (const std::exception& e) {
    report(id, title, {false, std::string("exception: ") + e.what()});
  }
}

// ---------------------------------------------------------------- 1

Outcome profile_correctness() {
  const auto t0 = Clock::now();
  Outcome o;
  double worst_rel = 0.0, worst_seam = 0.0;
  for (const auto& [name, p] : test::table1_sets()) {
    // Bundled preset files must carry the table values.
    const FicParams file = io::load_fic_preset(io::kDefaultPresetDir, name);
    if (file.x0 != p.x0 || file.xb != p.xb || file.f_max != p.f_max || file.k0 != p.k0 || file.s != p.s) {
      o.pass = false;
      o.detail += name + " preset differs from the table; ";
    }
    auto force = [&p](double x) { return profile_force(p, x); };
    const double hi = 3.0 * p.xb;
    for (int i = 1; i <= 60; ++i) {
      const double x = hi * i / 60.0;
      const double ref = test::adaptive_simpson(force, 0.0, x, {p.x0, p.xb}, 1e-14);
      worst_rel = std::max(worst_rel, std::abs(profile_energy(p, x) - ref) / std::abs(ref));
    }
    if (profile_force(p, p.x0) != p.k0 * p.x0) {
      o.pass = false;
      o.detail += name + " discontinuous at x0; ";
    }
    const double seam = std::abs(p.f_max - profile_force(p, std::nextafter(p.xb, 0.0)));
    const double seam_limit = p.delta_f() * std::exp(-p.s);
    worst_seam = std::max(worst_seam, seam / seam_limit);
    if (seam > seam_limit + 1e-12) {
      o.pass = false;
      o.detail += name + " seam too large; ";
    }
  }
  const double secs = seconds_since(t0);
  o.pass = o.pass && worst_rel <= 1e-8 && secs < 1.0;
  o.detail += fmt("max rel energy err %.2e (<= 1e-8), seam/limit %.3f, %.3f s (< 1 s)", worst_rel, worst_seam, secs);
  return o;
}

// ---------------------------------------------------------------- 2

Outcome attractor_arrival() {
  const auto t0 = Clock::now();
  Outcome o;
  double worst_speed_ratio = 0.0, worst_rate = 0.0;
  for (const auto& [name, p] : test::table1_sets()) {
    for (double scale : {0.5, 1.0, 3.0}) {
      MassSimOptions opt;
      opt.dt = 1e-6;
      opt.duration = 0.6;
      const auto traj = autonomous_mass_sim(p, 1.0, scale * p.xb, no_push(), opt);
      // Closest approach during the first convergence phase.
      double peak = 0.0, best = std::numeric_limits<double>::infinity(), arrival_speed = -1.0;
      bool in_conv = false, arrived = false;
      for (const auto& s : traj) {
        peak = std::max(peak, std::abs(s.x_dot));
        if (s.phase == FicPhase::kConvergence) {
          in_conv = true;
          if (std::abs(s.err) < best) {
            best = std::abs(s.err);
            arrival_speed = std::abs(s.x_dot);
          }
        } else if (in_conv) {
          if (std::abs(s.err) < best) arrival_speed = std::abs(s.x_dot);
          arrived = true;
          break;
        }
      }
      if (!arrived) {
        o.pass = false;
        o.detail += fmt("%s x%.1f never arrived; ", name.c_str(), scale);
        continue;
      }
      worst_speed_ratio = std::max(worst_speed_ratio, arrival_speed / peak);
      for (const auto& s : traj)
        if (s.lyapunov > 0.0 && s.t <= 0.5) worst_rate = std::max(worst_rate, std::abs(s.v_dot) / s.lyapunov);
    }
  }
  const double secs = seconds_since(t0);
  o.pass = o.pass && worst_speed_ratio <= 1e-3 && worst_rate <= 1e-6 && secs < 10.0;
  o.detail += fmt("arrival/peak speed %.2e (<= 1e-3), |dV/dt|/V %.2e (<= 1e-6), %.2f s (< 10 s)", worst_speed_ratio,
                  worst_rate, secs);
  return o;
}

// ---------------------------------------------------------------- 3

Outcome passivity_ledger() {
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> len(0.002, 0.03);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  int episodes = 0;
  for (const auto& [name, p] : test::table1_sets()) {
    for (int episode = 0; episode < 20; ++episode) {
      std::vector<PushPulse> pulses;
      double t = 0.0;
      for (int k = 0; k < 1 + episode % 3; ++k) {
        const double d = len(rng);
        pulses.push_back({t, t + d, 2.0 * p.f_max * unit(rng)});
        t += d + 0.5 * len(rng);
      }
      MassSimOptions opt;
      opt.dt = 1e-5;
      opt.duration = 1.0;
      opt.record_every = 1000;
      const auto traj = autonomous_mass_sim(p, 1.0, 0.0, pulse_train(pulses), opt);
      worst = std::max(worst, traj.back().ctrl_work);
      ++episodes;
    }
  }
  return {worst <= 1e-6, fmt("%d episodes (20 per parameter set), max net controller work %.3e J (<= 1e-6)", episodes, worst)};
}

// ---------------------------------------------------------------- 4

Jacobian fd_jacobian(const ChainModel& m, const VectorX& q, const std::string& frame, double h) {
  Jacobian j(6, q.size());
  for (Eigen::Index k = 0; k < q.size(); ++k) {
    VectorX qp = q, qm = q;
    qp[k] += h;
    qm[k] -= h;
    const Transform tp = frame_pose(m, qp, frame), tm = frame_pose(m, qm, frame);
    const Eigen::AngleAxisd aa(tp.rotation * tm.rotation.transpose());
    j.block<3, 1>(0, k) = (tp.translation - tm.translation) / (2 * h);
    j.block<3, 1>(3, k) = aa.angle() * aa.axis() / (2 * h);
  }
  return j;
}

Outcome jacobian_check() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  double worst = 0.0;
  int configs = 0;
  for (const ChainModel& m : {models::planar_3r(), models::lwr7()}) {
    for (int trial = 0; trial < 100; ++trial) {
      VectorX q(static_cast<Eigen::Index>(m.dof()));
      for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = u(rng);
      const Jacobian a = geometric_jacobian(m, q, "ee");
      const Jacobian n = fd_jacobian(m, q, "ee", 1e-7);
      worst = std::max(worst, (a - n).cwiseAbs().maxCoeff() / std::max(1.0, a.cwiseAbs().maxCoeff()));
      ++configs;
    }
  }
  return {worst <= 1e-6, fmt("%d configs (planar_3r, lwr7), max rel err %.2e (<= 1e-6)", configs, worst)};
}

// ---------------------------------------------------------------- 5

Outcome dynamics_oracles() {
  Outcome o;
  const ChainModel pend = models::pendulum();
  VectorX one(1), zero(1);
  one << std::numbers::pi / 2;
  zero << 0.0;
  const double g_err = std::abs(inverse_dynamics(pend, one, zero, zero)[0] - 9.81);

  SimState s = SimState::at_rest(one);
  auto energy = [&](const SimState& st) { return kinetic_energy(pend, st.q, st.qd) + potential_energy(pend, st.q); };
  const double e0 = energy(s);
  const double swing = e0 - potential_energy(pend, zero);
  double drift = 0.0;
  for (int k = 0; k < 10000; ++k) {
    s = step(pend, s, zero, {}, {}, 1e-3);
    drift = std::max(drift, std::abs(energy(s) - e0));
  }
  drift /= swing;

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double asym = 0.0, probe = 0.0;
  const ChainModel arm = gravity_mode(models::lwr7(), false);
  for (int trial = 0; trial < 50; ++trial) {
    VectorX q(7);
    for (int i = 0; i < 7; ++i) q[i] = u(rng);
    const MatrixX M = mass_matrix(arm, q);
    asym = std::max(asym, (M - M.transpose()).cwiseAbs().maxCoeff());
    for (int k = 0; k < 7; ++k)
      probe = std::max(probe, (M.col(k) - inverse_dynamics(arm, q, VectorX::Zero(7), VectorX::Unit(7, k))).cwiseAbs().maxCoeff());
  }
  o.pass = g_err <= 1e-9 && drift <= 1e-3 && asym <= 1e-10 && probe <= 1e-9;
  o.detail = fmt("gravity torque err %.1e (<= 1e-9), energy drift %.3f%% (<= 0.1%%), M asym %.1e (<= 1e-10), "
                 "column probe %.1e (<= 1e-9)",
                 g_err, 100.0 * drift, asym, probe);
  return o;
}

// ---------------------------------------------------------------- 6-10

struct PresetRun {
  ExperimentConfig cfg;
  RunLog log;
  RunReport report;
  double seconds = 0.0;
};

PresetRun run_preset(const std::string& name) {
  PresetRun r;
  r.cfg = io::load_experiment_preset(io::kDefaultPresetDir, name);
  const auto t0 = Clock::now();
  r.log = run_log(r.cfg);
  r.seconds = seconds_since(t0);
  r.report = report_metrics(r.log, r.cfg.window_start());
  return r;
}

std::map<std::string, PresetRun>& runs() {
  static std::map<std::string, PresetRun> cache;
  return cache;
}

const PresetRun& preset(const std::string& name) {
  auto it = runs().find(name);
  if (it == runs().end()) it = runs().emplace(name, run_preset(name)).first;
  return it->second;
}

bool all_finite(const RunLog& log) {
  for (const auto& t : log.ticks)
    if (!t.q.allFinite() || !t.qd.allFinite() || !t.tau.allFinite() || !t.bound.allFinite()) return false;
  return !log.ticks.empty();
}

std::string mm(const Vector3& v) { return fmt("%.2f/%.2f/%.2f mm", 1e3 * v.x(), 1e3 * v.y(), 1e3 * v.z()); }

Outcome figure8_free() {
  const PresetRun& r = preset("sim_fig8_noint");
  const Vector3& e = r.report.rmse;
  const bool ok = all_finite(r.log) && (e.array() < 0.010).all() && r.seconds < 120.0 &&
                  r.report.saturation_violations == 0;
  return {ok, fmt("RMSE x/y/z %s (< 10 mm), %.2f s (< 120 s)", mm(e).c_str(), r.seconds)};
}

Outcome figure8_obstacle() {
  const PresetRun& free = preset("sim_fig8_noint");
  const PresetRun& obs = preset("sim_fig8_obstacle");
  const Vector3 base = free.report.rmse, hit = obs.report.rmse;
  const Vector3 growth = hit - base;
  // The sphere sits ahead of the arm along +x: x is the obstacle-normal axis.
  const bool concentrated = growth.x() > 0.0 && growth.x() > growth.y() && growth.x() > growth.z() &&
                            hit.x() > hit.y() && hit.x() > hit.z();
  const bool off_axis = hit.y() <= 1.5 * base.y() && hit.z() <= 1.5 * base.z();
  double contact = 0.0;
  for (const auto& t : obs.log.ticks)
    for (double f : t.probe_forces) contact = std::max(contact, f);
  const bool ok = concentrated && off_axis && contact > 0.0 && all_finite(obs.log) &&
                  obs.report.saturation_violations == 0;
  return {ok, fmt("RMSE %s vs free %s; off-axis ratios %.2f/%.2f (<= 1.5); peak contact %.0f N; "
                  "saturation violations %ld",
                  mm(hit).c_str(), mm(base).c_str(), hit.y() / base.y(), hit.z() / base.z(), contact,
                  obs.report.saturation_violations)};
}

// Elbow translational error norm of attachment `a` per tick.
std::vector<double> attachment_error(const RunLog& log, std::size_t a) {
  std::vector<double> e;
  for (const auto& t : log.ticks) e.push_back(t.errors[a].head<3>().norm());
  return e;
}

struct WindowStats {
  double mean = 0.0;
  double peak = 0.0;
};

WindowStats window(const RunLog& log, const std::vector<double>& e, double t0, double t1) {
  WindowStats w;
  int n = 0;
  for (std::size_t k = 0; k < log.ticks.size(); ++k) {
    if (log.ticks[k].t < t0 || log.ticks[k].t > t1) continue;
    w.mean += e[k];
    w.peak = std::max(w.peak, e[k]);
    ++n;
  }
  if (n > 0) w.mean /= n;
  return w;
}

Outcome elbow_disturbance() {
  const PresetRun& free = preset("robot_line_free");
  const PresetRun& push = preset("robot_line_push");
  std::size_t elbow = 0;
  while (elbow < push.log.attachment_frames.size() && push.log.attachment_frames[elbow] != "elbow") ++elbow;
  if (elbow == push.log.attachment_frames.size()) return {false, "no elbow attachment"};
  const auto e_free = attachment_error(free.log, elbow);
  const auto e_push = attachment_error(push.log, elbow);
  Outcome o;
  o.pass = all_finite(push.log) && (push.report.rmse.array() <= 0.025).all() && push.report.saturation_violations == 0;
  o.detail = fmt("EE RMSE %s (<= 25 mm)", mm(push.report.rmse).c_str());
  for (const auto& d : push.cfg.disturbances) {
    // Growth: peak over the pulse (+0.5 s) strictly above the unperturbed peak.
    const WindowStats a = window(push.log, e_push, d.t_start, d.t_end + 0.5);
    const WindowStats b = window(free.log, e_free, d.t_start, d.t_end + 0.5);
    // Recovery: mean over [end + 2 s, end + 3 s] within 1.5x the unperturbed
    // mean over the same window, plus 1 mm.
    const WindowStats ra = window(push.log, e_push, d.t_end + 2.0, d.t_end + 3.0);
    const WindowStats rb = window(free.log, e_free, d.t_end + 2.0, d.t_end + 3.0);
    const bool grows = a.peak > b.peak;
    const bool recovers = ra.mean <= 1.5 * rb.mean + 1e-3;
    o.pass = o.pass && grows && recovers;
    o.detail += fmt("; pulse %.0f-%.0f s: elbow peak %.1f vs %.1f mm, after %.1f vs %.1f mm", d.t_start, d.t_end,
                    1e3 * a.peak, 1e3 * b.peak, 1e3 * ra.mean, 1e3 * rb.mean);
  }
  if (push.cfg.disturbances.empty()) o.pass = false;
  return o;
}

Outcome singularity() {
  const PresetRun& r = preset("singular_extension");
  // Full extension: joints 2, 4 and 6 (the y axes) all at zero. Count the
  // ticks where the elbow joint crosses zero.
  int crossings = 0;
  double min_bend = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < r.log.ticks.size(); ++k) {
    const VectorX& q = r.log.ticks[k].q;
    min_bend = std::min(min_bend, std::abs(q[1]) + std::abs(q[3]) + std::abs(q[5]));
    if (k > 0 && r.log.ticks[k - 1].q[3] * q[3] < 0.0) ++crossings;
  }
  double peak = 0.0;
  for (const auto& t : r.log.ticks) peak = std::max(peak, t.tau.cwiseAbs().maxCoeff());
  const bool ok = all_finite(r.log) && r.report.saturation_violations == 0 && crossings > 0 && min_bend < 1e-2;
  return {ok, fmt("%zu ticks finite, elbow-joint zero crossings %d, min |q2|+|q4|+|q6| %.1e rad, peak torque %.1f N m, "
                  "max |tau|/bound %.3f, violations %ld",
                  r.log.ticks.size(), crossings, min_bend, peak, r.report.max_bound_ratio, r.report.saturation_violations)};
}

Outcome determinism() {
  Outcome o;
  int checked = 0;
  for (const auto& e : io::list_presets(io::kDefaultPresetDir)) {
    if (e.kind != "experiment") continue;
    const ExperimentConfig cfg = io::load_experiment_preset(io::kDefaultPresetDir, e.name);
    std::ostringstream a, b;
    write_log_csv(a, run_log(cfg));
    write_log_csv(b, run_log(cfg));
    const bool same = a.str() == b.str();
    o.pass = o.pass && same;
    o.detail += fmt("%s%s %s (%zu bytes)", checked ? ", " : "", e.name.c_str(), same ? "identical" : "DIFFER",
                    a.str().size());
    ++checked;
  }
  if (checked == 0) return {false, "no experiment presets found"};
  return o;
}

}  // namespace

int main() {
  run_criterion(1, "profile correctness", profile_correctness);
  run_criterion(2, "fractal-attractor arrival", attractor_arrival);
  run_criterion(3, "passivity ledger", passivity_ledger);
  run_criterion(4, "kinematics", jacobian_check);
  run_criterion(5, "dynamics oracles", dynamics_oracles);
  run_criterion(6, "figure-8, no interaction", figure8_free);
  run_criterion(7, "figure-8 with obstacle", figure8_obstacle);
  run_criterion(8, "elbow disturbance episodes", elbow_disturbance);
  run_criterion(9, "singularity robustness", singularity);
  run_criterion(10, "determinism", determinism);
  std::printf("%s: %d of 10 criteria failed\n", g_failures == 0 ? "ALL PASS" : "FAILURES", g_failures);
  return g_failures == 0 ? 0 : 1;
}
