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

// 1-D testbed: a point mass driven only by one FIC axis (target fixed at 0),
// used for the attractor, Lyapunov and passivity checks and for the phase
// portrait export.

#pragma once

#include <cmath>
#include <functional>
#include <ostream>
#include <vector>

#include "fic/csv.hpp"
#include "fic/fic.hpp"

namespace fic {

// External force on the mass as a function of time.
using PushProfile = std::function<double(double)>;

struct PushPulse {
  double t_start = 0.0;
  double t_end = 0.0;
  double force = 0.0;
};

inline PushProfile no_push() {
  return [](double) { return 0.0; };
}

inline PushProfile pulse_train(std::vector<PushPulse> pulses) {
  return [pulses = std::move(pulses)](double t) {
    double f = 0.0;
    for (const auto& pl : pulses)
      if (t >= pl.t_start && t < pl.t_end) f += pl.force;
    return f;
  };
}

struct MassSimOptions {
  double dt = 1e-4;
  double duration = 1.0;
  double initial_velocity = 0.0;
  FicOptions fic;
  // Keep every n-th sample in the returned trajectory (the first and last are
  // always kept).
  int record_every = 1;
};

struct MassSample {
  double t = 0.0;
  double err = 0.0;    // x~ = 0 - x
  double x_dot = 0.0;  // mass velocity
  double force = 0.0;  // controller force applied over the following step
  double push = 0.0;
  FicPhase phase = FicPhase::kDivergence;
  double lyapunov = 0.0;   // kinetic energy + controller stored energy
  double v_dot = 0.0;      // autonomous rate of change of `lyapunov`
  bool switched = false;   // controller switched phase at this sample
  double ctrl_work = 0.0;  // cumulative work done by the controller on the mass
};

namespace detail {

// Derivative of the controller potential w.r.t. err by central difference of
// the energy functions (independent of the force code path).
inline double potential_slope(const FicParams& p, const FicAxisState& st, double err) {
  const double h = 1e-9 * std::max(1.0, std::abs(err) / 1e-3);
  return (stored_energy(p, st, err + h) - stored_energy(p, st, err - h)) / (2.0 * h);
}

}  // namespace detail

// Semi-implicit Euler: v += (h + push) / m * dt; x += v * dt, with the
// controller evaluated every step. The mass starts at x = -err0 so that its
// error is err0.
inline std::vector<MassSample> autonomous_mass_sim(const FicParams& p, double mass, double err0,
                                                   const PushProfile& push, const MassSimOptions& opt = {}) {
  p.validate();
  if (!(mass > 0.0)) throw Error("mass must be positive");
  if (!(opt.dt > 0.0) || !(opt.duration >= 0.0)) throw Error("invalid time settings");
  const auto steps = static_cast<long>(std::llround(opt.duration / opt.dt));
  const int every = std::max(1, opt.record_every);

  std::vector<MassSample> traj;
  traj.reserve(static_cast<std::size_t>(steps / every + 2));
  double x = -err0;
  double v = opt.initial_velocity;
  double work = 0.0;
  FicAxisState st = fic_init();
  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * opt.dt;
    const double err = -x;
    const FicStepResult r = fic_step(p, st, err, opt.fic);
    st = r.state;
    const double f_push = push ? push(t) : 0.0;

    if (k % every == 0 || k == steps || r.switched) {
      MassSample s;
      s.t = t;
      s.err = err;
      s.x_dot = v;
      s.force = r.force;
      s.push = f_push;
      s.phase = st.phase;
      s.switched = r.switched;
      s.lyapunov = 0.5 * mass * v * v + stored_energy(p, st, err);
      // dV/dt = m v a + dU/derr * derr/dt with m a = h (autonomous part)
      // and derr/dt = -v.
      s.v_dot = v * (r.force - detail::potential_slope(p, st, err));
      s.ctrl_work = work;
      traj.push_back(s);
    }
    if (k == steps) break;
    v += (r.force + f_push) / mass * opt.dt;
    const double dx = v * opt.dt;
    work += r.force * dx;
    x += dx;
  }
  return traj;
}

struct PhasePortraitOptions {
  double duration = 1.0;
  double dt = 1e-5;
  int record_every = 20;
  FicOptions fic;
};

struct PhaseTrajectory {
  double err0 = 0.0;
  double v0 = 0.0;
  std::vector<MassSample> samples;
};

inline std::vector<PhaseTrajectory> phase_portrait(const FicParams& p, double mass,
                                                   const std::vector<std::pair<double, double>>& initial,
                                                   const PhasePortraitOptions& opt = {}) {
  std::vector<PhaseTrajectory> out;
  out.reserve(initial.size());
  for (const auto& [e0, v0] : initial) {
    MassSimOptions mo;
    mo.dt = opt.dt;
    mo.duration = opt.duration;
    mo.initial_velocity = v0;
    mo.fic = opt.fic;
    mo.record_every = opt.record_every;
    out.push_back({e0, v0, autonomous_mass_sim(p, mass, e0, no_push(), mo)});
  }
  return out;
}

// `n` initial conditions evenly spaced on an ellipse with semi-axes
// (err_radius, vel_radius).
inline std::vector<std::pair<double, double>> ring_initial_conditions(int n, double err_radius, double vel_radius) {
  std::vector<std::pair<double, double>> ic;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
    ic.emplace_back(err_radius * std::cos(a), vel_radius * std::sin(a));
  }
  return ic;
}

// CSV with columns traj_id,t,x_err,x_dot.
inline void write_phase_portrait_csv(std::ostream& os, const std::vector<PhaseTrajectory>& trajs) {
  os << "traj_id,t,x_err,x_dot\n";
  for (std::size_t i = 0; i < trajs.size(); ++i)
    for (const auto& s : trajs[i].samples) os << i << ',' << csv::num(s.t) << ',' << csv::num(s.err) << ',' << csv::num(s.x_dot) << '\n';
}

// CSV with columns x_err,force,energy over [-x_extent, x_extent]; either
// value column can be left out.
inline void write_profile_csv(std::ostream& os, const FicParams& p, double x_extent, int samples,
                              bool with_force = true, bool with_energy = true) {
  if (samples < 2) throw Error("profile export needs at least two samples");
  os << "x_err" << (with_force ? ",force" : "") << (with_energy ? ",energy" : "") << '\n';
  for (int i = 0; i < samples; ++i) {
    const double x = -x_extent + 2.0 * x_extent * static_cast<double>(i) / static_cast<double>(samples - 1);
    os << csv::num(x);
    if (with_force) os << ',' << csv::num(profile_force(p, x));
    if (with_energy) os << ',' << csv::num(profile_energy(p, x));
    os << '\n';
  }
}

}  // namespace fic
