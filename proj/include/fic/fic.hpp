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

// Mono-dimensional fractal impedance controller.
//
// The divergence spring follows a sigmoidal force profile: linear with
// stiffness k0 up to x0, then an exponential approach to f_max that is
// considered saturated from xb on. Once the error magnitude starts shrinking
// the controller latches the episode peak x_max and swaps to a "midpoint"
// spring of stiffness kc = 4 E(x_max) / x_max^2 centered halfway to the
// target, which brings the load back to the target at rest. Sign convention:
// err = desired - current, and a positive force drives `current` upwards,
// i.e. reduces err.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "fic/common.hpp"

namespace fic {

struct FicParams {
  double x0 = 0.0;     // edge of the linear zone
  double xb = 0.0;     // saturation displacement
  double f_max = 0.0;  // saturation force
  double k0 = 0.0;     // linear-zone stiffness
  double s = 20.0;     // sigmoid shape

  double delta_f() const { return f_max - k0 * x0; }
  double b() const { return (xb - x0) / s; }

  void validate() const {
    if (!(std::isfinite(x0) && std::isfinite(xb) && std::isfinite(f_max) && std::isfinite(k0) &&
          std::isfinite(s)))
      throw Error("FIC parameters must be finite");
    if (!(x0 > 0.0)) throw Error("FIC x0 must be positive");
    if (!(xb > x0)) throw Error("FIC xb must exceed x0");
    if (!(k0 > 0.0)) throw Error("FIC k0 must be positive");
    if (!(s > 0.0)) throw Error("FIC s must be positive");
    // dF = 0 is allowed: the profile is then linear up to x0 and flat after.
    if (!(delta_f() >= 0.0)) throw Error("FIC f_max must be at least k0 * x0");
  }
};

// Sigmoidal divergence force profile. Odd in err.
inline double profile_force(const FicParams& p, double err) {
  const double mag = std::abs(err);
  if (mag < p.x0) return p.k0 * err;
  if (mag < p.xb) return sign(err) * (p.delta_f() * -std::expm1(-(mag - p.x0) / p.b()) + p.k0 * p.x0);
  return sign(err) * p.f_max;
}

// Energy stored by the divergence profile: the antiderivative of
// profile_force with E(0) = 0. Even, continuous, slope f_max beyond xb.
inline double profile_energy(const FicParams& p, double err) {
  const double mag = std::abs(err);
  if (mag < p.x0) return 0.5 * p.k0 * err * err;
  const double base = -p.f_max * p.x0 + 0.5 * p.k0 * p.x0 * p.x0;
  const double b = p.b();
  if (mag < p.xb) return p.f_max * mag + base + std::expm1(-(mag - p.x0) / b) * b * p.delta_f();
  return p.f_max * mag + base + std::expm1(-(p.xb - p.x0) / b) * b * p.delta_f();
}

// Stiffness of the convergence spring after a divergence episode that
// peaked at x_max.
inline double convergence_stiffness(const FicParams& p, double x_max) {
  return 4.0 * profile_energy(p, x_max) / (x_max * x_max);
}

enum class FicPhase { kDivergence, kConvergence };

inline const char* to_string(FicPhase phase) {
  return phase == FicPhase::kDivergence ? "divergence" : "convergence";
}

struct FicAxisState {
  FicPhase phase = FicPhase::kDivergence;
  double x_max = 0.0;     // |err| peak of the current episode (latched in convergence)
  double prev_err = 0.0;  // err seen on the previous tick
  double kc = 0.0;        // convergence stiffness, valid in convergence
  double center = 0.0;    // signed equilibrium of the convergence spring
  double side = 0.0;      // sign of err for the current episode
  double conv_min = 0.0;  // smallest |err| seen during the current convergence
};

struct FicOptions {
  double hysteresis = 1e-6;  // |err| must fall this far below the peak to latch
  double min_latch = 1e-9;   // peaks below this never latch
};

inline FicAxisState fic_init() { return {}; }

struct FicStepResult {
  double force = 0.0;
  FicAxisState state;
  bool switched = false;  // phase changed on this tick
};

namespace detail {

// Equilibrium (as a magnitude) of the convergence spring, latched at |err| =
// latch_mag after a peak of x_max. When the latch lands exactly on the peak
// this is x_max / 2. Otherwise the load already carries the kinetic energy
// E(x_max) - E(latch_mag) that the divergence spring handed back since the
// peak, and the center is moved so that the spring still brings it to rest at
// the target. Clamped so that the spring never pulls outwards and never
// exceeds 2 f_max.
inline double convergence_center(const FicParams& p, double x_max, double kc, double latch_mag) {
  const double returned = std::max(0.0, profile_energy(p, x_max) - profile_energy(p, latch_mag));
  const double c = (returned + 0.5 * kc * latch_mag * latch_mag) / (kc * latch_mag);
  return std::clamp(c, 0.5 * latch_mag, std::min(latch_mag, 2.0 * p.f_max / kc));
}

inline double convergence_force(const FicParams& p, const FicAxisState& st, double err) {
  return std::clamp(st.kc * (err - st.center), -2.0 * p.f_max, 2.0 * p.f_max);
}

inline void start_episode(FicAxisState& st, double err) {
  st.phase = FicPhase::kDivergence;
  st.side = sign(err);
  st.x_max = std::abs(err);
  st.kc = 0.0;
  st.center = 0.0;
  st.conv_min = 0.0;
}

}  // namespace detail

// One control tick of the attractor for a single axis.
inline FicStepResult fic_step(const FicParams& p, const FicAxisState& st, double err,
                              const FicOptions& opt = {}) {
  if (!std::isfinite(err)) throw Error("FIC error signal is not finite");
  FicStepResult out;
  out.state = st;
  FicAxisState& s = out.state;
  const double mag = std::abs(err);
  const bool crossed = err == 0.0 || (s.side != 0.0 && sign(err) != s.side);

  if (s.phase == FicPhase::kDivergence) {
    if (crossed || s.side == 0.0) {
      detail::start_episode(s, err);
    } else if (mag >= s.x_max) {
      s.x_max = mag;
    } else if (mag < s.x_max - opt.hysteresis && s.x_max >= opt.min_latch) {
      s.phase = FicPhase::kConvergence;
      s.kc = convergence_stiffness(p, s.x_max);
      s.center = s.side * detail::convergence_center(p, s.x_max, s.kc, mag);
      s.conv_min = mag;
      out.switched = true;
    }
  } else {
    if (crossed) {
      detail::start_episode(s, err);
      out.switched = true;
    } else if (mag > s.conv_min) {
      // Moving away from the target again (pushed, or turned around just
      // short of it): fresh divergence episode.
      detail::start_episode(s, err);
      out.switched = true;
    } else {
      s.conv_min = std::min(s.conv_min, mag);
    }
  }

  out.force = s.phase == FicPhase::kDivergence ? profile_force(p, err) : detail::convergence_force(p, s, err);
  s.prev_err = err;
  return out;
}

// Potential energy held by the controller at `err` for the given state:
// the divergence profile energy, or the convergence spring plus half the
// latched episode energy (continuous at the latch).
inline double stored_energy(const FicParams& p, const FicAxisState& st, double err) {
  if (st.phase == FicPhase::kDivergence) return profile_energy(p, err);
  const double d = err - st.center;
  return 0.5 * st.kc * d * d + 0.5 * profile_energy(p, st.x_max);
}

}  // namespace fic
