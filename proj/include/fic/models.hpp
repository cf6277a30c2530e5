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

// Built-in robot descriptions.

#pragma once

#include <string>

#include "fic/kinematics.hpp"

namespace fic::models {

namespace detail {

// Solid cylinder of radius r and length len along `axis` (0=x, 1=y, 2=z).
inline Matrix3 rod_inertia(double mass, double radius, double len, int axis) {
  const double across = mass * (3.0 * radius * radius + len * len) / 12.0;
  const double along = 0.5 * mass * radius * radius;
  Vector3 d = Vector3::Constant(across);
  d[axis] = along;
  return d.asDiagonal();
}

// Planar chain of `n` revolute joints about world z, unit-length links
// along x, uniform 1 kg rods. Gravity is along -y.
inline ChainModel planar_chain(int n, const std::string& name) {
  ChainModel m;
  m.name = name;
  m.gravity = Vector3(0.0, -9.81, 0.0);
  for (int i = 0; i < n; ++i) {
    JointSpec j;
    j.name = "joint" + std::to_string(i + 1);
    j.axis = Vector3::UnitZ();
    j.origin = Transform::from_translation(i == 0 ? Vector3(Vector3::Zero()) : Vector3(Vector3::UnitX()));
    m.joints.push_back(j);
    m.links.push_back({1.0, Vector3(0.5, 0.0, 0.0), rod_inertia(1.0, 0.02, 1.0, 0)});
    m.frames["link" + std::to_string(i + 1)] = {static_cast<std::size_t>(i), Transform::identity()};
  }
  m.frames["ee"] = {static_cast<std::size_t>(n - 1), Transform::from_translation(Vector3::UnitX())};
  return m;
}

}  // namespace detail

// Planar 2R, unit links. End frame "ee" at the tip of link 2.
inline ChainModel planar_2r() { return detail::planar_chain(2, "planar_2r"); }

// Planar 3R, unit links. End frame "ee" at the tip of link 3.
inline ChainModel planar_3r() { return detail::planar_chain(3, "planar_3r"); }

// Single revolute joint about z with a 1 kg point-like mass 1 m down the -y
// axis; gravity along -y, so q measures the angle from the hanging vertical.
inline ChainModel pendulum() {
  ChainModel m;
  m.name = "pendulum";
  m.gravity = Vector3(0.0, -9.81, 0.0);
  JointSpec j;
  j.name = "hinge";
  j.axis = Vector3::UnitZ();
  m.joints.push_back(j);
  m.links.push_back({1.0, Vector3(0.0, -1.0, 0.0), Matrix3::Identity() * 1e-10});
  m.frames["bob"] = {0, Transform::from_translation(Vector3(0.0, -1.0, 0.0))};
  return m;
}

// 7-DoF arm with Kuka-LWR-like geometry: shoulder at 0.31 m, 0.40 m upper
// arm, 0.39 m forearm, 0.078 m flange. Joint axes alternate z/y as on the
// LWR. Masses and inertias are plausible placeholders (solid rods), not
// identified values. Each joint carries reflected rotor inertia (0.1 kg m^2
// on joints 1-4, 0.05 on joints 5-7), which keeps the light wrist from
// chattering under the stiff end-effector profile at a 3 ms control period.
//
// Frames: "elbow" at the joint-4 center (4th link), "wrist" at the joint-6
// center, "ee" at the flange.
inline ChainModel lwr7() {
  struct Seg {
    double offset;  // along parent z to this joint
    int axis;       // 1 = y, 2 = z
    double mass;
    double length;  // of the link body following the joint
    double radius;
  };
  const Seg segs[7] = {
      {0.11, 2, 2.7, 0.20, 0.06}, {0.20, 1, 2.7, 0.20, 0.06}, {0.20, 2, 2.7, 0.20, 0.06},
      {0.20, 1, 2.7, 0.20, 0.06}, {0.20, 2, 1.7, 0.19, 0.05}, {0.19, 1, 1.6, 0.078, 0.05},
      {0.078, 2, 0.3, 0.03, 0.04},
  };
  const double limits[7] = {2.96, 2.09, 2.96, 2.09, 2.96, 2.09, 2.96};

  ChainModel m;
  m.name = "lwr7";
  m.gravity = Vector3(0.0, 0.0, -9.81);
  for (int i = 0; i < 7; ++i) {
    const Seg& s = segs[i];
    JointSpec j;
    j.name = "a" + std::to_string(i + 1);
    j.axis = s.axis == 1 ? Vector3::UnitY() : Vector3::UnitZ();
    j.origin = Transform::from_translation(Vector3(0.0, 0.0, s.offset));
    j.limits = JointLimits{-limits[i], limits[i]};
    j.armature = i < 4 ? 0.1 : 0.05;
    m.joints.push_back(j);
    m.links.push_back({s.mass, Vector3(0.0, 0.0, 0.5 * s.length), detail::rod_inertia(s.mass, s.radius, s.length, 2)});
  }
  m.frames["elbow"] = {3, Transform::identity()};
  m.frames["wrist"] = {5, Transform::identity()};
  m.frames["ee"] = {6, Transform::from_translation(Vector3(0.0, 0.0, 0.03))};
  return m;
}

// Looks up a built-in model by name; throws Error for unknown names.
inline ChainModel builtin(const std::string& name) {
  if (name == "planar_2r") return planar_2r();
  if (name == "planar_3r") return planar_3r();
  if (name == "pendulum") return pendulum();
  if (name == "lwr7") return lwr7();
  throw Error("unknown built-in robot '" + name + "'");
}

}  // namespace fic::models
