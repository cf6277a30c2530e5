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

// JSON documents: robot descriptions, FIC parameter presets, experiment
// configs and run reports. Every top-level document carries "schema": 1.
//
// Parameter sets may be given inline ({"x0": ..}) or by preset name; names
// resolve to <preset_dir>/fic/<name>.json.

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fic/experiment.hpp"
#include "fic/models.hpp"

namespace fic::io {

using json = nlohmann::json;

inline constexpr int kSchema = 1;

#ifdef FIC_PRESET_DIR
inline const char* const kDefaultPresetDir = FIC_PRESET_DIR;
#else
inline const char* const kDefaultPresetDir = "presets";
#endif

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline void check_schema(const json& j, const std::string& what) {
  if (!j.is_object()) throw Error(what + " must be a JSON object");
  if (!j.contains("schema")) throw Error(what + " has no \"schema\" key");
  if (j.at("schema") != kSchema)
    throw Error(what + " has schema " + j.at("schema").dump() + ", expected " + std::to_string(kSchema));
}

namespace detail {

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw Error(where + ": missing \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(where + ": \"" + key + "\" has the wrong type");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  return j.contains(key) ? get<T>(j, key, where) : fallback;
}

inline Vector3 vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw Error(where + ": expected a 3-vector");
  Vector3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) throw Error(where + ": expected numbers");
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

inline Vector3 vec3_or(const json& j, const char* key, const Vector3& fallback, const std::string& where) {
  return j.contains(key) ? vec3(j.at(key), where + "." + key) : fallback;
}

inline VectorX vecx(const json& j, const std::string& where) {
  if (!j.is_array()) throw Error(where + ": expected an array");
  VectorX v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(where + ": expected numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline json to_json(const Vector3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline json to_json(const VectorX& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// {"xyz": [..], "rpy": [..]}, both optional.
inline Transform transform(const json& j, const std::string& where) {
  if (!j.is_object()) throw Error(where + ": expected an object with xyz/rpy");
  const Vector3 rpy = vec3_or(j, "rpy", Vector3::Zero(), where);
  return {rpy_rotation(rpy.x(), rpy.y(), rpy.z()), vec3_or(j, "xyz", Vector3::Zero(), where)};
}

inline json to_json(const Transform& t) {
  const Vector3 ypr = t.rotation.eulerAngles(2, 1, 0);
  return {{"xyz", to_json(t.translation)}, {"rpy", to_json(Vector3(ypr[2], ypr[1], ypr[0]))}};
}

inline Matrix3 inertia(const json& j, const std::string& where) {
  if (j.is_array() && j.size() == 6 && j[0].is_number()) {
    // ixx, iyy, izz, ixy, ixz, iyz
    const VectorX v = vecx(j, where);
    Matrix3 m;
    m << v[0], v[3], v[4], v[3], v[1], v[5], v[4], v[5], v[2];
    return m;
  }
  if (j.is_array() && j.size() == 3 && j[0].is_array()) {
    Matrix3 m;
    for (int r = 0; r < 3; ++r) m.row(r) = vec3(j[static_cast<std::size_t>(r)], where).transpose();
    return m;
  }
  throw Error(where + ": inertia must be [ixx, iyy, izz, ixy, ixz, iyz] or a 3x3 array");
}

inline DofMask mask(const json& j, const std::string& where) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "position") return kPositionDofs;
    if (s == "pose") return kAllDofs;
    throw Error(where + ": mask must be \"position\", \"pose\" or six booleans");
  }
  if (!j.is_array() || j.size() != 6) throw Error(where + ": mask must be \"position\", \"pose\" or six booleans");
  DofMask m{};
  for (std::size_t i = 0; i < 6; ++i) {
    if (!j[i].is_boolean()) throw Error(where + ": mask entries must be booleans");
    m[i] = j[i].get<bool>();
  }
  return m;
}

inline json to_json(const DofMask& m) {
  if (m == kPositionDofs) return "position";
  if (m == kAllDofs) return "pose";
  json a = json::array();
  for (bool b : m) a.push_back(b);
  return a;
}

}  // namespace detail

// ---------------------------------------------------------------- robots

inline ChainModel robot_from_json(const json& j) {
  check_schema(j, "robot description");
  ChainModel m;
  m.name = detail::get_or<std::string>(j, "name", "robot", "robot");
  m.gravity = detail::vec3_or(j, "gravity", Vector3(0, 0, -9.81), "robot");
  m.joint_damping = detail::get_or<double>(j, "joint_damping", 0.0, "robot");
  if (!j.contains("joints") || !j.at("joints").is_array()) throw Error("robot: missing \"joints\" array");
  std::size_t idx = 0;
  for (const auto& jj : j.at("joints")) {
    const std::string where = "robot.joints[" + std::to_string(idx) + "]";
    JointSpec js;
    js.name = detail::get_or<std::string>(jj, "name", "joint" + std::to_string(idx + 1), where);
    const auto type = detail::get_or<std::string>(jj, "type", "revolute", where);
    if (type == "revolute") {
      js.kind = JointKind::kRevolute;
    } else if (type == "prismatic") {
      js.kind = JointKind::kPrismatic;
    } else {
      throw Error(where + ": unknown joint type '" + type + "'");
    }
    js.axis = detail::vec3_or(jj, "axis", Vector3::UnitZ(), where);
    if (jj.contains("origin")) js.origin = detail::transform(jj.at("origin"), where + ".origin");
    if (jj.contains("limits")) {
      const VectorX lim = detail::vecx(jj.at("limits"), where + ".limits");
      if (lim.size() != 2) throw Error(where + ".limits: expected [min, max]");
      js.limits = JointLimits{lim[0], lim[1]};
    }
    js.armature = detail::get_or<double>(jj, "armature", 0.0, where);
    LinkInertia li;
    if (!jj.contains("link")) throw Error(where + ": missing \"link\"");
    const json& lj = jj.at("link");
    li.mass = detail::get<double>(lj, "mass", where + ".link");
    li.com = detail::vec3_or(lj, "com", Vector3::Zero(), where + ".link");
    if (!lj.contains("inertia")) throw Error(where + ".link: missing \"inertia\"");
    li.inertia = detail::inertia(lj.at("inertia"), where + ".link.inertia");
    m.joints.push_back(js);
    m.links.push_back(li);
    ++idx;
  }
  if (j.contains("frames")) {
    for (const auto& [name, fj] : j.at("frames").items()) {
      const std::string where = "robot.frames." + name;
      const auto link = detail::get<long>(fj, "link", where);
      if (link < 0) throw Error(where + ": link must be non-negative");
      m.frames[name] = {static_cast<std::size_t>(link), detail::transform(fj, where)};
    }
  }
  m.validate();
  return m;
}

inline json robot_to_json(const ChainModel& m) {
  json j = {{"schema", kSchema}, {"name", m.name}, {"gravity", detail::to_json(m.gravity)},
            {"joint_damping", m.joint_damping}};
  json joints = json::array();
  for (std::size_t i = 0; i < m.dof(); ++i) {
    const JointSpec& js = m.joints[i];
    const LinkInertia& li = m.links[i];
    json jj = {{"name", js.name},
               {"type", js.kind == JointKind::kRevolute ? "revolute" : "prismatic"},
               {"axis", detail::to_json(js.axis)},
               {"origin", detail::to_json(js.origin)},
               {"armature", js.armature}};
    if (js.limits) jj["limits"] = {js.limits->min, js.limits->max};
    const Matrix3& I = li.inertia;
    jj["link"] = {{"mass", li.mass},
                  {"com", detail::to_json(li.com)},
                  {"inertia", {I(0, 0), I(1, 1), I(2, 2), I(0, 1), I(0, 2), I(1, 2)}}};
    joints.push_back(jj);
  }
  j["joints"] = joints;
  json frames = json::object();
  for (const auto& [name, f] : m.frames) {
    json fj = detail::to_json(f.offset);
    fj["link"] = f.link;
    frames[name] = fj;
  }
  j["frames"] = frames;
  return j;
}

// A built-in name, an inline description, or {"file": path}.
inline ChainModel resolve_robot(const json& j, const std::filesystem::path& base_dir) {
  if (j.is_string()) return models::builtin(j.get<std::string>());
  if (j.is_object() && j.contains("file")) {
    std::filesystem::path p = j.at("file").get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    return robot_from_json(read_json_file(p));
  }
  return robot_from_json(j);
}

// ---------------------------------------------------------------- presets

inline FicParams fic_params_from_json(const json& j, const std::string& where) {
  FicParams p;
  p.x0 = detail::get<double>(j, "x0", where);
  p.xb = detail::get<double>(j, "xb", where);
  p.f_max = detail::get<double>(j, "f_max", where);
  p.k0 = detail::get<double>(j, "k0", where);
  p.s = detail::get_or<double>(j, "s", 20.0, where);
  try {
    p.validate();
  } catch (const Error& e) {
    throw Error(where + ": " + e.what());
  }
  return p;
}

inline json fic_params_to_json(const FicParams& p) {
  return {{"x0", p.x0}, {"xb", p.xb}, {"f_max", p.f_max}, {"k0", p.k0}, {"s", p.s}};
}

inline std::filesystem::path fic_preset_path(const std::filesystem::path& preset_dir, const std::string& name) {
  return preset_dir / "fic" / (name + ".json");
}

inline FicParams load_fic_preset(const std::filesystem::path& preset_dir, const std::string& name) {
  const auto path = fic_preset_path(preset_dir, name);
  if (!std::filesystem::exists(path)) throw Error("unknown FIC preset '" + name + "'");
  const json j = read_json_file(path);
  check_schema(j, "FIC preset '" + name + "'");
  return fic_params_from_json(j, "FIC preset '" + name + "'");
}

struct PresetEntry {
  std::string kind;  // "fic" or "experiment"
  std::string name;
  std::string description;
};

inline std::vector<PresetEntry> list_presets(const std::filesystem::path& preset_dir) {
  std::vector<PresetEntry> out;
  for (const char* kind : {"fic", "experiments"}) {
    const auto dir = preset_dir / kind;
    if (!std::filesystem::is_directory(dir)) continue;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
      if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const json j = read_json_file(f);
      out.push_back({kind == std::string("fic") ? "fic" : "experiment", f.stem().string(),
                     j.value("description", std::string())});
    }
  }
  return out;
}

// Replaces every preset-name parameter reference in an experiment document
// by the inline parameter object, so that JSON pointers can reach into it.
inline json expand_presets(json j, const std::filesystem::path& preset_dir) {
  if (j.contains("stack") && j.at("stack").is_array()) {
    for (auto& a : j.at("stack")) {
      for (const char* key : {"position", "orientation"}) {
        if (a.contains(key) && a.at(key).is_string())
          a[key] = fic_params_to_json(load_fic_preset(preset_dir, a.at(key).get<std::string>()));
      }
    }
  }
  return j;
}

// ---------------------------------------------------------------- experiments

inline ExperimentConfig experiment_from_json(const json& doc, const std::filesystem::path& preset_dir,
                                             const std::filesystem::path& base_dir = ".") {
  check_schema(doc, "experiment config");
  const json j = expand_presets(doc, preset_dir);
  ExperimentConfig c;
  c.name = detail::get_or<std::string>(j, "name", "experiment", "experiment");
  if (!j.contains("robot")) throw Error("experiment: missing \"robot\"");
  c.robot = resolve_robot(j.at("robot"), base_dir);
  c.robot_name = j.at("robot").is_string() ? j.at("robot").get<std::string>() : std::string();
  if (j.contains("joint_damping")) c.robot.joint_damping = detail::get<double>(j, "joint_damping", "experiment");
  c.q_home = j.contains("q_home") ? detail::vecx(j.at("q_home"), "experiment.q_home")
                                  : VectorX(VectorX::Zero(static_cast<Eigen::Index>(c.robot.dof())));
  const auto gravity = detail::get_or<std::string>(j, "gravity", "on", "experiment");
  if (gravity != "on" && gravity != "off") throw Error("experiment: gravity must be \"on\" or \"off\"");
  c.gravity_on = gravity == "on";
  c.duration = detail::get_or<double>(j, "duration", c.duration, "experiment");
  c.control_rate = detail::get_or<double>(j, "control_rate", c.control_rate, "experiment");
  c.substeps = detail::get_or<int>(j, "substeps", c.substeps, "experiment");
  c.seed = detail::get_or<std::uint64_t>(j, "seed", 0, "experiment");
  c.ee_frame = detail::get_or<std::string>(j, "ee_frame", "ee", "experiment");
  c.eval_start = detail::get_or<double>(j, "eval_start", -1.0, "experiment");

  if (!j.contains("stack") || !j.at("stack").is_array()) throw Error("experiment: missing \"stack\" array");
  std::size_t idx = 0;
  for (const auto& a : j.at("stack")) {
    const std::string where = "experiment.stack[" + std::to_string(idx++) + "]";
    const DofMask m = detail::mask(a.contains("mask") ? a.at("mask") : json("position"), where + ".mask");
    if (!a.contains("position")) throw Error(where + ": missing \"position\" parameters");
    const FicParams pos = fic_params_from_json(a.at("position"), where + ".position");
    std::optional<FicParams> rot;
    if (a.contains("orientation")) rot = fic_params_from_json(a.at("orientation"), where + ".orientation");
    c.stack.attachments.emplace_back(detail::get<std::string>(a, "frame", where), m, pos, rot);
  }

  if (j.contains("trajectory")) {
    const json& t = j.at("trajectory");
    c.trajectory.kind = trajectory_kind(detail::get_or<std::string>(t, "kind", "hold", "trajectory"));
    c.trajectory.amplitudes = detail::vec3_or(t, "amplitudes", Vector3::Zero(), "trajectory");
    c.trajectory.period = detail::get_or<double>(t, "period", 4.0, "trajectory");
    if (t.contains("peak_speed")) {
      // Period chosen so that the trajectory peaks at this Cartesian speed.
      TrajectorySpec unit = c.trajectory;
      unit.period = 1.0;
      c.trajectory.period = unit.peak_speed() / detail::get<double>(t, "peak_speed", "trajectory");
    }
    const json center = t.contains("center") ? t.at("center") : json("home");
    if (center.is_string()) {
      if (center.get<std::string>() != "home") throw Error("trajectory.center must be \"home\" or a pose");
      c.center_at_home = true;
    } else {
      c.center_at_home = false;
      c.trajectory.center = detail::transform(center, "trajectory.center");
    }
  }
  if (j.contains("ik")) {
    const json& k = j.at("ik");
    c.ik.damping = detail::get_or<double>(k, "damping", c.ik.damping, "ik");
    c.ik.posture = detail::get_or<double>(k, "posture", c.ik.posture, "ik");
    c.ik.rotation = detail::get_or<double>(k, "rotation", c.ik.rotation, "ik");
    c.ik.max_step = detail::get_or<double>(k, "max_step", c.ik.max_step, "ik");
    if (k.contains("mask")) c.ik.mask = detail::mask(k.at("mask"), "ik.mask");
  }
  if (j.contains("fic")) {
    c.fic.hysteresis = detail::get_or<double>(j.at("fic"), "hysteresis", c.fic.hysteresis, "fic");
    c.fic.min_latch = detail::get_or<double>(j.at("fic"), "min_latch", c.fic.min_latch, "fic");
  }
  if (j.contains("disturbances")) {
    for (const auto& d : j.at("disturbances")) {
      Disturbance dist;
      dist.frame = detail::get<std::string>(d, "frame", "disturbance");
      dist.wrench.force = detail::vec3_or(d, "force", Vector3::Zero(), "disturbance");
      dist.wrench.torque = detail::vec3_or(d, "torque", Vector3::Zero(), "disturbance");
      dist.t_start = detail::get<double>(d, "t_start", "disturbance");
      dist.t_end = detail::get<double>(d, "t_end", "disturbance");
      c.disturbances.push_back(dist);
    }
  }
  if (j.contains("random_pulses")) {
    const json& r = j.at("random_pulses");
    c.random_pulses.count = detail::get_or<int>(r, "count", 0, "random_pulses");
    c.random_pulses.frame = detail::get_or<std::string>(r, "frame", "elbow", "random_pulses");
    c.random_pulses.magnitude = detail::get_or<double>(r, "magnitude", 0.0, "random_pulses");
    c.random_pulses.width = detail::get_or<double>(r, "width", 0.2, "random_pulses");
    c.random_pulses.t_min = detail::get_or<double>(r, "t_min", 0.0, "random_pulses");
    c.random_pulses.t_max = detail::get_or<double>(r, "t_max", 0.0, "random_pulses");
  }
  if (j.contains("obstacles")) {
    for (const auto& o : j.at("obstacles")) {
      Obstacle ob;
      const auto type = detail::get<std::string>(o, "type", "obstacle");
      if (type == "sphere") {
        ob.shape = Sphere{detail::vec3(o.at("center"), "obstacle.center"), detail::get<double>(o, "radius", "obstacle")};
      } else if (type == "halfspace") {
        ob.shape = HalfSpace{detail::vec3(o.at("point"), "obstacle.point"), detail::vec3(o.at("normal"), "obstacle.normal")};
      } else {
        throw Error("obstacle: unknown type '" + type + "'");
      }
      ob.stiffness = detail::get_or<double>(o, "stiffness", ob.stiffness, "obstacle");
      ob.damping = detail::get_or<double>(o, "damping", ob.damping, "obstacle");
      ob.probes = detail::get_or<std::vector<std::string>>(o, "probes", {}, "obstacle");
      c.obstacles.push_back(ob);
    }
  }
  c.validate();
  return c;
}

inline json experiment_document(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  check_schema(j, "experiment config '" + path.string() + "'");
  return j;
}

inline ExperimentConfig load_experiment(const std::filesystem::path& path, const std::filesystem::path& preset_dir) {
  return experiment_from_json(experiment_document(path), preset_dir, path.parent_path());
}

// Experiment presets live in <preset_dir>/experiments/<name>.json.
inline ExperimentConfig load_experiment_preset(const std::filesystem::path& preset_dir, const std::string& name) {
  const auto path = preset_dir / "experiments" / (name + ".json");
  if (!std::filesystem::exists(path)) throw Error("unknown experiment preset '" + name + "'");
  return load_experiment(path, preset_dir);
}

// ---------------------------------------------------------------- reports

inline json report_to_json(const RunReport& r) {
  json atts = json::array();
  for (const auto& a : r.attachments) atts.push_back({{"frame", a.frame}, {"rmse", a.rmse}, {"max_error", a.max_error}});
  return {{"schema", kSchema},
          {"name", r.name},
          {"rmse", detail::to_json(r.rmse)},
          {"max_error", detail::to_json(r.max_error)},
          {"torque_peak", detail::to_json(r.torque_peak)},
          {"energy_ledger", r.energy_ledger},
          {"window", {r.window_start, r.window_end}},
          {"samples", r.samples},
          {"attachments", atts},
          {"saturation_violations", r.saturation_violations},
          {"max_bound_ratio", r.max_bound_ratio},
          {"log_path", r.log_path}};
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace fic::io
