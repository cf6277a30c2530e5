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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "fic/experiment.hpp"
#include "fic/models.hpp"
#include "test_support.hpp"

namespace fic {
namespace {

RunLog synthetic_log(const std::function<Vector3(double)>& err, int n, double dt) {
  RunLog log;
  log.attachment_frames = {"ee"};
  log.attachment_masks = {kPositionDofs};
  for (int k = 0; k < n; ++k) {
    TickRecord r;
    r.t = k * dt;
    r.tau = VectorX::Zero(2);
    r.bound = VectorX::Ones(2);
    r.ee_ref = Vector3(0.3, -0.2, 0.5);
    r.ee_pos = r.ee_ref - err(r.t);
    Vector6 e = Vector6::Zero();
    e.head<3>() = err(r.t);
    r.errors.push_back(e);
    log.ticks.push_back(r);
  }
  return log;
}

TEST(ReportMetrics, ConstantAndZeroError) {
  const Vector3 c(0.004, -0.002, 0.0);
  const RunReport r = report_metrics(synthetic_log([&](double) { return c; }, 500, 0.01), 0.0);
  EXPECT_NEAR(r.rmse.x(), 0.004, 1e-15);
  EXPECT_NEAR(r.rmse.y(), 0.002, 1e-15);
  EXPECT_EQ(r.rmse.z(), 0.0);
  EXPECT_NEAR(r.max_error.y(), 0.002, 1e-15);
  EXPECT_NEAR(r.attachments[0].rmse, c.norm(), 1e-15);
  EXPECT_EQ(r.samples, 500);
}

TEST(ReportMetrics, SinusoidGivesAmplitudeOverRootTwo) {
  // 400 samples over exactly four periods: the discrete mean of sin^2 is 1/2.
  const double a = 0.01, period = 1.0;
  auto err = [&](double t) { return Vector3(a * std::sin(2 * std::numbers::pi * t / period), 0.0, 0.0); };
  const RunReport r = report_metrics(synthetic_log(err, 400, 0.01), 0.0);
  EXPECT_NEAR(r.rmse.x(), a / std::sqrt(2.0), 1e-9);
}

TEST(ReportMetrics, WindowAndSaturationCounting) {
  RunLog log = synthetic_log([](double t) { return Vector3(t < 1.0 ? 1.0 : 0.001, 0, 0); }, 300, 0.01);
  log.ticks[10].tau[1] = 2.0;  // above the unit bound
  const RunReport r = report_metrics(log, 1.0);
  EXPECT_NEAR(r.rmse.x(), 0.001, 1e-15);
  EXPECT_EQ(r.window_start, 1.0);
  EXPECT_NEAR(r.window_end, 2.99, 1e-12);
  EXPECT_EQ(r.saturation_violations, 1);
  EXPECT_NEAR(r.max_bound_ratio, 2.0, 1e-15);
}

ExperimentConfig hold_config() {
  ExperimentConfig c;
  c.name = "hold";
  c.robot = models::lwr7();
  c.q_home = VectorX(7);
  c.q_home << 0.0, 0.5, 0.0, 1.5, 0.0, -0.9, 0.0;
  c.stack.attachments.emplace_back("ee", kAllDofs, test::kSimEePos, test::kSimEeRot);
  c.stack.attachments.emplace_back("elbow", kPositionDofs, test::kSimElbow);
  c.gravity_on = false;
  c.duration = 2.0;
  return c;
}

TEST(Run, HoldAtStartPoseStaysOnTarget) {
  const RunReport r = run(hold_config());
  EXPECT_LE(r.rmse.maxCoeff(), 1e-6);
  EXPECT_GT(r.samples, 600);
  EXPECT_EQ(r.saturation_violations, 0);
}

TEST(Run, LogsAreByteIdentical) {
  ExperimentConfig c = hold_config();
  c.trajectory.kind = TrajectoryKind::kLemniscate;
  c.trajectory.amplitudes = Vector3(0.0, 0.05, 0.1);
  c.duration = 5.0;
  c.random_pulses = {3, "elbow", 20.0, 0.2, 0.2, 4.5};
  c.seed = 11;
  std::ostringstream a, b;
  write_log_csv(a, run_log(c));
  write_log_csv(b, run_log(c));
  EXPECT_EQ(a.str(), b.str());
  c.seed = 12;
  std::ostringstream other;
  write_log_csv(other, run_log(c));
  EXPECT_NE(a.str(), other.str());
}

TEST(Run, CsvColumnsFollowTheDocumentedOrder) {
  ExperimentConfig c = hold_config();
  c.duration = 0.01;
  Obstacle o;
  o.shape = HalfSpace{Vector3(0, 0, -1), Vector3::UnitZ()};
  o.probes = {"elbow"};
  c.obstacles.push_back(o);
  std::ostringstream os;
  write_log_csv(os, run_log(c));
  const std::string header = os.str().substr(0, os.str().find('\n'));
  EXPECT_EQ(header.rfind("t,q_a1,", 0), 0u);
  const auto pos = [&](const std::string& s) { return header.find(s); };
  EXPECT_LT(pos("q_a7"), pos("qd_a1"));
  EXPECT_LT(pos("qd_a7"), pos("tau_cmd_a1"));
  EXPECT_LT(pos("tau_cmd_a7"), pos("tau_ext_a1"));
  EXPECT_LT(pos("tau_ext_a7"), pos("contact_force_0:elbow"));
  EXPECT_LT(pos("contact_force_0:elbow"), pos("ee_x"));
  EXPECT_LT(pos("ref_z"), pos("err_ee_x"));
  EXPECT_LT(pos("err_ee_rz"), pos("err_elbow_x"));
  EXPECT_EQ(header.substr(header.size() - 13), "stored_energy");
  EXPECT_EQ(pos("err_elbow_rx"), std::string::npos);
}

TEST(Run, DivergentPlantAbortsWithTickAndQuantity) {
  // Stiff springs sampled at 5 Hz with a single substep blow up.
  ExperimentConfig c = hold_config();
  c.control_rate = 5.0;
  c.substeps = 1;
  c.duration = 100.0;
  c.robot.joints[6].armature = 0.0;
  c.trajectory.kind = TrajectoryKind::kLine;
  c.trajectory.amplitudes = Vector3(0.0, 0.1, 0.0);
  try {
    (void)run(c);
    FAIL() << "expected the run to abort";
  } catch (const RunAborted& e) {
    EXPECT_GE(e.tick(), 0);
    EXPECT_FALSE(e.quantity().empty());
    EXPECT_NE(std::string(e.what()).find("tick"), std::string::npos);
  }
}

TEST(Run, ValidationRejectsBadConfigs) {
  ExperimentConfig c = hold_config();
  c.control_rate = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = hold_config();
  c.duration = -1.0;
  EXPECT_THROW(c.validate(), Error);
  c = hold_config();
  c.ee_frame = "nowhere";
  EXPECT_THROW(c.validate(), Error);
  c = hold_config();
  c.q_home = VectorX::Zero(3);
  EXPECT_THROW(c.validate(), Error);
}

TEST(Run, HalvingForceBudgetsNeverRaisesPeakTorque) {
  ExperimentConfig base = hold_config();
  base.duration = 1.5;
  base.disturbances.push_back({"elbow", Wrench{Vector3(0, 80.0, 0), Vector3::Zero()}, 0.2, 0.6});
  base.disturbances.push_back({"ee", Wrench{Vector3(-100.0, 0, 40.0), Vector3::Zero()}, 0.8, 1.0});
  double prev = std::numeric_limits<double>::infinity();
  for (double f_max : {150.0, 75.0, 37.5}) {
    ExperimentConfig c = base;
    c.stack.attachments[0].pos_params.f_max = f_max;
    const RunReport r = run(c);
    const double peak = r.torque_peak.maxCoeff();
    EXPECT_LE(peak, prev) << "f_max " << f_max;
    EXPECT_EQ(r.saturation_violations, 0);
    prev = peak;
  }
}

struct EnergyTrace {
  double first = 0.0;
  double last = 0.0;
  double worst_rise = 0.0;  // largest tick-to-tick growth without a switch
  int smooth_ticks = 0;
};

// Gravity off, fixed targets, no disturbances. Total energy is the plant's
// kinetic energy plus the stored energy of every controller axis.
EnergyTrace closed_loop_energy(double dt, double offset_scale, double duration) {
  const ChainModel m = gravity_mode(models::lwr7(), false);
  VectorX q_goal(7);
  q_goal << 0.0, 0.5, 0.0, 1.5, 0.0, -0.9, 0.0;
  const VectorX q0 = q_goal + offset_scale * (VectorX(7) << 0.02, -0.03, 0.02, 0.03, -0.05, 0.04, 0.05).finished();
  ControllerStack s;
  s.attachments.emplace_back("ee", kAllDofs, test::kSimEePos, test::kSimEeRot);
  s.attachments.emplace_back("elbow", kPositionDofs, test::kSimElbow);
  const std::vector<Transform> targets = attachment_targets(m, q_goal, s);
  SimState st = SimState::at_rest(q0);
  const StepOptions opt{std::max(1, static_cast<int>(std::lround(dt / 1e-4)))};
  EnergyTrace tr;
  double prev = 0.0;
  const long n = std::lround(duration / dt);
  for (long k = 0; k < n; ++k) {
    const StackOutput out = stack_step(s, m, st.q, targets);
    double total = kinetic_energy(m, st.q, st.qd);
    for (const auto& a : out.attachments) total += a.stored_energy;
    if (k == 0) tr.first = total;
    if (k > 0 && !out.switched) {
      tr.worst_rise = std::max(tr.worst_rise, total - prev);
      ++tr.smooth_ticks;
    }
    prev = total;
    st = step(m, st, out.tau, {}, {}, dt, opt);
  }
  tr.last = prev;
  return tr;
}

// Between switches the continuous-time loop cannot create energy. The
// sampled loop holds torque over a tick, which adds an O(dt^2) error.
TEST(ClosedLoop, EnergyNonIncreasingBetweenSwitchesAtPhysicsRate) {
  const EnergyTrace tr = closed_loop_energy(1e-4, 0.5, 0.5);
  EXPECT_GT(tr.first, 1.0);
  EXPECT_GT(tr.smooth_ticks, 4000);
  EXPECT_LE(tr.worst_rise, 1e-4);
}

TEST(ClosedLoop, SamplingErrorShrinksQuadratically) {
  const EnergyTrace coarse = closed_loop_energy(1e-3, 0.5, 0.5);
  const EnergyTrace fine = closed_loop_energy(1e-4, 0.5, 0.5);
  EXPECT_GE(coarse.worst_rise / fine.worst_rise, 50.0);
}

TEST(ClosedLoop, EnergyDrainsAtTheControlRate) {
  const EnergyTrace tr = closed_loop_energy(1.0 / 333.3, 1.0, 5.0);
  EXPECT_GT(tr.first, 1.0);
  EXPECT_LE(tr.last, 1e-3 * tr.first);
}

}  // namespace
}  // namespace fic
