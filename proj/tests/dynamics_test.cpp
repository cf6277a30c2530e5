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
#include <random>

#include "fic/dynamics.hpp"
#include "fic/models.hpp"

namespace fic {
namespace {

VectorX random_vec(std::mt19937_64& rng, int n, double span) {
  std::uniform_real_distribution<double> u(-span, span);
  VectorX v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

VectorX vec1(double x) {
  VectorX v(1);
  v << x;
  return v;
}

// Textbook planar 2R with uniform rods (l = 1, lc = 0.5, m = 1) and gravity
// along -y: tau = M(q) qdd + C(q, qd) + G(q).
struct Planar2rOracle {
  double m = 1.0, l = 1.0, lc = 0.5, g = 9.81;
  double izz = (3.0 * 0.02 * 0.02 + 1.0) / 12.0;  // rod about its own z

  Eigen::Matrix2d mass(const VectorX& q) const {
    const double c2 = std::cos(q[1]);
    Eigen::Matrix2d M;
    M(0, 0) = 2 * izz + m * lc * lc + m * (l * l + lc * lc + 2 * l * lc * c2);
    M(0, 1) = M(1, 0) = izz + m * (lc * lc + l * lc * c2);
    M(1, 1) = izz + m * lc * lc;
    return M;
  }

  Eigen::Vector2d torque(const VectorX& q, const VectorX& qd, const VectorX& qdd) const {
    const double s2 = std::sin(q[1]);
    const double c1 = std::cos(q[0]), c12 = std::cos(q[0] + q[1]);
    const double h = m * l * lc * s2;
    Eigen::Vector2d tau = mass(q) * qdd.head<2>();
    tau[0] += -h * (2 * qd[0] * qd[1] + qd[1] * qd[1]) + g * (m * lc * c1 + m * (l * c1 + lc * c12));
    tau[1] += h * qd[0] * qd[0] + g * m * lc * c12;
    return tau;
  }
};

TEST(InverseDynamics, PendulumHorizontalHoldsWithMgl) {
  const ChainModel p = models::pendulum();
  const VectorX tau = inverse_dynamics(p, vec1(std::numbers::pi / 2), vec1(0), vec1(0));
  EXPECT_NEAR(tau[0], 9.81, 1e-9);
}

TEST(InverseDynamics, ZeroGravityAtRestNeedsNoTorque) {
  const ChainModel m = gravity_mode(models::lwr7(), false);
  std::mt19937_64 rng(1);
  const VectorX tau = inverse_dynamics(m, random_vec(rng, 7, 2.0), VectorX::Zero(7), VectorX::Zero(7));
  EXPECT_EQ(tau.cwiseAbs().maxCoeff(), 0.0);
}

TEST(InverseDynamics, Planar2rMatchesClosedForm) {
  const ChainModel m = models::planar_2r();
  const Planar2rOracle oracle;
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const VectorX q = random_vec(rng, 2, 3.0), qd = random_vec(rng, 2, 3.0), qdd = random_vec(rng, 2, 5.0);
    const VectorX got = inverse_dynamics(m, q, qd, qdd);
    EXPECT_LE((got - oracle.torque(q, qd, qdd)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((mass_matrix(m, q) - oracle.mass(q)).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(MassMatrix, PendulumIsMlSquared) {
  const MatrixX M = mass_matrix(models::pendulum(), vec1(0.3));
  EXPECT_NEAR(M(0, 0), 1.0, 1e-9);
}

TEST(MassMatrix, SymmetricPositiveDefiniteAndGravityIndependent) {
  const ChainModel m = models::lwr7();
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const VectorX q = random_vec(rng, 7, 3.0);
    const MatrixX M = mass_matrix(m, q);
    EXPECT_LE((M - M.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<MatrixX>(M).eigenvalues().minCoeff(), 0.0);
    EXPECT_EQ((mass_matrix(gravity_mode(m, false), q) - M).norm(), 0.0);
  }
}

TEST(MassMatrix, MatchesInverseDynamicsColumnProbes) {
  for (const ChainModel& base : {models::lwr7(), models::planar_3r()}) {
    const ChainModel m = gravity_mode(base, false);
    const int n = static_cast<int>(m.dof());
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      const VectorX q = random_vec(rng, n, 3.0);
      const MatrixX M = mass_matrix(m, q);
      for (int k = 0; k < n; ++k) {
        const VectorX col = inverse_dynamics(m, q, VectorX::Zero(n), VectorX::Unit(n, k));
        EXPECT_LE((M.col(k) - col).cwiseAbs().maxCoeff(), 1e-9);
      }
    }
  }
}

TEST(Dynamics, MassMatrixPlusBiasReproducesInverseDynamics) {
  const ChainModel m = models::lwr7();
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const VectorX q = random_vec(rng, 7, 3.0), qd = random_vec(rng, 7, 2.0), qdd = random_vec(rng, 7, 5.0);
    const VectorX tau = inverse_dynamics(m, q, qd, qdd);
    EXPECT_LE((mass_matrix(m, q) * qdd + bias_forces(m, q, qd) - tau).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Dynamics, ForwardInverseRoundTrip) {
  const ChainModel m = models::lwr7();
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const VectorX q = random_vec(rng, 7, 3.0), qd = random_vec(rng, 7, 2.0), qdd = random_vec(rng, 7, 5.0);
    const VectorX back = forward_dynamics(m, q, qd, inverse_dynamics(m, q, qd, qdd));
    EXPECT_LE((back - qdd).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Dynamics, PowerBalanceAgainstEnergyDerivative) {
  // d(T + U)/dt = qd . tau for any motion; checked by central differences
  // along q(t) = q0 + qd0 t + qdd0 t^2 / 2.
  const ChainModel m = models::lwr7();
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorX q0 = random_vec(rng, 7, 2.0), qd0 = random_vec(rng, 7, 1.0), qdd0 = random_vec(rng, 7, 2.0);
    const double h = 1e-5;
    auto energy = [&](double t) {
      const VectorX q = q0 + qd0 * t + 0.5 * qdd0 * t * t;
      const VectorX qd = qd0 + qdd0 * t;
      return kinetic_energy(m, q, qd) + potential_energy(m, q);
    };
    const double rate = (energy(h) - energy(-h)) / (2 * h);
    const double power = qd0.dot(inverse_dynamics(m, q0, qd0, qdd0));
    EXPECT_NEAR(rate, power, 1e-6 * std::max(1.0, std::abs(power)));
  }
}

TEST(Step, GravityCompensatedStateIsStationary) {
  const ChainModel m = models::lwr7();
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    SimState s = SimState::at_rest(random_vec(rng, 7, 2.0));
    const VectorX q0 = s.q;
    for (int k = 0; k < 10; ++k) {
      const VectorX before = s.q;
      s = step(m, s, gravity_torque(m, s.q), {}, {}, 1e-3);
      EXPECT_LE((s.q - before).cwiseAbs().maxCoeff(), 1e-9);
    }
    EXPECT_LE(s.qd.cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Step, GravityOffPendulumHoldsAnyPose) {
  const ChainModel p = gravity_mode(models::pendulum(), false);
  SimState s = SimState::at_rest(vec1(1.1));
  for (int k = 0; k < 100; ++k) s = step(p, s, vec1(0), {}, {}, 1e-3);
  EXPECT_EQ(s.q[0], 1.1);
  EXPECT_EQ(s.qd[0], 0.0);
}

TEST(Step, UnforcedPendulumConservesEnergy) {
  const ChainModel p = models::pendulum();
  SimState s = SimState::at_rest(vec1(std::numbers::pi / 2));
  auto energy = [&](const SimState& st) { return kinetic_energy(p, st.q, st.qd) + potential_energy(p, st.q); };
  const double e0 = energy(s);
  // Swing energy above the hanging rest state, the scale that drift is measured against.
  const double swing = e0 - potential_energy(p, vec1(0));
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    s = step(p, s, vec1(0), {}, {}, 1e-3);
    worst = std::max(worst, std::abs(energy(s) - e0));
  }
  EXPECT_NEAR(s.t, 10.0, 1e-9);
  EXPECT_LE(worst / swing, 1e-3);
}

TEST(Step, JointDampingDissipates) {
  ChainModel p = models::pendulum();
  p.joint_damping = 0.5;
  SimState s = SimState::at_rest(vec1(1.0));
  auto energy = [&](const SimState& st) { return kinetic_energy(p, st.q, st.qd) + potential_energy(p, st.q); };
  const double e0 = energy(s);
  for (int k = 0; k < 5000; ++k) s = step(p, s, vec1(0), {}, {}, 1e-3);
  EXPECT_LT(energy(s), e0 - 1.0);
}

TEST(Step, NonFiniteTorqueThrows) {
  const ChainModel p = models::pendulum();
  const SimState s = SimState::at_rest(vec1(0.0));
  EXPECT_THROW(step(p, s, vec1(std::nan("")), {}, {}, 1e-3), Error);
  EXPECT_THROW(step(p, s, vec1(INFINITY), {}, {}, 1e-3), Error);
  EXPECT_THROW(step(p, s, VectorX::Zero(2), {}, {}, 1e-3), Error);
}

TEST(Step, DisturbanceMapsThroughJacobianTranspose) {
  const ChainModel p = gravity_mode(models::pendulum(), false);
  const Disturbance d{"bob", Wrench{Vector3(2.0, 0, 0), Vector3::Zero()}, 0.0, 0.5};
  SimState s = SimState::at_rest(vec1(0.0));
  s = step(p, s, vec1(0), {d}, {}, 1e-3, {1});
  // Bob at (0,-1,0), force along +x: moment about z is +2 N m.
  EXPECT_NEAR(s.tau_ext[0], 2.0, 1e-12);
  EXPECT_GT(s.qd[0], 0.0);
  SimState late = SimState::at_rest(vec1(0.0));
  late.t = 0.5;
  late = step(p, late, vec1(0), {d}, {}, 1e-3);
  EXPECT_EQ(late.tau_ext[0], 0.0);
  EXPECT_EQ(late.qd[0], 0.0);
}

TEST(Contact, OneSidedPenaltyWall) {
  const ChainModel p = models::pendulum();
  Obstacle wall;
  wall.shape = HalfSpace{Vector3(0.2, 0, 0), Vector3(-1, 0, 0)};  // solid for x > 0.2
  wall.probes = {"bob"};
  SimState s = SimState::at_rest(vec1(-0.5));
  auto energy = [&](const SimState& st) { return kinetic_energy(p, st.q, st.qd) + potential_energy(p, st.q); };
  const double e0 = energy(s);
  double max_x = -1.0;
  int contact_ticks = 0;
  for (int k = 0; k < 3000; ++k) {
    s = step(p, s, vec1(0), {}, {wall}, 1e-3);
    const double x = frame_pose(p, s.q, "bob").translation.x();
    max_x = std::max(max_x, x);
    ASSERT_EQ(s.probe_forces.size(), 1u);
    EXPECT_GE(s.probe_forces[0], 0.0);
    if (s.contacts.empty()) {
      EXPECT_EQ(s.probe_forces[0], 0.0);
      EXPECT_EQ(s.tau_ext[0], 0.0);
    } else {
      ++contact_ticks;
      // Pushes the bob back out along -x, i.e. a negative moment about z.
      EXPECT_LE(s.tau_ext[0], 0.0);
    }
  }
  EXPECT_GT(contact_ticks, 0);
  EXPECT_GT(max_x, 0.2);
  EXPECT_LT(max_x, 0.25);
  EXPECT_LE(energy(s), e0 + 1e-3);
}

TEST(Contact, SphereFarAwayNeverTouches) {
  const ChainModel m = models::lwr7();
  Obstacle ball;
  ball.shape = Sphere{Vector3(5, 5, 5), 0.1};
  ball.probes = {"elbow", "wrist", "ee"};
  ASSERT_NO_THROW(ball.validate());
  SimState s = SimState::at_rest(VectorX::Constant(7, 0.3));
  for (int k = 0; k < 50; ++k) s = step(m, s, VectorX::Zero(7), {}, {ball}, 1e-3);
  EXPECT_TRUE(s.contacts.empty());
  EXPECT_EQ(s.probe_forces, std::vector<double>(3, 0.0));
  EXPECT_EQ(s.tau_ext.norm(), 0.0);
}

TEST(Contact, ObstacleValidation) {
  Obstacle o;
  o.shape = Sphere{Vector3::Zero(), -1.0};
  EXPECT_THROW(o.validate(), Error);
  o.shape = HalfSpace{Vector3::Zero(), Vector3(0, 0, 2)};
  EXPECT_THROW(o.validate(), Error);
  o.shape = HalfSpace{};
  o.stiffness = 0.0;
  EXPECT_THROW(o.validate(), Error);
  EXPECT_THROW((Disturbance{"ee", {}, 1.0, 1.0}.validate()), Error);
}

}  // namespace
}  // namespace fic
