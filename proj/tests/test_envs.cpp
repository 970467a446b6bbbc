#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "seels/confidence.hpp"
#include "seels/dataset.hpp"
#include "seels/env.hpp"

using namespace seels;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("free-flyer thrust produces the hand-computed velocity increment") {
  FreeFlyerEnv env(-1, FreeFlyerEnv::Noise::Low);
  env.set_nominal_params();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(6);
  x[0] = x[1] = 1.5;
  Eigen::VectorXd u(3);
  u << 0.15, 0.0, 0.0;
  Eigen::VectorXd next = env.true_step(x, u, Eigen::VectorXd());
  // dv = dt * F / m = 3 * 0.15 / 35.
  CHECK(next[3] == doctest::Approx(0.012857142857142857).epsilon(1e-12));
  CHECK(next[4] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(next[0] == doctest::Approx(1.5).epsilon(1e-15));  // position lags
}

TEST_CASE("centered mass with nominal inertia reduces to the nominal model") {
  FreeFlyerEnv env(-1, FreeFlyerEnv::Noise::Low);
  env.set_nominal_params();
  RngStream rng(3);
  for (int s = 0; s < 200; ++s) {
    Eigen::VectorXd x = env.spec().state_box.sample(rng);
    Eigen::VectorXd u = env.spec().control_box.sample(rng);
    Eigen::VectorXd a = env.true_step(x, u, Eigen::VectorXd());
    Eigen::VectorXd b = env.nominal_step(x, u);
    REQUIRE((a - b).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("offset center of mass couples torque as in the hand substitution") {
  FreeFlyerParams p;
  p.m = 40.0;
  p.inertia = 0.5;
  p.p_off = Eigen::Vector2d(0.06, 0.0);
  Box box;
  box.lower = Eigen::VectorXd::Constant(6, -100.0);
  box.upper = Eigen::VectorXd::Constant(6, 100.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(6);
  Eigen::VectorXd u(3);
  u << 0.0, 0.1, 0.0;
  Eigen::VectorXd next =
      FreeFlyerEnv::step_with_params(x, u, p, 3.0, Eigen::VectorXd(), box);
  // omega_dot = (M - p_x F_y + p_y F_x) / J = -0.06 * 0.1 / 0.5 = -0.012.
  CHECK(next[5] == doctest::Approx(3.0 * -0.012).epsilon(1e-12));
  // v_dot = (F - omega_dot * (-p_y, p_x) + omega^2 p) / m, omega = 0.
  CHECK(next[3] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(next[4] ==
        doctest::Approx(3.0 * (0.1 + 0.012 * 0.06) / 40.0).epsilon(1e-12));
}

TEST_CASE("workspace rails and heading wrap keep the state box invariant") {
  FreeFlyerEnv env(-1, FreeFlyerEnv::Noise::Low);
  env.set_nominal_params();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(6);
  x[0] = 2.95;
  x[2] = kPi - 0.01;
  x[3] = 0.2;   // heading for the wall at full speed
  x[5] = 0.25;
  Eigen::VectorXd next = env.true_step(x, Eigen::VectorXd::Zero(3),
                                       Eigen::VectorXd());
  CHECK(next[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(next[2] >= -kPi);
  CHECK(next[2] <= kPi);
  CHECK(next[2] == doctest::Approx(kPi - 0.01 + 0.75 - 2.0 * kPi).epsilon(1e-12));
}

TEST_CASE("free-flyer fallback keeps the invariant set under worst-case draws") {
  FreeFlyerEnv env(-1, FreeFlyerEnv::Noise::Low);
  RngStream rng(9);
  for (int trial = 0; trial < 3000; ++trial) {
    env.sample_params(rng);
    Eigen::VectorXd x = env.spec().init_box.sample(rng);
    Eigen::VectorXd u = env.fallback(x);
    REQUIRE(env.spec().control_box.contains(u));
    Eigen::VectorXd eps = sample_noise(env.spec().sigma, rng);
    Eigen::VectorXd next = env.true_step(x, u, eps);
    REQUIRE(env.spec().init_box.contains(next, 1e-12));
  }
  Eigen::VectorXd outside = Eigen::VectorXd::Zero(6);
  outside[3] = 0.1;  // above the invariant velocity bound
  CHECK_THROWS_AS(env.fallback(outside), OutsideInvariantSet);
}

TEST_CASE("blocked-goal preset seals the goal behind overlapping obstacles") {
  FreeFlyerEnv env(4, FreeFlyerEnv::Noise::Low);
  const auto& obs = env.spec().obstacles;
  REQUIRE(obs.size() == 6);
  Eigen::Vector2d goal(1.5, 1.5);
  for (size_t k = 0; k < 6; ++k) {
    const auto& a = obs[k];
    const auto& b = obs[(k + 1) % 6];
    // Adjacent balls overlap, so there is no gap in the ring.
    CHECK((a.center - b.center).norm() < a.radius + b.radius - 1e-9);
    // The goal region itself stays obstacle-free.
    const double half_diag = std::sqrt(2.0) * 0.15;
    CHECK((a.center.head(2) - goal).norm() > a.radius + half_diag + 1e-9);
  }
}

TEST_CASE("halving the integration step halves the discretization error") {
  FreeFlyerParams p;
  p.m = 30.0;
  p.inertia = 0.45;
  p.p_off = Eigen::Vector2d(0.05, -0.04);
  Box box;
  box.lower = Eigen::VectorXd::Constant(6, -100.0);
  box.upper = Eigen::VectorXd::Constant(6, 100.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(6);
  x[5] = 0.2;
  Eigen::VectorXd u(3);
  u << 0.1, -0.05, 0.005;
  auto integrate = [&](double dt, int steps) {
    Eigen::VectorXd s = x;
    for (int k = 0; k < steps; ++k)
      s = FreeFlyerEnv::step_with_params(s, u, p, dt, Eigen::VectorXd(), box);
    return s;
  };
  Eigen::VectorXd ref = integrate(3.0 / 4096.0, 4096);
  const double e1 = (integrate(3.0, 1) - ref).norm();
  const double e2 = (integrate(1.5, 2) - ref).norm();
  CHECK(e1 / e2 > 1.6);
  CHECK(e1 / e2 < 2.6);
}

TEST_CASE("random-excitation datasets cover the state box") {
  FreeFlyerEnv env(-1, FreeFlyerEnv::Noise::Low);
  RngStream rng(13);
  MetaDataset data = generate_dataset(env, 64, 50, rng);
  REQUIRE(data.trajectories.size() == 64);
  const Box& box = env.spec().state_box;
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(6, 1e9);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(6, -1e9);
  for (const auto& traj : data.trajectories) {
    REQUIRE(traj.size() == 50);
    for (const auto& rec : traj) {
      REQUIRE(box.contains(rec.x, 1e-9));
      lo = lo.cwiseMin(rec.x);
      hi = hi.cwiseMax(rec.x);
    }
  }
  for (int i = 0; i < 6; ++i)
    CHECK((hi[i] - lo[i]) / (box.upper[i] - box.lower[i]) >= 0.8);
}

TEST_CASE("mass matrix is symmetric positive definite across the workspace") {
  RngStream rng(23);
  ManipulatorEnv env(-1);
  for (int trial = 0; trial < 1000; ++trial) {
    ManipulatorParams p;
    for (int i = 0; i < 3; ++i) {
      p.mass[i] = rng.uniform(1.75, 2.25);
      p.inertia_xy[i] = rng.uniform(0.04, 0.06);
      p.inertia_z[i] = rng.uniform(0.008, 0.012);
    }
    Eigen::Vector3d q = env.spec().state_box.sample(rng).head(3);
    Eigen::Matrix3d m = ManipulatorEnv::mass_matrix(q, p);
    REQUIRE((m - m.transpose()).norm() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
    REQUIRE(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("coriolis matrix satisfies the passivity identity") {
  RngStream rng(29);
  ManipulatorParams p;
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::Vector3d q = rng.normal_vec(3);
    Eigen::Vector3d qd = rng.normal_vec(3);
    Eigen::Matrix3d c = ManipulatorEnv::coriolis(q, qd, p);
    const double h = 1e-5;
    Eigen::Matrix3d mdot =
        (ManipulatorEnv::mass_matrix(q + h * qd, p) -
         ManipulatorEnv::mass_matrix(q - h * qd, p)) /
        (2.0 * h);
    const double v = qd.dot((mdot - 2.0 * c) * qd);
    REQUIRE(std::abs(v) < 1e-8);
  }
}

TEST_CASE("gravity vector is the gradient of the potential energy") {
  ManipulatorParams p;
  auto potential = [&](const Eigen::Vector3d& q) {
    const double s2 = std::sin(q[1]);
    const double s23 = std::sin(q[1] + q[2]);
    return 9.81 * (0.25 * p.mass[1] * s2 +
                   p.mass[2] * (0.5 * s2 + 0.25 * s23));
  };
  RngStream rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Vector3d q = rng.normal_vec(3);
    Eigen::Vector3d n = ManipulatorEnv::gravity(q, p);
    const double h = 1e-6;
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector3d qp = q, qm = q;
      qp[i] += h;
      qm[i] -= h;
      const double fd = (potential(qp) - potential(qm)) / (2.0 * h);
      REQUIRE(n[i] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("unforced dynamics conserve total mechanical energy") {
  ManipulatorParams p;
  auto potential = [&](const Eigen::Vector3d& q) {
    const double s2 = std::sin(q[1]);
    const double s23 = std::sin(q[1] + q[2]);
    return 9.81 * (0.25 * p.mass[1] * s2 +
                   p.mass[2] * (0.5 * s2 + 0.25 * s23));
  };
  auto energy = [&](const Eigen::Vector3d& q, const Eigen::Vector3d& qd) {
    return 0.5 * qd.dot(ManipulatorEnv::mass_matrix(q, p) * qd) + potential(q);
  };
  Eigen::Vector3d q(0.3, 0.2, -0.4), qd(0.1, -0.2, 0.15);
  const double e0 = energy(q, qd);
  const double dt = 1e-5;
  for (int s = 0; s < 20000; ++s) {  // 0.2 s of free fall, semi-implicit Euler
    Eigen::Vector3d qdd =
        ManipulatorEnv::accel(q, qd, Eigen::Vector3d::Zero(), p);
    qd += dt * qdd;
    q += dt * qd;
  }
  CHECK(std::abs(energy(q, qd) - e0) / std::abs(e0) < 1e-3);
}

TEST_CASE("end effector position and Jacobian") {
  Eigen::Vector3d q0 = Eigen::Vector3d::Zero();
  Eigen::Vector3d ee = ManipulatorEnv::end_effector(q0);
  CHECK((ee - Eigen::Vector3d(1, 0, 1)).norm() < 1e-14);

  RngStream rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Vector3d q = rng.normal_vec(3);
    Eigen::Matrix3d j = ManipulatorEnv::end_effector_jacobian(q);
    const double h = 1e-6;
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector3d qp = q, qm = q;
      qp[i] += h;
      qm[i] -= h;
      Eigen::Vector3d fd =
          (ManipulatorEnv::end_effector(qp) - ManipulatorEnv::end_effector(qm)) /
          (2.0 * h);
      REQUIRE((fd - j.col(i)).norm() < 1e-5);
    }
  }
}

TEST_CASE("base rotation acts on the end effector as a rotation about z") {
  RngStream rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Vector3d q = rng.normal_vec(3);
    const double a = rng.uniform(-kPi, kPi);
    Eigen::Vector3d q_rot = q;
    q_rot[0] += a;
    Eigen::Matrix3d rz;
    rz << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    Eigen::Vector3d base(0, 0, 1);
    Eigen::Vector3d lhs = ManipulatorEnv::end_effector(q_rot) - base;
    Eigen::Vector3d rhs = rz * (ManipulatorEnv::end_effector(q) - base);
    REQUIRE((lhs - rhs).norm() < 1e-12);
  }
}

TEST_CASE("macro step equals an independent re-integration of the wrapper") {
  ManipulatorEnv env(0);
  RngStream rng(43);
  env.sample_params(rng);
  const ManipulatorParams p = env.params();
  const ManipulatorParams nominal{};
  Eigen::VectorXd x(6);
  x << 0.2, -0.3, 0.4, 0.1, -0.05, 0.2;
  Eigen::VectorXd u(3);
  u << 0.5, -1.0, 0.25;

  Eigen::Vector3d q = x.head(3), qd = x.tail(3);
  const Eigen::Vector3d damping(0.0, 4.0, 1.0);
  for (int s = 0; s < 20; ++s) {
    Eigen::Vector3d tau = ManipulatorEnv::gravity(q, nominal) -
                          damping.cwiseProduct(qd) + u.head(3);
    Eigen::Vector3d qdd = ManipulatorEnv::accel(q, qd, tau, p);
    q += 0.05 * qd;
    qd += 0.05 * qdd;
  }
  Eigen::VectorXd expected(6);
  expected << q, qd;
  Eigen::VectorXd got = env.true_step(x, u, Eigen::VectorXd());
  CHECK((got - expected).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("nominal wrapper model holds still at rest with zero input") {
  ManipulatorEnv env(-1);
  Eigen::VectorXd x(6);
  x << 0.3, 0.5, -0.2, 0.0, 0.0, 0.0;
  Eigen::VectorXd next = env.nominal_step(x, Eigen::VectorXd::Zero(3));
  CHECK((next - x).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("manipulator fallback keeps the invariant set under worst-case draws") {
  ManipulatorEnv env(-1);
  RngStream rng(47);
  for (int trial = 0; trial < 2000; ++trial) {
    env.sample_params(rng);
    Eigen::VectorXd x = env.spec().init_box.sample(rng);
    Eigen::VectorXd u = env.fallback(x);
    REQUIRE(env.spec().control_box.contains(u));
    Eigen::VectorXd eps = sample_noise(env.spec().sigma, rng);
    Eigen::VectorXd next = env.true_step(x, u, eps);
    REQUIRE(env.spec().init_box.contains(next, 1e-12));
  }
  Eigen::VectorXd outside = Eigen::VectorXd::Zero(6);
  outside[1] = 1.0;
  CHECK_THROWS_AS(env.fallback(outside), OutsideInvariantSet);
}

TEST_CASE("noise scales match the published variances") {
  FreeFlyerEnv low(-1, FreeFlyerEnv::Noise::Low);
  FreeFlyerEnv high(-1, FreeFlyerEnv::Noise::High);
  CHECK(low.spec().sigma[0] == doctest::Approx(std::sqrt(1e-7)).epsilon(1e-12));
  CHECK(low.spec().sigma[2] == doctest::Approx(std::sqrt(1e-6)).epsilon(1e-12));
  CHECK(high.spec().sigma[0] == doctest::Approx(std::sqrt(1e-6)).epsilon(1e-12));
  CHECK(high.spec().sigma[5] == doctest::Approx(std::sqrt(1e-5)).epsilon(1e-12));
  ManipulatorEnv arm(-1);
  CHECK(arm.spec().sigma[0] == doctest::Approx(1e-3).epsilon(1e-12));
}
