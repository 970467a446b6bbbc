#include <cmath>
#include <complex>

#include "seels/env.hpp"
#include "seels/numerics.hpp"

namespace seels {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kGravity = 9.81;
constexpr double kSubDt = 0.05;
constexpr int kSubsteps = 20;
const Eigen::Vector3d kWrapperDamping(0.0, 4.0, 1.0);

// Links: l1 = 1 (vertical, spins about z), l2 = l3 = 0.5 in the vertical
// plane set by q1. Link body z-axis runs along the link, so the world
// inertia is Ix*I + (Iz - Ix) * dir * dir^T.
template <typename T>
Eigen::Matrix<T, 3, 3> mass_matrix_t(const Eigen::Matrix<T, 3, 1>& q,
                                     const ManipulatorParams& p) {
  using Vec3 = Eigen::Matrix<T, 3, 1>;
  using Mat3 = Eigen::Matrix<T, 3, 3>;
  const T c1 = cos(q[0]), s1 = sin(q[0]);
  const T c2 = cos(q[1]), s2 = sin(q[1]);
  const T c23 = cos(q[1] + q[2]), s23 = sin(q[1] + q[2]);

  const Vec3 xr(c1, s1, T(0));            // radial direction in the plane
  const Vec3 yr(-s1, c1, T(0));
  const Vec3 zhat(T(0), T(0), T(1));
  const Vec3 d2 = c2 * xr + s2 * zhat;    // link-2 direction
  const Vec3 d3 = c23 * xr + s23 * zhat;  // link-3 direction
  const Vec3 t2 = -s2 * xr + c2 * zhat;   // d d2 / d q2
  const Vec3 t3 = -s23 * xr + c23 * zhat;
  const Vec3 a2 = -yr;                    // pitch axis of joints 2 and 3

  Mat3 jv2, jv3;
  jv2.col(0) = T(0.25) * c2 * yr;
  jv2.col(1) = T(0.25) * t2;
  jv2.col(2) = Vec3::Zero();
  jv3.col(0) = (T(0.5) * c2 + T(0.25) * c23) * yr;
  jv3.col(1) = T(0.5) * t2 + T(0.25) * t3;
  jv3.col(2) = T(0.25) * t3;

  Mat3 jw1 = Mat3::Zero(), jw2 = Mat3::Zero(), jw3 = Mat3::Zero();
  jw1.col(0) = zhat;
  jw2.col(0) = zhat;
  jw2.col(1) = a2;
  jw3.col(0) = zhat;
  jw3.col(1) = a2;
  jw3.col(2) = a2;

  auto world_inertia = [](const Vec3& dir, double ix, double iz) -> Mat3 {
    return T(ix) * Mat3::Identity() + T(iz - ix) * (dir * dir.transpose());
  };
  const Mat3 w1 = world_inertia(zhat, p.inertia_xy[0], p.inertia_z[0]);
  const Mat3 w2 = world_inertia(d2, p.inertia_xy[1], p.inertia_z[1]);
  const Mat3 w3 = world_inertia(d3, p.inertia_xy[2], p.inertia_z[2]);

  Mat3 m = T(p.mass[1]) * jv2.transpose() * jv2 +
           T(p.mass[2]) * jv3.transpose() * jv3 +
           jw1.transpose() * w1 * jw1 + jw2.transpose() * w2 * jw2 +
           jw3.transpose() * w3 * jw3;
  return m;
}

Obstacle ee_ball(double cx, double cy, double cz, double r) {
  Obstacle o;
  o.center = Eigen::Vector3d(cx, cy, cz);
  o.radius = r;
  o.project = [](const Eigen::VectorXd& x) {
    return ManipulatorEnv::end_effector(x.head(3));
  };
  o.project_jacobian = [](const Eigen::VectorXd& x) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(3, x.size());
    j.leftCols(3) = ManipulatorEnv::end_effector_jacobian(x.head(3));
    return j;
  };
  return o;
}

}  // namespace

Eigen::Matrix3d ManipulatorEnv::mass_matrix(const Eigen::Vector3d& q,
                                            const ManipulatorParams& p) {
  return mass_matrix_t<double>(q, p);
}

Eigen::Matrix3d ManipulatorEnv::coriolis(const Eigen::Vector3d& q,
                                         const Eigen::Vector3d& qd,
                                         const ManipulatorParams& p) {
  // Christoffel symbols from complex-step derivatives of M (machine
  // precision, so the passivity identity qd^T (Mdot - 2C) qd = 0 holds to
  // roundoff).
  using CVec = Eigen::Matrix<std::complex<double>, 3, 1>;
  const double h = 1e-20;
  Eigen::Matrix3d dm[3];
  for (int k = 0; k < 3; ++k) {
    CVec qc = q.cast<std::complex<double>>();
    qc[k] += std::complex<double>(0.0, h);
    Eigen::Matrix<std::complex<double>, 3, 3> mc = mass_matrix_t(qc, p);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) dm[k](i, j) = mc(i, j).imag() / h;
  }
  Eigen::Matrix3d c = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        c(i, j) += 0.5 * (dm[k](i, j) + dm[j](i, k) - dm[i](j, k)) * qd[k];
  return c;
}

Eigen::Vector3d ManipulatorEnv::gravity(const Eigen::Vector3d& q,
                                        const ManipulatorParams& p) {
  const double c2 = std::cos(q[1]);
  const double c23 = std::cos(q[1] + q[2]);
  Eigen::Vector3d n;
  n[0] = 0.0;
  n[1] = kGravity * (0.25 * p.mass[1] * c2 +
                     p.mass[2] * (0.5 * c2 + 0.25 * c23));
  n[2] = kGravity * 0.25 * p.mass[2] * c23;
  return n;
}

Eigen::Vector3d ManipulatorEnv::accel(const Eigen::Vector3d& q,
                                      const Eigen::Vector3d& qd,
                                      const Eigen::Vector3d& tau,
                                      const ManipulatorParams& p) {
  const Eigen::Matrix3d m = mass_matrix(q, p);
  Eigen::LLT<Eigen::Matrix3d> llt(m);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("manipulator mass matrix not PD");
  return llt.solve(tau - coriolis(q, qd, p) * qd - gravity(q, p));
}

Eigen::Vector3d ManipulatorEnv::end_effector(const Eigen::Vector3d& q) {
  const double c1 = std::cos(q[0]), s1 = std::sin(q[0]);
  const double c2 = std::cos(q[1]), s2 = std::sin(q[1]);
  const double c23 = std::cos(q[1] + q[2]), s23 = std::sin(q[1] + q[2]);
  const Eigen::Vector3d xr(c1, s1, 0.0);
  const Eigen::Vector3d zhat(0.0, 0.0, 1.0);
  return Eigen::Vector3d(0, 0, 1) + 0.5 * (c2 * xr + s2 * zhat) +
         0.5 * (c23 * xr + s23 * zhat);
}

Eigen::Matrix3d ManipulatorEnv::end_effector_jacobian(const Eigen::Vector3d& q) {
  const double c1 = std::cos(q[0]), s1 = std::sin(q[0]);
  const double c2 = std::cos(q[1]), s2 = std::sin(q[1]);
  const double c23 = std::cos(q[1] + q[2]), s23 = std::sin(q[1] + q[2]);
  const Eigen::Vector3d xr(c1, s1, 0.0);
  const Eigen::Vector3d yr(-s1, c1, 0.0);
  const Eigen::Vector3d zhat(0.0, 0.0, 1.0);
  const Eigen::Vector3d t2 = -s2 * xr + c2 * zhat;
  const Eigen::Vector3d t3 = -s23 * xr + c23 * zhat;
  Eigen::Matrix3d j;
  j.col(0) = 0.5 * (c2 + c23) * yr;
  j.col(1) = 0.5 * t2 + 0.5 * t3;
  j.col(2) = 0.5 * t3;
  return j;
}

ManipulatorEnv::ManipulatorEnv(int scenario) {
  spec_.name = "manipulator";
  spec_.state_dim = 6;
  spec_.control_dim = 3;
  spec_.dt = 1.0;

  Eigen::VectorXd xl(6), xu(6);
  xl << -kPi / 2, -kPi / 2, -kPi / 2, -kPi / 8, -kPi / 8, -kPi / 8;
  xu << kPi, kPi / 2, kPi / 2, kPi / 8, kPi / 8, kPi / 8;
  spec_.state_box = {xl, xu};

  Eigen::VectorXd ul = Eigen::VectorXd::Constant(3, -2.0);
  Eigen::VectorXd uu = Eigen::VectorXd::Constant(3, 2.0);
  spec_.control_box = {ul, uu};

  // q2/q3 range of X_0 sized so that at its edges the worst-case
  // gravity-compensation residual stays below the torque budget the
  // fallback has available to push back.
  Eigen::VectorXd il(6), iu(6);
  il << -kPi / 8, -0.75, -0.75, -kPi / 10, -kPi / 10, -kPi / 10;
  iu << kPi / 8, 0.75, 0.75, kPi / 10, kPi / 10, kPi / 10;
  spec_.init_box = {il, iu};

  Eigen::VectorXd gl(6), gu(6);
  gl << kPi / 2 - kPi / 8, -kPi / 10, -kPi / 10, -kPi / 8, -kPi / 8, -kPi / 8;
  gu << kPi / 2 + kPi / 8, kPi / 10, kPi / 10, kPi / 8, kPi / 8, kPi / 8;
  spec_.goal_box = {gl, gu};

  if (scenario == 0) {
    const double s = std::sqrt(2.0) / 2.0;
    spec_.obstacles = {ee_ball(s, -s, 1.4, 0.25), ee_ball(s, -s, 0.6, 0.25)};
  }

  spec_.sigma = Eigen::VectorXd::Constant(6, 1e-3);
}

void ManipulatorEnv::sample_params(RngStream& rng) {
  for (int i = 0; i < 3; ++i) {
    params_.mass[i] = rng.uniform(1.75, 2.25);
    params_.inertia_xy[i] = rng.uniform(0.04, 0.06);
    params_.inertia_z[i] = rng.uniform(0.008, 0.012);
  }
}

void ManipulatorEnv::set_nominal_params() { params_ = ManipulatorParams{}; }

Eigen::VectorXd ManipulatorEnv::roll_substeps(const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& u_seels,
                                              const ManipulatorParams& p,
                                              bool nominal_no_coriolis) const {
  const ManipulatorParams nominal{};
  Eigen::Vector3d q = x.head(3);
  Eigen::Vector3d qd = x.tail(3);
  for (int s = 0; s < kSubsteps; ++s) {
    const Eigen::Vector3d tau = gravity(q, nominal) -
                                kWrapperDamping.cwiseProduct(qd) +
                                u_seels.head(3);
    Eigen::Vector3d qdd;
    if (nominal_no_coriolis) {
      // Nominal model: nominal parameters and C = 0, so the wrapper's
      // gravity compensation cancels exactly.
      Eigen::LLT<Eigen::Matrix3d> llt(mass_matrix(q, nominal));
      qdd = llt.solve(tau - gravity(q, nominal));
    } else {
      qdd = accel(q, qd, tau, p);
    }
    q += kSubDt * qd;
    qd += kSubDt * qdd;
  }
  Eigen::VectorXd next(6);
  next << q, qd;
  return next;
}

Eigen::VectorXd ManipulatorEnv::true_step(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& u,
                                          const Eigen::VectorXd& eps) const {
  Eigen::VectorXd next = roll_substeps(x, u, params_, false);
  if (eps.size() == 6) next += eps;
  return next;
}

Eigen::VectorXd ManipulatorEnv::nominal_step(const Eigen::VectorXd& x,
                                             const Eigen::VectorXd& u) const {
  return roll_substeps(x, u, ManipulatorParams{}, true);
}

Eigen::VectorXd ManipulatorEnv::fallback(const Eigen::VectorXd& x) const {
  if (!spec_.init_box.contains(x, 1e-9))
    throw OutsideInvariantSet("manipulator fallback: state outside X_0");
  // Gains sized against each joint's effective inertia so the 50 ms
  // substeps stay stable: joints 2 and 3 already see the wrapper's
  // viscous damping, joint 1 needs its own derivative action.
  const Eigen::Vector3d kp(4.0, 2.7, 2.7);
  const Eigen::Vector3d kd(4.0, 0.0, 0.3);
  Eigen::VectorXd u(3);
  for (int i = 0; i < 3; ++i)
    u[i] = std::clamp(-kp[i] * x[i] - kd[i] * x[3 + i], -2.0, 2.0);
  return u;
}

std::unique_ptr<Env> ManipulatorEnv::clone() const {
  return std::make_unique<ManipulatorEnv>(*this);
}

}  // namespace seels
