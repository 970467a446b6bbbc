#include <cmath>

#include "seels/env.hpp"

namespace seels {

namespace {

constexpr double kDt = 3.0;
constexpr double kPi = 3.14159265358979323846;

double wrap_angle(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a < -kPi) a += 2.0 * kPi;
  return a;
}

Obstacle ball(double cx, double cy, double r) {
  Obstacle o;
  o.center = Eigen::Vector2d(cx, cy);
  o.radius = r;
  return o;
}

}  // namespace

Eigen::VectorXd FreeFlyerEnv::step_with_params(const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& u,
                                               const FreeFlyerParams& p,
                                               double dt,
                                               const Eigen::VectorXd& eps,
                                               const Box& state_box) {
  const Eigen::Vector2d v(x[3], x[4]);
  const double omega = x[5];
  const Eigen::Vector2d force(u[0], u[1]);
  const double torque = u[2];

  // Angular acceleration first, then substituted into the linear equation.
  const double omega_dot =
      (torque - p.p_off[0] * force[1] + p.p_off[1] * force[0]) / p.inertia;
  const Eigen::Vector2d perp(-p.p_off[1], p.p_off[0]);
  const Eigen::Vector2d v_dot =
      (force - omega_dot * perp + omega * omega * p.p_off) / p.m;

  Eigen::VectorXd next(6);
  next[0] = x[0] + dt * v[0];
  next[1] = x[1] + dt * v[1];
  next[2] = x[2] + dt * omega;
  next[3] = v[0] + dt * v_dot[0];
  next[4] = v[1] + dt * v_dot[1];
  next[5] = omega + dt * omega_dot;
  if (eps.size() == 6) next += eps;

  // Hard rails at the workspace boundary and a wrapped heading keep the
  // position/heading components of the state box positively invariant.
  next[0] = std::clamp(next[0], state_box.lower[0], state_box.upper[0]);
  next[1] = std::clamp(next[1], state_box.lower[1], state_box.upper[1]);
  next[2] = wrap_angle(next[2]);
  return next;
}

FreeFlyerEnv::FreeFlyerEnv(int scenario, Noise noise) {
  spec_.name = "freeflyer";
  spec_.state_dim = 6;
  spec_.control_dim = 3;
  spec_.dt = kDt;

  Eigen::VectorXd xl(6), xu(6);
  xl << 0.0, 0.0, -kPi, -0.2, -0.2, -0.25;
  xu << 3.0, 3.0, kPi, 0.2, 0.2, 0.25;
  spec_.state_box = {xl, xu};

  Eigen::VectorXd ul(3), uu(3);
  ul << -0.15, -0.15, -0.01;
  uu << 0.15, 0.15, 0.01;
  spec_.control_box = {ul, uu};

  Eigen::VectorXd il(6), iu(6);
  il << 0.0, 0.0, -kPi, -0.03, -0.03, -0.08;
  iu << 3.0, 3.0, kPi, 0.03, 0.03, 0.08;
  spec_.init_box = {il, iu};

  Eigen::Vector2d goal(1.7, 1.7);
  if (scenario == 4) goal = Eigen::Vector2d(1.5, 1.5);
  Eigen::VectorXd gl(6), gu(6);
  gl << goal[0] - 0.15, goal[1] - 0.15, -kPi, -0.05, -0.05, -0.1;
  gu << goal[0] + 0.15, goal[1] + 0.15, kPi, 0.05, 0.05, 0.1;
  spec_.goal_box = {gl, gu};

  switch (scenario) {
    case 0:
      spec_.obstacles = {ball(1.05, 1.05, 0.3)};
      break;
    case 1:
      spec_.obstacles = {ball(0.85, 1.25, 0.25), ball(1.35, 0.8, 0.25)};
      break;
    case 2:
      spec_.obstacles = {ball(0.7, 1.0, 0.2), ball(1.15, 1.4, 0.25),
                         ball(1.45, 0.85, 0.2)};
      break;
    case 3:
      spec_.obstacles = {ball(0.6, 1.45, 0.35), ball(1.45, 0.6, 0.35)};
      break;
    case 4:
      // Goal sealed inside an overlapping ring of obstacles.
      for (int k = 0; k < 6; ++k) {
        const double a = 2.0 * kPi * k / 6.0;
        spec_.obstacles.push_back(
            ball(goal[0] + 0.55 * std::cos(a), goal[1] + 0.55 * std::sin(a), 0.3));
      }
      break;
    default:
      break;  // obstacle-free
  }

  Eigen::VectorXd var(6);
  if (noise == Noise::Low)
    var << 1e-7, 1e-7, 1e-6, 1e-7, 1e-7, 1e-6;
  else
    var << 1e-6, 1e-6, 1e-5, 1e-7, 1e-7, 1e-5;
  spec_.sigma = var.cwiseSqrt();
}

void FreeFlyerEnv::sample_params(RngStream& rng) {
  params_.m = rng.uniform(25.0, 60.0);
  params_.inertia = rng.uniform(0.30, 0.70);
  params_.p_off[0] = rng.uniform(-0.075, 0.075);
  params_.p_off[1] = rng.uniform(-0.075, 0.075);
}

void FreeFlyerEnv::set_nominal_params() {
  params_ = FreeFlyerParams{};  // (35, 0.4, 0)
}

Eigen::VectorXd FreeFlyerEnv::true_step(const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& u,
                                        const Eigen::VectorXd& eps) const {
  return step_with_params(x, u, params_, kDt, eps, spec_.state_box);
}

Eigen::VectorXd FreeFlyerEnv::nominal_step(const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& u) const {
  return step_with_params(x, u, FreeFlyerParams{}, kDt, Eigen::VectorXd(),
                          spec_.state_box);
}

Eigen::VectorXd FreeFlyerEnv::fallback(const Eigen::VectorXd& x) const {
  if (!spec_.init_box.contains(x, 1e-9))
    throw OutsideInvariantSet("freeflyer fallback: state outside X_0");
  // Pure velocity damping; gains sized so one worst-case step (any params in
  // range, any bounded noise) cannot leave the velocity bounds, while the
  // rails/wrap handle positions and heading.
  Eigen::VectorXd u(3);
  u[0] = std::clamp(-0.7333 * x[3], -0.022, 0.022);
  u[1] = std::clamp(-0.7333 * x[4], -0.022, 0.022);
  u[2] = std::clamp(-0.12 * x[5], -0.0097, 0.0097);
  return u;
}

std::unique_ptr<Env> FreeFlyerEnv::clone() const {
  return std::make_unique<FreeFlyerEnv>(*this);
}

}  // namespace seels
