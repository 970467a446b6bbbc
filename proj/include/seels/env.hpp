#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "seels/geometry.hpp"
#include "seels/model.hpp"
#include "seels/rng.hpp"

namespace seels {

struct OutsideInvariantSet : std::runtime_error {
  explicit OutsideInvariantSet(const std::string& what)
      : std::runtime_error(what) {}
};

struct EnvSpec {
  std::string name;
  int state_dim = 0;
  int control_dim = 0;
  double dt = 0.0;
  Box state_box;    // X
  Box control_box;  // U
  Box init_box;     // X_0, kept invariant by the fallback controller
  Box goal_box;     // X_goal
  std::vector<Obstacle> obstacles;
  Eigen::VectorXd sigma;  // noise scale per state dimension
};

// Ground-truth simulator with hidden parameters. Step functions are pure;
// the stochastic part enters through the eps argument.
class Env {
 public:
  virtual ~Env() = default;
  const EnvSpec& spec() const { return spec_; }

  virtual void sample_params(RngStream& rng) = 0;
  virtual void set_nominal_params() = 0;
  virtual Eigen::VectorXd true_step(const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& eps) const = 0;
  // Known nominal model h used by the planner and for training residuals.
  virtual Eigen::VectorXd nominal_step(const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& u) const = 0;
  // Regulation controller keeping X_0 invariant (throws when x is outside).
  virtual Eigen::VectorXd fallback(const Eigen::VectorXd& x) const = 0;
  virtual std::unique_ptr<Env> clone() const = 0;

  NominalDynamics nominal_dynamics() const {
    return [this](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
      return nominal_step(x, u);
    };
  }

 protected:
  EnvSpec spec_;
};

struct FreeFlyerParams {
  double m = 35.0;
  double inertia = 0.4;
  Eigen::Vector2d p_off = Eigen::Vector2d::Zero();
};

// Planar free-flyer: state (p_x, p_y, theta, v_x, v_y, omega), control
// (F_x, F_y, M); 3 s forward-Euler step with an offset center of mass.
// Heading wraps to [-pi, pi]; positions stop at the workspace boundary so
// the state box is positively invariant (hard rails).
class FreeFlyerEnv : public Env {
 public:
  enum class Noise { Low, High };
  // scenario: 0..3 obstacle presets (figure reconstructions), 4 = blocked
  // goal, -1 = no obstacles.
  FreeFlyerEnv(int scenario, Noise noise);

  void sample_params(RngStream& rng) override;
  void set_nominal_params() override;
  Eigen::VectorXd true_step(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& eps) const override;
  Eigen::VectorXd nominal_step(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u) const override;
  Eigen::VectorXd fallback(const Eigen::VectorXd& x) const override;
  std::unique_ptr<Env> clone() const override;

  const FreeFlyerParams& params() const { return params_; }
  void set_params(const FreeFlyerParams& p) { params_ = p; }
  static Eigen::VectorXd step_with_params(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& u,
                                          const FreeFlyerParams& p, double dt,
                                          const Eigen::VectorXd& eps,
                                          const Box& state_box);

 private:
  FreeFlyerParams params_;
};

struct ManipulatorParams {
  Eigen::Vector3d mass{2.0, 2.0, 2.0};
  Eigen::Vector3d inertia_xy{0.05, 0.05, 0.05};  // I_x = I_y per link
  Eigen::Vector3d inertia_z{0.01, 0.01, 0.01};
};

// Three-link open-chain arm: state (q, qdot), control u_seels (joint torques,
// added to a damping + approximate-gravity-compensation wrapper). One planner
// step = 1 s = 20 Euler substeps of 50 ms; noise enters once per step.
class ManipulatorEnv : public Env {
 public:
  // scenario 0: two end-effector ball obstacles; -1: no obstacles.
  explicit ManipulatorEnv(int scenario = 0);

  void sample_params(RngStream& rng) override;
  void set_nominal_params() override;
  Eigen::VectorXd true_step(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& eps) const override;
  Eigen::VectorXd nominal_step(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u) const override;
  Eigen::VectorXd fallback(const Eigen::VectorXd& x) const override;
  std::unique_ptr<Env> clone() const override;

  const ManipulatorParams& params() const { return params_; }
  void set_params(const ManipulatorParams& p) { params_ = p; }

  // Rigid-body terms for given parameters (accessors for the test oracles).
  static Eigen::Matrix3d mass_matrix(const Eigen::Vector3d& q,
                                     const ManipulatorParams& p);
  static Eigen::Matrix3d coriolis(const Eigen::Vector3d& q,
                                  const Eigen::Vector3d& qd,
                                  const ManipulatorParams& p);
  static Eigen::Vector3d gravity(const Eigen::Vector3d& q,
                                 const ManipulatorParams& p);
  static Eigen::Vector3d accel(const Eigen::Vector3d& q,
                               const Eigen::Vector3d& qd,
                               const Eigen::Vector3d& tau,
                               const ManipulatorParams& p);
  static Eigen::Vector3d end_effector(const Eigen::Vector3d& q);
  static Eigen::Matrix3d end_effector_jacobian(const Eigen::Vector3d& q);

 private:
  Eigen::VectorXd roll_substeps(const Eigen::VectorXd& x,
                                const Eigen::VectorXd& u_seels,
                                const ManipulatorParams& p,
                                bool nominal_no_coriolis) const;
  ManipulatorParams params_;
};

}  // namespace seels
