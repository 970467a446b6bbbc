#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "seels/geometry.hpp"
#include "seels/model.hpp"
#include "seels/qp.hpp"
#include "seels/reach.hpp"

namespace seels {

struct SingularGradient : std::runtime_error {
  SingularGradient()
      : std::runtime_error("obstacle gradient undefined: point at center") {}
};

struct ImmediateInfeasible : std::runtime_error {
  explicit ImmediateInfeasible(const std::string& what)
      : std::runtime_error(what) {}
};

enum class OcpMode { Explore, Reach };

struct OcpSpec {
  OcpMode mode = OcpMode::Reach;
  int horizon = 1;
  Eigen::MatrixXd cost_q;       // stage state weight
  Eigen::MatrixXd cost_r;       // stage control weight
  Eigen::MatrixXd cost_qn;      // terminal weight
  Eigen::VectorXd goal;         // terminal cost center x_g
  Box terminal;                 // X_goal (Reach) or X_0 (Explore)
  Box state_box;                // X
  Box control_box;              // U
  std::vector<Obstacle> obstacles;
  double alpha_info = 0.0;      // 0 in Reach mode
  double delta = 0.1;
};

enum class OcpStatus { Feasible, Infeasible };

struct OcpSolution {
  OcpStatus status = OcpStatus::Infeasible;
  std::string detail;  // reason when Infeasible
  std::vector<Eigen::VectorXd> mu;        // N+1
  std::vector<Eigen::VectorXd> controls;  // N
  ReachTube tube;
  double cost = 0.0;
  double info_gain = 0.0;
  int iterations = 0;
};

struct ScpConfig {
  int max_iter = 15;
  double trust_init_frac = 0.5;  // of control half-range
  double trust_shrink = 0.5;
  double rel_cost_tol = 1e-4;
  double dyn_fd_step = 1e-6;
  std::optional<std::string> trace_path;  // JSON-lines iteration trace
};

// Information value of one (x, u): 0.5 sum_i log(1 + phi_i^T Lambda_i^{-1} phi_i).
double info_cost(const FeatureNet& net, const PosteriorState& post,
                 const Eigen::VectorXd& x, const Eigen::VectorXd& u);

// Gradient of info_cost w.r.t. (x, u) stacked, via the feature Jacobians.
Eigen::VectorXd info_cost_gradient(const FeatureNet& net,
                                   const PosteriorState& post,
                                   const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& u);

// First-order expansion of the robustified margin
//   g(x) = ||p(x) - center|| - r - sqrt(J^T Q J),  J = dp/dx direction term,
// at mu: returns (a, b) with a.x >= b equivalent to g(mu) + a.(x - mu) >= 0.
// Throws SingularGradient when p(mu) coincides with the obstacle center.
void robust_obstacle_row(const Eigen::VectorXd& mu,
                         const Eigen::VectorXd& q_diag, const Obstacle& obs,
                         Eigen::VectorXd& a, double& b);

// Tightened bounds lower_i + delta_i <= mu_i <= upper_i - delta_i.
// Throws ImmediateInfeasible when the tightening crosses.
void robust_box_rows(const Eigen::VectorXd& delta, const Box& box,
                     Eigen::VectorXd& lower, Eigen::VectorXd& upper);

// Sequential convex programming solve of one Explore/Reach problem with the
// given frozen scenarios; Feasible only if the independent post-hoc verifier
// passes on the re-propagated tube.
OcpSolution solve_ocp(const OcpSpec& spec, const FeatureNet& net,
                      const NominalDynamics& h, const PosteriorState& post,
                      const Eigen::VectorXd& x_start,
                      const std::vector<Scenario>& scenarios,
                      const ScpConfig& cfg = {});

}  // namespace seels
