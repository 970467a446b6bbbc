#pragma once

#include <vector>

#include <Eigen/Dense>

#include "seels/confidence.hpp"
#include "seels/model.hpp"

namespace seels {

struct NonFiniteState : std::runtime_error {
  int scenario_index;
  explicit NonFiniteState(int idx)
      : std::runtime_error("rollout diverged (scenario " +
                           std::to_string(idx) + ")"),
        scenario_index(idx) {}
};

// One sampled realization: last-layer draws per dimension plus a disturbance
// draw per step and dimension.
struct Scenario {
  std::vector<Eigen::VectorXd> kappa;  // n vectors of dim d
  Eigen::MatrixXd eps;                 // n x N
};

// Per-step sample clouds with their axis-aligned box and outer ellipsoid.
struct ReachTube {
  std::vector<Eigen::VectorXd> mu;      // N+1 nominal states
  std::vector<Eigen::VectorXd> delta;   // N+1 box half-widths
  std::vector<Eigen::VectorXd> q_diag;  // N+1 ellipsoid shape diagonals
  std::vector<Eigen::MatrixXd> cloud;   // N+1 matrices, n x M
  int horizon() const { return static_cast<int>(mu.size()) - 1; }
};

// x_{k+1} = h(x_k, u_k) + kappa_i^T phi_i(x_k, u_k) + eps_k^i per dimension.
std::vector<Eigen::VectorXd> rollout(const FeatureNet& net,
                                     const NominalDynamics& h,
                                     const Eigen::VectorXd& x0,
                                     const std::vector<Eigen::VectorXd>& controls,
                                     const Scenario& scenario,
                                     int scenario_index = -1);

// Scenario draws: kappa inside the per-dimension confidence sets (radial in
// beta so a fixed seed scales with the set), eps uniform on [-b_i, b_i].
std::vector<Scenario> sample_scenarios(const std::vector<ConfidenceSet>& sets,
                                       const Eigen::VectorXd& noise_bound,
                                       int count, int horizon, RngStream& rng,
                                       SampleLaw law = SampleLaw::UniformVolume);

// Outer bounds of a sample cloud around mu: box half-widths
// delta_i = max_j |x^j_i - mu_i| and ellipsoid diagonal
// q_i = n_eff * delta_i^2 with n_eff the number of non-degenerate dimensions.
void ellipsoid_bound(const Eigen::MatrixXd& cloud, const Eigen::VectorXd& mu,
                     Eigen::VectorXd& delta, Eigen::VectorXd& q_diag);

// Nominal rollout (kappa = posterior mean, eps = 0) plus the sampled cloud
// per step, reduced to box and ellipsoid bounds.
ReachTube compute_tube(const FeatureNet& net, const NominalDynamics& h,
                       const PosteriorState& post, const Eigen::VectorXd& x0,
                       const std::vector<Eigen::VectorXd>& controls,
                       const std::vector<Scenario>& scenarios);

}  // namespace seels
