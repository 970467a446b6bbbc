#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "seels/net.hpp"

namespace seels {

// Known nominal dynamics h(x, u) -> next state.
using NominalDynamics =
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

// Gaussian last-layer prior, per state dimension i:
//   kappa_i ~ N(kappa0_i, sigma_i^2 * Lambda0_i^{-1}).
struct LastLayerPrior {
  std::vector<Eigen::VectorXd> kappa0;   // d each
  std::vector<Eigen::MatrixXd> lambda0;  // d x d SPD each
  Eigen::VectorXd sigma;                 // noise scale per dimension

  int dims() const { return static_cast<int>(kappa0.size()); }
  static LastLayerPrior identity(int dims, int d, double sigma);
};

// Online posterior after t observed transitions.
struct PosteriorState {
  std::vector<Eigen::VectorXd> kappa;
  std::vector<Eigen::MatrixXd> lambda;
  int t = 0;

  static PosteriorState from_prior(const LastLayerPrior& prior);
};

struct TransitionRecord {
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  Eigen::VectorXd x_next;
};

using Trajectory = std::vector<TransitionRecord>;

struct MetaDataset {
  std::vector<Trajectory> trajectories;
  std::vector<int> system_id;  // hidden-parameter id per trajectory
};

struct MetaModel {
  FeatureNet net;
  LastLayerPrior prior;
};

// Rank-one update of (kappa_i, Lambda_i) for every dimension from a single
// transition; sequential application over a history equals the batch
// linear-regression formula.
void posterior_update(PosteriorState& state,
                      const std::vector<Eigen::VectorXd>& phi,
                      const Eigen::VectorXd& residual);
void posterior_update(PosteriorState& state, const FeatureNet& net,
                      const TransitionRecord& rec, const NominalDynamics& h);

// Batch evaluation over a full history, used as an independent check of the
// sequential path.
PosteriorState posterior_batch(const LastLayerPrior& prior, const FeatureNet& net,
                               const Trajectory& history, const NominalDynamics& h);

struct Predictive {
  Eigen::VectorXd mean;      // per-dimension residual mean
  Eigen::VectorXd variance;  // per-dimension marginal variance, >= sigma_i^2
};

Predictive predictive(const FeatureNet& net, const LastLayerPrior& prior,
                      const PosteriorState& state, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& u);

}  // namespace seels
