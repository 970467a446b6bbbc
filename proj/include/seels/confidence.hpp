#pragma once

#include <vector>

#include <Eigen/Dense>

#include "seels/model.hpp"
#include "seels/rng.hpp"

namespace seels {

// Ellipsoidal confidence set {kappa : ||kappa - center||_Lambda <= beta}.
struct ConfidenceSet {
  Eigen::VectorXd center;
  Eigen::MatrixXd lambda;
  double beta = 0.0;
  int dim_index = 0;
  double delta_i = 0.0;
};

// Radius combining the log-determinant information term with the
// prior/posterior eigenvalue-ratio term.
double beta_radius(const Eigen::MatrixXd& lambda0,
                   const Eigen::MatrixXd& lambda_t, double sigma,
                   double delta_i);

// One set per state dimension for the current posterior; delta_i = delta/(2n).
std::vector<ConfidenceSet> confidence_sets(const LastLayerPrior& prior,
                                           const PosteriorState& post,
                                           double delta);

bool membership(const ConfidenceSet& set, const Eigen::VectorXd& kappa);

enum class SampleLaw { UniformVolume, BoundaryBiased };

// Draws a parameter inside the set. Uniform-by-volume by default;
// boundary-biased puts half the draws exactly on the boundary. The draw is
// radial in beta: with a fixed rng sequence, scaling beta scales the offset.
Eigen::VectorXd sample_params(const ConfidenceSet& set, RngStream& rng,
                              SampleLaw law = SampleLaw::UniformVolume);

// Noise bound b_i = sqrt(sigma_i^2 chi2_1(0.95)) per dimension.
Eigen::VectorXd noise_bounds(const Eigen::VectorXd& sigma);

// Zero-mean Gaussian(sigma) resampled until |eps_i| <= b_i.
Eigen::VectorXd sample_noise(const Eigen::VectorXd& sigma, RngStream& rng);

// Synthetic system with a fixed random feature map and linear-in-features
// dynamics residuals, used to audit Theorem-style coverage.
struct SyntheticLinearSystem {
  int d = 8;
  LastLayerPrior prior;  // single "dimension" with d features
  SyntheticLinearSystem(int d, double sigma, RngStream& rng);

  // Random feature vector on the unit sphere (a fresh regressor per step).
  Eigen::VectorXd draw_features(RngStream& rng) const;
};

struct CoverageReport {
  int trials = 0;
  int horizon = 0;
  double delta_i = 0.0;
  std::vector<double> coverage;  // per dimension: fraction of trials where
                                 // kappa* stayed inside C for all t <= T
  std::vector<double> ci_lower;  // 95% binomial lower bounds
  std::string to_json() const;
};

// Monte Carlo audit of uniform coverage: kappa* drawn from the prior,
// observations corrupted by truncated Gaussian noise, posterior updated
// sequentially, membership checked at every step.
CoverageReport calibration_audit(const SyntheticLinearSystem& sys, int trials,
                                 int horizon, double delta_i, RngStream& rng);

}  // namespace seels
