#pragma once

#include <vector>

#include <Eigen/Dense>

#include "seels/model.hpp"

namespace seels {

struct NonFiniteLoss : std::runtime_error {
  explicit NonFiniteLoss(const std::string& what) : std::runtime_error(what) {}
};

struct RegConfig {
  double alpha_orth = 0.0;  // orthogonality regularizer weight
  double alpha_beta = 0.0;  // confidence-set-size regularizer weight
};

// Trainable parameterization: the prior precision is stored through the
// Cholesky factor A_i of its inverse, V0_i = A_i A_i^T = Lambda0_i^{-1},
// which keeps it positive definite during gradient descent.
struct TrainableModel {
  FeatureNet net;
  std::vector<Eigen::VectorXd> kappa0;
  std::vector<Eigen::MatrixXd> v0_chol;  // lower triangular A_i
  Eigen::VectorXd sigma;                 // fixed noise scales, not trained

  int dims() const { return static_cast<int>(kappa0.size()); }
  LastLayerPrior prior() const;
  MetaModel to_model() const;

  static TrainableModel init(int state_dim, int control_dim, int width,
                             int layers, int feature_dim,
                             const Eigen::VectorXd& sigma, RngStream& rng);
};

struct LossGrads {
  double loss = 0.0;
  double nll = 0.0;
  double reg_orth = 0.0;
  double reg_beta = 0.0;
  NetGrads net;
  std::vector<Eigen::VectorXd> kappa0;
  std::vector<Eigen::MatrixXd> v0_chol;
};

// Negative joint marginal log likelihood of one-step-ahead predictions, the
// posterior restarting from the prior at each trajectory start and updating
// sequentially within the trajectory, plus both regularizers. Gradients are
// reverse-mode accumulated through the closed-form predictive and the
// rank-one posterior updates.
LossGrads meta_loss(const TrainableModel& m, const MetaDataset& data,
                    const std::vector<int>& traj_indices,
                    const NominalDynamics& h, const RegConfig& regs);

// Flat-vector views of the trainable parameters, used by the optimizer and
// by finite-difference checks.
Eigen::VectorXd pack_params(const TrainableModel& m);
void unpack_params(TrainableModel& m, const Eigen::VectorXd& v);
Eigen::VectorXd pack_grads(const TrainableModel& m, const LossGrads& g);

struct OptConfig {
  int iterations = 1000;
  double learning_rate = 1e-3;
  int batch_size = 8;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainResult {
  MetaModel model;
  std::vector<double> loss_curve;
  bool aborted_non_finite = false;
};

// Adam on the packed parameters over trajectory minibatches; after the last
// iteration the features are rescaled per dimension so lambda_max(Lambda0) = 1.
TrainResult train(TrainableModel m, const MetaDataset& data,
                  const NominalDynamics& h, const RegConfig& regs,
                  const OptConfig& opt);

// Per-dimension affine recalibration enforcing lambda_max(Lambda0_i) <= 1
// while leaving the predictive distribution unchanged.
void rescale_features(TrainableModel& m);

}  // namespace seels
