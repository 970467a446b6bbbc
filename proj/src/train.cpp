#include <cmath>

#include "seels/meta_loss.hpp"
#include "seels/numerics.hpp"

namespace seels {

void rescale_features(TrainableModel& m) {
  // phi_i -> c phi_i, kappa0_i -> kappa0_i / c, Lambda0_i -> c^2 Lambda0_i
  // leaves every prediction unchanged; c = 1/sqrt(lambda_max(Lambda0_i))
  // pins the largest prior precision eigenvalue at 1.
  for (int i = 0; i < m.dims(); ++i) {
    Eigen::MatrixXd v0 = m.v0_chol[i] * m.v0_chol[i].transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v0);
    const double lam_min_v0 = es.eigenvalues().minCoeff();
    if (!(lam_min_v0 > 0.0))
      throw NotPositiveDefinite("rescale_features: degenerate prior");
    const double lam_max_l0 = 1.0 / lam_min_v0;  // lambda_max(Lambda0)
    const double c = 1.0 / std::sqrt(lam_max_l0);
    m.net.head[i] *= c;
    m.kappa0[i] /= c;
    // Lambda0 *= c^2  <=>  V0 /= c^2  <=>  A /= c.
    m.v0_chol[i] /= c;
  }
}

TrainResult train(TrainableModel m, const MetaDataset& data,
                  const NominalDynamics& h, const RegConfig& regs,
                  const OptConfig& opt) {
  TrainResult result;
  const int num_traj = static_cast<int>(data.trajectories.size());
  if (num_traj == 0) throw std::invalid_argument("train: empty dataset");
  RngStream rng(opt.seed, /*stream_id=*/0x7261696eULL);

  Eigen::VectorXd theta = pack_params(m);
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(theta.size());

  for (int it = 0; it < opt.iterations; ++it) {
    const int batch = std::min(opt.batch_size, num_traj);
    std::vector<int> idx(batch);
    for (int k = 0; k < batch; ++k)
      idx[k] = static_cast<int>(rng.next_u64() % num_traj);

    LossGrads g;
    try {
      g = meta_loss(m, data, idx, h, regs);
    } catch (const NonFiniteLoss&) {
      result.aborted_non_finite = true;
      break;  // checkpoint: keep the last finite parameters
    }
    result.loss_curve.push_back(g.loss);

    Eigen::VectorXd grad = pack_grads(m, g);
    const double t = static_cast<double>(it + 1);
    m1 = opt.beta1 * m1 + (1.0 - opt.beta1) * grad;
    m2 = opt.beta2 * m2.array().matrix() +
         (1.0 - opt.beta2) * grad.array().square().matrix();
    const double bc1 = 1.0 - std::pow(opt.beta1, t);
    const double bc2 = 1.0 - std::pow(opt.beta2, t);
    theta -= (opt.learning_rate * (m1 / bc1).array() /
              ((m2 / bc2).array().sqrt() + opt.eps))
                 .matrix();
    unpack_params(m, theta);
  }

  rescale_features(m);
  result.model = m.to_model();
  return result;
}

}  // namespace seels
