#include "seels/model.hpp"

#include <stdexcept>

#include "seels/numerics.hpp"

namespace seels {

LastLayerPrior LastLayerPrior::identity(int dims, int d, double sigma) {
  LastLayerPrior p;
  for (int i = 0; i < dims; ++i) {
    p.kappa0.push_back(Eigen::VectorXd::Zero(d));
    p.lambda0.push_back(Eigen::MatrixXd::Identity(d, d));
  }
  p.sigma = Eigen::VectorXd::Constant(dims, sigma);
  return p;
}

PosteriorState PosteriorState::from_prior(const LastLayerPrior& prior) {
  PosteriorState s;
  s.kappa = prior.kappa0;
  s.lambda = prior.lambda0;
  s.t = 0;
  return s;
}

void posterior_update(PosteriorState& state,
                      const std::vector<Eigen::VectorXd>& phi,
                      const Eigen::VectorXd& residual) {
  const int n = static_cast<int>(state.kappa.size());
  if (static_cast<int>(phi.size()) != n || residual.size() != n)
    throw std::invalid_argument("posterior_update: dimension mismatch");
  for (int i = 0; i < n; ++i) {
    // Lambda' = Lambda + phi phi^T;  Lambda' kappa' = Lambda kappa + phi y.
    Eigen::VectorXd rhs = state.lambda[i] * state.kappa[i] + phi[i] * residual[i];
    state.lambda[i] += phi[i] * phi[i].transpose();
    state.kappa[i] = solve_spd(state.lambda[i], rhs);
  }
  state.t += 1;
}

void posterior_update(PosteriorState& state, const FeatureNet& net,
                      const TransitionRecord& rec, const NominalDynamics& h) {
  std::vector<Eigen::VectorXd> phi = features(net, rec.x, rec.u);
  Eigen::VectorXd residual = rec.x_next - h(rec.x, rec.u);
  posterior_update(state, phi, residual);
}

PosteriorState posterior_batch(const LastLayerPrior& prior, const FeatureNet& net,
                               const Trajectory& history,
                               const NominalDynamics& h) {
  const int n = prior.dims();
  const int d = static_cast<int>(prior.kappa0[0].size());
  const int t = static_cast<int>(history.size());
  PosteriorState out;
  out.t = t;
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd big_phi(t, d);
    Eigen::VectorXd g(t);
    for (int k = 0; k < t; ++k) {
      const auto& rec = history[k];
      big_phi.row(k) = features(net, rec.x, rec.u)[i].transpose();
      g[k] = rec.x_next[i] - h(rec.x, rec.u)[i];
    }
    Eigen::MatrixXd lambda = big_phi.transpose() * big_phi + prior.lambda0[i];
    Eigen::VectorXd rhs =
        big_phi.transpose() * g + prior.lambda0[i] * prior.kappa0[i];
    out.lambda.push_back(lambda);
    out.kappa.push_back(solve_spd(lambda, rhs));
  }
  return out;
}

Predictive predictive(const FeatureNet& net, const LastLayerPrior& prior,
                      const PosteriorState& state, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& u) {
  std::vector<Eigen::VectorXd> phi = features(net, x, u);
  const int n = static_cast<int>(state.kappa.size());
  if (phi.size() != state.kappa.size())
    throw std::invalid_argument("predictive: dimension mismatch");
  Predictive p;
  p.mean.resize(n);
  p.variance.resize(n);
  for (int i = 0; i < n; ++i) {
    p.mean[i] = state.kappa[i].dot(phi[i]);
    double q = phi[i].dot(solve_spd(state.lambda[i], phi[i]));
    double s2 = prior.sigma[i] * prior.sigma[i];
    p.variance[i] = (1.0 + q) * s2;
  }
  return p;
}

}  // namespace seels
