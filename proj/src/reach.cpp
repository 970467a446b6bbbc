#include "seels/reach.hpp"

#include <cmath>

namespace seels {

std::vector<Eigen::VectorXd> rollout(const FeatureNet& net,
                                     const NominalDynamics& h,
                                     const Eigen::VectorXd& x0,
                                     const std::vector<Eigen::VectorXd>& controls,
                                     const Scenario& scenario,
                                     int scenario_index) {
  const int n = static_cast<int>(x0.size());
  const int horizon = static_cast<int>(controls.size());
  std::vector<Eigen::VectorXd> states;
  states.reserve(horizon + 1);
  states.push_back(x0);
  Eigen::VectorXd x = x0;
  for (int k = 0; k < horizon; ++k) {
    std::vector<Eigen::VectorXd> phi = features(net, x, controls[k]);
    Eigen::VectorXd next = h(x, controls[k]);
    for (int i = 0; i < n; ++i) {
      next[i] += scenario.kappa[i].dot(phi[i]);
      if (scenario.eps.size() > 0) next[i] += scenario.eps(i, k);
    }
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > 1e9)
      throw NonFiniteState(scenario_index);
    states.push_back(next);
    x = next;
  }
  return states;
}

std::vector<Scenario> sample_scenarios(const std::vector<ConfidenceSet>& sets,
                                       const Eigen::VectorXd& noise_bound,
                                       int count, int horizon, RngStream& rng,
                                       SampleLaw law) {
  const int n = static_cast<int>(sets.size());
  std::vector<Scenario> out;
  out.reserve(count);
  for (int s = 0; s < count; ++s) {
    Scenario sc;
    sc.kappa.reserve(n);
    for (int i = 0; i < n; ++i) sc.kappa.push_back(sample_params(sets[i], rng, law));
    sc.eps.resize(n, horizon);
    for (int k = 0; k < horizon; ++k)
      for (int i = 0; i < n; ++i)
        sc.eps(i, k) = rng.uniform(-noise_bound[i], noise_bound[i]);
    out.push_back(std::move(sc));
  }
  return out;
}

void ellipsoid_bound(const Eigen::MatrixXd& cloud, const Eigen::VectorXd& mu,
                     Eigen::VectorXd& delta, Eigen::VectorXd& q_diag) {
  const int n = static_cast<int>(mu.size());
  delta = (cloud.colwise() - mu).cwiseAbs().rowwise().maxCoeff();
  int n_eff = 0;
  for (int i = 0; i < n; ++i)
    if (delta[i] > 0.0) ++n_eff;
  q_diag = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    q_diag[i] = n_eff * delta[i] * delta[i];
}

ReachTube compute_tube(const FeatureNet& net, const NominalDynamics& h,
                       const PosteriorState& post, const Eigen::VectorXd& x0,
                       const std::vector<Eigen::VectorXd>& controls,
                       const std::vector<Scenario>& scenarios) {
  const int n = static_cast<int>(x0.size());
  const int horizon = static_cast<int>(controls.size());
  const int m_count = static_cast<int>(scenarios.size());

  Scenario nominal;
  nominal.kappa = post.kappa;
  nominal.eps = Eigen::MatrixXd::Zero(n, horizon);
  std::vector<Eigen::VectorXd> mu = rollout(net, h, x0, controls, nominal);

  ReachTube tube;
  tube.mu = mu;
  tube.cloud.assign(horizon + 1, Eigen::MatrixXd(n, m_count));
  for (int s = 0; s < m_count; ++s) {
    std::vector<Eigen::VectorXd> traj =
        rollout(net, h, x0, controls, scenarios[s], s);
    for (int k = 0; k <= horizon; ++k) tube.cloud[k].col(s) = traj[k];
  }
  tube.delta.resize(horizon + 1);
  tube.q_diag.resize(horizon + 1);
  for (int k = 0; k <= horizon; ++k)
    ellipsoid_bound(tube.cloud[k], tube.mu[k], tube.delta[k], tube.q_diag[k]);
  return tube;
}

}  // namespace seels
