#include "seels/confidence.hpp"

#include <cmath>
#include <sstream>

#include "seels/numerics.hpp"

namespace seels {

double beta_radius(const Eigen::MatrixXd& lambda0,
                   const Eigen::MatrixXd& lambda_t, double sigma,
                   double delta_i) {
  if (!(delta_i > 0.0 && delta_i < 1.0))
    throw DomainError("beta_radius: delta_i must be in (0, 1)");
  const int d = static_cast<int>(lambda0.rows());
  // log of det(Lambda_t)^{1/2} / det(Lambda_0)^{1/2}, via Cholesky pivots.
  const double log_det_ratio =
      0.5 * (log_det_spd(lambda_t) - log_det_spd(lambda0));
  const double info_term =
      std::sqrt(2.0 * (std::log(1.0 / delta_i) + log_det_ratio));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es0(lambda0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> est(lambda_t);
  const double lam_max0 = es0.eigenvalues().maxCoeff();
  const double lam_min_t = est.eigenvalues().minCoeff();
  if (!(lam_min_t > 0.0))
    throw NotPositiveDefinite("beta_radius: posterior precision not PD");
  const double eig_term =
      std::sqrt(lam_max0 / lam_min_t * chi2_quantile(d, 1.0 - delta_i));
  return sigma * (info_term + eig_term);
}

std::vector<ConfidenceSet> confidence_sets(const LastLayerPrior& prior,
                                           const PosteriorState& post,
                                           double delta) {
  const int n = prior.dims();
  const double delta_i = delta / (2.0 * n);
  std::vector<ConfidenceSet> sets;
  sets.reserve(n);
  for (int i = 0; i < n; ++i) {
    ConfidenceSet c;
    c.center = post.kappa[i];
    c.lambda = post.lambda[i];
    c.beta = beta_radius(prior.lambda0[i], post.lambda[i], prior.sigma[i],
                         delta_i);
    c.dim_index = i;
    c.delta_i = delta_i;
    sets.push_back(std::move(c));
  }
  return sets;
}

bool membership(const ConfidenceSet& set, const Eigen::VectorXd& kappa) {
  Eigen::VectorXd diff = kappa - set.center;
  const double q = diff.dot(set.lambda * diff);
  // Small relative slack absorbs round-off for points generated on the shell.
  const double b2 = set.beta * set.beta;
  return q <= b2 + 1e-12 * std::max(1.0, b2);
}

Eigen::VectorXd sample_params(const ConfidenceSet& set, RngStream& rng,
                              SampleLaw law) {
  const int d = static_cast<int>(set.center.size());
  Eigen::VectorXd u = rng.sphere(d);
  double radius = std::pow(rng.uniform(), 1.0 / d);
  if (law == SampleLaw::BoundaryBiased && rng.uniform() < 0.5) radius = 1.0;
  // ||kappa - center||_Lambda <= beta  <=>  ||L^T (kappa - center)|| <= beta,
  // Lambda = L L^T.
  Eigen::MatrixXd l = cholesky(set.lambda);
  Eigen::VectorXd y = set.beta * radius * u;
  Eigen::VectorXd offset =
      l.transpose().triangularView<Eigen::Upper>().solve(y);
  return set.center + offset;
}

Eigen::VectorXd noise_bounds(const Eigen::VectorXd& sigma) {
  const double q = chi2_quantile(1, 0.95);
  return (sigma.array() * std::sqrt(q)).matrix();
}

Eigen::VectorXd sample_noise(const Eigen::VectorXd& sigma, RngStream& rng) {
  Eigen::VectorXd b = noise_bounds(sigma);
  Eigen::VectorXd eps(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma[i] == 0.0) {
      eps[i] = 0.0;
      continue;
    }
    double e = sigma[i] * rng.normal();
    while (std::abs(e) > b[i]) e = sigma[i] * rng.normal();
    eps[i] = e;
  }
  return eps;
}

SyntheticLinearSystem::SyntheticLinearSystem(int d_, double sigma,
                                             RngStream& rng)
    : d(d_) {
  prior.kappa0.push_back(rng.normal_vec(d) * 0.1);
  // Random SPD prior precision with eigenvalues in [0.5, 1].
  Eigen::MatrixXd q(d, d);
  for (int i = 0; i < d * d; ++i) q.data()[i] = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
  Eigen::MatrixXd orth = qr.householderQ();
  Eigen::VectorXd eigs(d);
  for (int i = 0; i < d; ++i) eigs[i] = 0.5 + 0.5 * rng.uniform();
  prior.lambda0.push_back(orth * eigs.asDiagonal() * orth.transpose());
  prior.sigma = Eigen::VectorXd::Constant(1, sigma);
}

Eigen::VectorXd SyntheticLinearSystem::draw_features(RngStream& rng) const {
  return rng.sphere(d);
}

std::string CoverageReport::to_json() const {
  std::ostringstream os;
  os << "{\"trials\":" << trials << ",\"horizon\":" << horizon
     << ",\"delta_i\":" << delta_i << ",\"coverage\":[";
  for (size_t i = 0; i < coverage.size(); ++i)
    os << (i ? "," : "") << coverage[i];
  os << "],\"ci_lower\":[";
  for (size_t i = 0; i < ci_lower.size(); ++i)
    os << (i ? "," : "") << ci_lower[i];
  os << "]}";
  return os.str();
}

CoverageReport calibration_audit(const SyntheticLinearSystem& sys, int trials,
                                 int horizon, double delta_i, RngStream& rng) {
  const double sigma = sys.prior.sigma[0];
  int inside_all = 0;
  for (int trial = 0; trial < trials; ++trial) {
    RngStream trial_rng = rng.substream(static_cast<std::uint64_t>(trial));
    // kappa* ~ N(kappa0, sigma^2 Lambda0^{-1})
    Eigen::MatrixXd l0 = cholesky(sys.prior.lambda0[0]);
    Eigen::VectorXd w = trial_rng.normal_vec(sys.d);
    Eigen::VectorXd kappa_star =
        sys.prior.kappa0[0] +
        sigma * l0.transpose().triangularView<Eigen::Upper>().solve(w);

    PosteriorState post = PosteriorState::from_prior(sys.prior);
    Eigen::VectorXd sig1 = Eigen::VectorXd::Constant(1, sigma);
    bool ok = true;
    for (int t = 0; t <= horizon; ++t) {
      ConfidenceSet c;
      c.center = post.kappa[0];
      c.lambda = post.lambda[0];
      c.beta = beta_radius(sys.prior.lambda0[0], post.lambda[0], sigma, delta_i);
      c.delta_i = delta_i;
      if (!membership(c, kappa_star)) {
        ok = false;
        break;
      }
      if (t == horizon) break;
      Eigen::VectorXd phi = sys.draw_features(trial_rng);
      const double eps = sample_noise(sig1, trial_rng)[0];
      const double y = kappa_star.dot(phi) + eps;
      posterior_update(post, {phi}, Eigen::VectorXd::Constant(1, y));
    }
    if (ok) ++inside_all;
  }
  CoverageReport rep;
  rep.trials = trials;
  rep.horizon = horizon;
  rep.delta_i = delta_i;
  const double p = static_cast<double>(inside_all) / trials;
  rep.coverage.push_back(p);
  rep.ci_lower.push_back(p - 1.96 * std::sqrt(p * (1.0 - p) / trials));
  return rep;
}

}  // namespace seels
