#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "seels/meta_loss.hpp"
#include "seels/model.hpp"

using namespace seels;

namespace {

NominalDynamics zero_dynamics(int n) {
  return [n](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::VectorXd::Zero(n).eval();
  };
}

// Random trajectories whose residuals are exactly linear in the features of
// the given net (plus optional noise): the model family contains the truth.
MetaDataset linear_feature_dataset(const FeatureNet& net,
                                   const std::vector<Eigen::VectorXd>& kappa_true,
                                   int num_traj, int steps, double noise,
                                   RngStream& rng) {
  const int n = net.dims();
  const int m_dim = net.input_dim - n;
  MetaDataset data;
  for (int j = 0; j < num_traj; ++j) {
    Trajectory traj;
    for (int t = 0; t < steps; ++t) {
      TransitionRecord rec;
      rec.x = rng.normal_vec(n);
      rec.u = rng.normal_vec(m_dim);
      std::vector<Eigen::VectorXd> phi = features(net, rec.x, rec.u);
      rec.x_next.resize(n);
      for (int i = 0; i < n; ++i)
        rec.x_next[i] = kappa_true[i].dot(phi[i]) + noise * rng.normal();
      traj.push_back(std::move(rec));
    }
    data.trajectories.push_back(std::move(traj));
    data.system_id.push_back(j);
  }
  return data;
}

}  // namespace

TEST_CASE("one rank-one update matches the hand-worked posterior") {
  LastLayerPrior prior = LastLayerPrior::identity(1, 2, 1.0);
  PosteriorState post = PosteriorState::from_prior(prior);
  Eigen::VectorXd phi(2);
  phi << 1, 0;
  posterior_update(post, {phi}, Eigen::VectorXd::Constant(1, 1.0));
  Eigen::MatrixXd expected(2, 2);
  expected << 2, 0, 0, 1;
  CHECK((post.lambda[0] - expected).norm() < 1e-12);
  CHECK(post.kappa[0][0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(post.kappa[0][1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(post.t == 1);
}

TEST_CASE("sequential updates equal the batch regression formula") {
  RngStream rng(21);
  FeatureNet net = FeatureNet::random(3, 6, 2, 4, 2, rng);
  LastLayerPrior prior = LastLayerPrior::identity(2, 4, 0.5);
  NominalDynamics h = zero_dynamics(2);

  Trajectory hist;
  for (int t = 0; t < 25; ++t) {
    TransitionRecord rec;
    rec.x = rng.normal_vec(2);
    rec.u = rng.normal_vec(1);
    rec.x_next = rng.normal_vec(2);
    hist.push_back(std::move(rec));
  }
  PosteriorState seq = PosteriorState::from_prior(prior);
  for (const auto& rec : hist) posterior_update(seq, net, rec, h);
  PosteriorState batch = posterior_batch(prior, net, hist, h);
  for (int i = 0; i < 2; ++i) {
    CHECK((seq.lambda[i] - batch.lambda[i]).norm() < 1e-8);
    CHECK((seq.kappa[i] - batch.kappa[i]).norm() < 1e-8);
  }
}

TEST_CASE("predictive mean and variance follow the closed form") {
  RngStream rng(5);
  FeatureNet net = FeatureNet::random(3, 5, 2, 3, 2, rng);
  LastLayerPrior prior = LastLayerPrior::identity(2, 3, 0.2);
  PosteriorState post = PosteriorState::from_prior(prior);
  Eigen::VectorXd x = rng.normal_vec(2), u = rng.normal_vec(1);
  std::vector<Eigen::VectorXd> phi = features(net, x, u);
  Predictive p = predictive(net, prior, post, x, u);
  for (int i = 0; i < 2; ++i) {
    CHECK(p.mean[i] == doctest::Approx(0.0).epsilon(1e-12));
    const double expected = 0.04 * (1.0 + phi[i].squaredNorm());
    CHECK(p.variance[i] == doctest::Approx(expected).epsilon(1e-10));
    CHECK(p.variance[i] >= 0.04);
  }
}

TEST_CASE("loss gradients agree with central finite differences") {
  RngStream rng(3);
  TrainableModel m = TrainableModel::init(
      2, 1, 4, 2, 3, Eigen::VectorXd::Constant(2, 0.3), rng);
  // Perturb away from the symmetric init so no gradient is trivially zero.
  for (auto& k : m.kappa0) k = 0.1 * rng.normal_vec(3);
  for (auto& a : m.v0_chol)
    for (int c = 0; c < 3; ++c)
      for (int r = c; r < 3; ++r) a(r, c) += 0.05 * rng.normal();

  MetaDataset data;
  {
    std::vector<Eigen::VectorXd> kt{0.4 * rng.normal_vec(3),
                                    0.4 * rng.normal_vec(3)};
    data = linear_feature_dataset(m.net, kt, 2, 4, 0.05, rng);
  }
  NominalDynamics h = zero_dynamics(2);
  RegConfig regs;
  regs.alpha_orth = 0.01;
  regs.alpha_beta = 0.02;
  std::vector<int> idx{0, 1};

  LossGrads g = meta_loss(m, data, idx, h, regs);
  Eigen::VectorXd theta = pack_params(m);
  Eigen::VectorXd grad = pack_grads(m, g);
  REQUIRE(theta.size() == grad.size());

  const double fd = 1e-6;
  double worst = 0.0;
  for (Eigen::Index p = 0; p < theta.size(); ++p) {
    TrainableModel mp = m;
    Eigen::VectorXd tp = theta;
    tp[p] += fd;
    unpack_params(mp, tp);
    const double lp = meta_loss(mp, data, idx, h, regs).loss;
    tp[p] = theta[p] - fd;
    unpack_params(mp, tp);
    const double lm = meta_loss(mp, data, idx, h, regs).loss;
    const double num = (lp - lm) / (2.0 * fd);
    const double rel =
        std::abs(num - grad[p]) / std::max(1.0, std::abs(num));
    worst = std::max(worst, rel);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("confidence-size regularizer hits its closed form at the identity") {
  RngStream rng(8);
  TrainableModel m = TrainableModel::init(
      2, 1, 4, 1, 3, Eigen::VectorXd::Constant(2, 1.0), rng);
  MetaDataset data;
  data.trajectories.push_back({});  // zero transitions: V_T = V_0 = I
  data.system_id.push_back(0);
  RegConfig regs;
  regs.alpha_beta = 0.7;
  LossGrads g = meta_loss(m, data, {0}, zero_dynamics(2), regs);
  // per dimension ||V_T||_F^2 ||V_0||_F^2 = d * d; n = 2 dimensions, d = 3.
  CHECK(g.reg_beta == doctest::Approx(0.7 * 2 * 9.0).epsilon(1e-12));
  CHECK(g.nll == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(g.loss == doctest::Approx(g.reg_beta).epsilon(1e-12));
}

TEST_CASE("orthogonality regularizer hits its closed form on scaled identities") {
  RngStream rng(8);
  TrainableModel m = TrainableModel::init(
      3, 0, 3, 1, 3, Eigen::VectorXd::Constant(3, 1.0), rng);
  REQUIRE(m.net.layers() == 1);
  m.net.w[0] = 2.0 * Eigen::MatrixXd::Identity(3, 3);
  for (auto& hd : m.net.head) hd.setZero();
  MetaDataset data;
  data.trajectories.push_back({});
  data.system_id.push_back(0);
  RegConfig regs;
  regs.alpha_orth = 0.5;
  LossGrads g = meta_loss(m, data, {0}, zero_dynamics(3), regs);
  // trunk: ||I - 4I||_F^2 = 9 * 3 = 27; each zero head: ||I||_F^2 = 3.
  CHECK(g.reg_orth == doctest::Approx(0.5 * (27.0 + 3 * 3.0)).epsilon(1e-12));
}

TEST_CASE("training fits a noiseless linear-in-features system") {
  RngStream rng(17);
  TrainableModel m = TrainableModel::init(
      2, 1, 6, 2, 4, Eigen::VectorXd::Constant(2, 0.01), rng);
  std::vector<Eigen::VectorXd> kappa_true{0.5 * rng.normal_vec(4),
                                          0.5 * rng.normal_vec(4)};
  FeatureNet data_net = m.net;  // truth lies inside the model family
  MetaDataset data =
      linear_feature_dataset(data_net, kappa_true, 12, 20, 0.0, rng);
  NominalDynamics h = zero_dynamics(2);
  OptConfig opt;
  opt.iterations = 900;
  opt.learning_rate = 5e-3;
  opt.batch_size = 6;
  TrainResult res = train(m, data, h, {}, opt);
  CHECK_FALSE(res.aborted_non_finite);

  // One-step predictive RMS over fresh points after adapting on a few.
  RngStream eval_rng(99);
  MetaDataset eval =
      linear_feature_dataset(data_net, kappa_true, 1, 60, 0.0, eval_rng);
  PosteriorState post = PosteriorState::from_prior(res.model.prior);
  double se = 0.0;
  int count = 0;
  for (int t = 0; t < 60; ++t) {
    const auto& rec = eval.trajectories[0][t];
    if (t >= 20) {
      Predictive p = predictive(res.model.net, res.model.prior, post, rec.x, rec.u);
      for (int i = 0; i < 2; ++i) {
        se += (p.mean[i] - rec.x_next[i]) * (p.mean[i] - rec.x_next[i]);
        ++count;
      }
    }
    posterior_update(post, res.model.net, rec, h);
  }
  CHECK(std::sqrt(se / count) < 1e-3);
}

TEST_CASE("zero-iteration training changes no prediction") {
  RngStream rng(4);
  TrainableModel m = TrainableModel::init(
      2, 1, 4, 2, 3, Eigen::VectorXd::Constant(2, 0.1), rng);
  for (auto& a : m.v0_chol) a *= 1.7;  // non-unit prior so rescaling is active
  MetaModel before = m.to_model();
  MetaDataset data;
  {
    std::vector<Eigen::VectorXd> kt{rng.normal_vec(3), rng.normal_vec(3)};
    data = linear_feature_dataset(m.net, kt, 2, 5, 0.1, rng);
  }
  OptConfig opt;
  opt.iterations = 0;
  TrainResult res = train(m, data, zero_dynamics(2), {}, opt);

  PosteriorState post_a = PosteriorState::from_prior(before.prior);
  PosteriorState post_b = PosteriorState::from_prior(res.model.prior);
  for (int t = 0; t < 5; ++t) {
    const auto& rec = data.trajectories[0][t];
    Predictive pa = predictive(before.net, before.prior, post_a, rec.x, rec.u);
    Predictive pb = predictive(res.model.net, res.model.prior, post_b, rec.x, rec.u);
    CHECK((pa.mean - pb.mean).norm() < 1e-9);
    CHECK((pa.variance - pb.variance).norm() < 1e-9);
    posterior_update(post_a, before.net, rec, zero_dynamics(2));
    posterior_update(post_b, res.model.net, rec, zero_dynamics(2));
  }
  // And the recalibration pinned the top prior-precision eigenvalue at 1.
  for (const auto& l0 : res.model.prior.lambda0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l0);
    CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(1.0).epsilon(1e-9));
  }
}
