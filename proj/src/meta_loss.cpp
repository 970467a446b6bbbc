#include "seels/meta_loss.hpp"

#include <cmath>

#include "seels/numerics.hpp"

namespace seels {

LastLayerPrior TrainableModel::prior() const {
  LastLayerPrior p;
  p.sigma = sigma;
  for (int i = 0; i < dims(); ++i) {
    p.kappa0.push_back(kappa0[i]);
    Eigen::MatrixXd v0 = v0_chol[i] * v0_chol[i].transpose();
    // Lambda0 = V0^{-1} via triangular solves on the factor.
    const auto d = v0.rows();
    Eigen::MatrixXd a_inv = v0_chol[i]
                                .triangularView<Eigen::Lower>()
                                .solve(Eigen::MatrixXd::Identity(d, d));
    p.lambda0.push_back(a_inv.transpose() * a_inv);
  }
  return p;
}

MetaModel TrainableModel::to_model() const {
  MetaModel m;
  m.net = net;
  m.prior = prior();
  return m;
}

TrainableModel TrainableModel::init(int state_dim, int control_dim, int width,
                                    int layers, int feature_dim,
                                    const Eigen::VectorXd& sigma,
                                    RngStream& rng) {
  TrainableModel m;
  m.net = FeatureNet::random(state_dim + control_dim, width, layers,
                             feature_dim, state_dim, rng);
  m.sigma = sigma;
  for (int i = 0; i < state_dim; ++i) {
    m.kappa0.push_back(Eigen::VectorXd::Zero(feature_dim));
    m.v0_chol.push_back(
        Eigen::MatrixXd::Identity(feature_dim, feature_dim));
  }
  return m;
}

namespace {

struct StepTape {
  Eigen::VectorXd phi;
  Eigen::VectorXd a;   // V_t phi
  double s = 0.0;      // 1 + phi^T a
  double r = 0.0;      // y - kappa_t^T phi
  Eigen::VectorXd kappa;  // state before the update
  Eigen::MatrixXd v;      // state before the update
};

double sqr(double x) { return x * x; }

}  // namespace

LossGrads meta_loss(const TrainableModel& m, const MetaDataset& data,
                    const std::vector<int>& traj_indices,
                    const NominalDynamics& h, const RegConfig& regs) {
  const int n = m.dims();
  const int d = m.net.feature_dim;
  const int batch = static_cast<int>(traj_indices.size());
  if (batch == 0) throw std::invalid_argument("meta_loss: empty dataset");

  LossGrads g;
  g.net = NetGrads::zeros_like(m.net);
  for (int i = 0; i < n; ++i) {
    g.kappa0.push_back(Eigen::VectorXd::Zero(d));
    g.v0_chol.push_back(Eigen::MatrixXd::Zero(d, d));
  }

  std::vector<Eigen::MatrixXd> v0(n);
  std::vector<double> v0_fro2(n);
  std::vector<Eigen::MatrixXd> v0_bar(n, Eigen::MatrixXd::Zero(d, d));
  for (int i = 0; i < n; ++i) {
    v0[i] = m.v0_chol[i] * m.v0_chol[i].transpose();
    v0_fro2[i] = v0[i].squaredNorm();
  }

  for (int tj : traj_indices) {
    const Trajectory& traj = data.trajectories.at(tj);
    const int T = static_cast<int>(traj.size());

    std::vector<NetActivations> acts(T);
    std::vector<std::vector<Eigen::VectorXd>> phis(T);
    Eigen::MatrixXd resid(n, T);
    for (int t = 0; t < T; ++t) {
      Eigen::VectorXd z(traj[t].x.size() + traj[t].u.size());
      z << traj[t].x, traj[t].u;
      acts[t] = trunk_forward(m.net, z);
      const Eigen::VectorXd& top = acts[t].post.back();
      phis[t].resize(n);
      for (int i = 0; i < n; ++i) phis[t][i] = m.net.head[i] * top;
      resid.col(t) = traj[t].x_next - h(traj[t].x, traj[t].u);
    }

    // phi adjoints per step, summed over dimensions before the trunk pass.
    std::vector<std::vector<Eigen::VectorXd>> phi_bar(
        T, std::vector<Eigen::VectorXd>(n, Eigen::VectorXd::Zero(d)));

    for (int i = 0; i < n; ++i) {
      const double s2 = sqr(m.sigma[i]);
      Eigen::VectorXd kappa = m.kappa0[i];
      Eigen::MatrixXd v = v0[i];
      std::vector<StepTape> tape(T);
      for (int t = 0; t < T; ++t) {
        StepTape& tp = tape[t];
        tp.phi = phis[t][i];
        tp.kappa = kappa;
        tp.v = v;
        tp.a = v * tp.phi;
        tp.s = 1.0 + tp.phi.dot(tp.a);
        tp.r = resid(i, t) - kappa.dot(tp.phi);
        g.nll += 0.5 * std::log(2.0 * M_PI * s2 * tp.s) +
                 0.5 * sqr(tp.r) / (s2 * tp.s);
        // posterior update
        kappa = tp.kappa + tp.a * (tp.r / tp.s);
        v = tp.v - (tp.a * tp.a.transpose()) / tp.s;
      }

      // beta regularizer, averaged over the minibatch: per-trajectory
      // posterior at its final step.
      const double fro_t = v.squaredNorm();
      g.reg_beta += regs.alpha_beta / batch * fro_t * v0_fro2[i];

      Eigen::VectorXd kb = Eigen::VectorXd::Zero(d);
      Eigen::MatrixXd vb = Eigen::MatrixXd::Zero(d, d);
      if (regs.alpha_beta != 0.0) {
        vb += (2.0 * regs.alpha_beta / batch * v0_fro2[i]) * v;
        v0_bar[i] += (regs.alpha_beta / batch * fro_t * 2.0) * v0[i];
      }

      for (int t = T - 1; t >= 0; --t) {
        const StepTape& tp = tape[t];
        Eigen::VectorXd ab = Eigen::VectorXd::Zero(d);
        double sb = 0.0, rb = 0.0;
        // V' = V - a a^T / s
        ab += -((vb + vb.transpose()) * tp.a) / tp.s;
        sb += tp.a.dot(vb * tp.a) / sqr(tp.s);
        // kappa' = kappa + a r / s
        const double kba = kb.dot(tp.a);
        ab += kb * (tp.r / tp.s);
        rb += kba / tp.s;
        sb += -kba * tp.r / sqr(tp.s);
        // loss term
        sb += 0.5 / tp.s - 0.5 * sqr(tp.r) / (s2 * sqr(tp.s));
        rb += tp.r / (s2 * tp.s);
        // r = y - kappa^T phi
        const double mb = -rb;
        kb += mb * tp.phi;
        phi_bar[t][i] += mb * tp.kappa;
        // s = 1 + phi^T a
        phi_bar[t][i] += sb * tp.a;
        ab += sb * tp.phi;
        // a = V phi
        vb += ab * tp.phi.transpose();
        phi_bar[t][i] += tp.v * ab;  // V symmetric
      }
      g.kappa0[i] += kb;
      v0_bar[i] += vb;
    }

    for (int t = 0; t < T; ++t)
      net_backward(m.net, acts[t], phi_bar[t], g.net, nullptr);
  }

  // Orthogonality regularizer over every distinct weight matrix.
  auto add_orth = [&](const Eigen::MatrixXd& w, Eigen::MatrixXd& grad) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Identity(w.cols(), w.cols()) -
                        w.transpose() * w;
    g.reg_orth += regs.alpha_orth * e.squaredNorm();
    grad += -4.0 * regs.alpha_orth * w * e;
  };
  if (regs.alpha_orth != 0.0) {
    for (int l = 0; l < m.net.layers(); ++l) add_orth(m.net.w[l], g.net.w[l]);
    for (int i = 0; i < n; ++i) add_orth(m.net.head[i], g.net.head[i]);
  }

  // V0 = A A^T; dL/dA = (V0_bar + V0_bar^T) A restricted to the lower triangle.
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd ga = (v0_bar[i] + v0_bar[i].transpose()) * m.v0_chol[i];
    g.v0_chol[i] = ga.triangularView<Eigen::Lower>();
  }

  g.loss = g.nll + g.reg_orth + g.reg_beta;
  if (!std::isfinite(g.loss))
    throw NonFiniteLoss("meta_loss: loss is not finite");
  return g;
}

Eigen::VectorXd pack_params(const TrainableModel& m) {
  std::vector<double> v;
  auto push_mat = [&](const Eigen::MatrixXd& a) {
    v.insert(v.end(), a.data(), a.data() + a.size());
  };
  for (const auto& w : m.net.w) push_mat(w);
  for (const auto& b : m.net.b) v.insert(v.end(), b.data(), b.data() + b.size());
  for (const auto& hd : m.net.head) push_mat(hd);
  for (const auto& k : m.kappa0) v.insert(v.end(), k.data(), k.data() + k.size());
  for (const auto& a : m.v0_chol)
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      for (Eigen::Index r = c; r < a.rows(); ++r) v.push_back(a(r, c));
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void unpack_params(TrainableModel& m, const Eigen::VectorXd& v) {
  Eigen::Index p = 0;
  auto take_mat = [&](Eigen::MatrixXd& a) {
    std::copy(v.data() + p, v.data() + p + a.size(), a.data());
    p += a.size();
  };
  for (auto& w : m.net.w) take_mat(w);
  for (auto& b : m.net.b) {
    std::copy(v.data() + p, v.data() + p + b.size(), b.data());
    p += b.size();
  }
  for (auto& hd : m.net.head) take_mat(hd);
  for (auto& k : m.kappa0) {
    std::copy(v.data() + p, v.data() + p + k.size(), k.data());
    p += k.size();
  }
  for (auto& a : m.v0_chol)
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      for (Eigen::Index r = c; r < a.rows(); ++r) a(r, c) = v[p++];
}

Eigen::VectorXd pack_grads(const TrainableModel& m, const LossGrads& g) {
  std::vector<double> v;
  auto push_mat = [&](const Eigen::MatrixXd& a) {
    v.insert(v.end(), a.data(), a.data() + a.size());
  };
  for (const auto& w : g.net.w) push_mat(w);
  for (const auto& b : g.net.b) v.insert(v.end(), b.data(), b.data() + b.size());
  for (const auto& hd : g.net.head) push_mat(hd);
  for (const auto& k : g.kappa0) v.insert(v.end(), k.data(), k.data() + k.size());
  for (size_t i = 0; i < g.v0_chol.size(); ++i) {
    const auto& a = g.v0_chol[i];
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      for (Eigen::Index r = c; r < a.rows(); ++r) v.push_back(a(r, c));
  }
  (void)m;
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace seels
