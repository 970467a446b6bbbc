#include "seels/net.hpp"

#include <cmath>
#include <stdexcept>

namespace seels {

FeatureNet FeatureNet::random(int input_dim, int width, int layers,
                              int feature_dim, int dims, RngStream& rng,
                              double scale) {
  FeatureNet net;
  net.input_dim = input_dim;
  net.feature_dim = feature_dim;
  int in = input_dim;
  for (int l = 0; l < layers; ++l) {
    Eigen::MatrixXd wl(width, in);
    for (int i = 0; i < wl.size(); ++i)
      wl.data()[i] = scale * rng.normal() / std::sqrt(static_cast<double>(in));
    net.w.push_back(wl);
    net.b.push_back(Eigen::VectorXd::Zero(width));
    in = width;
  }
  for (int i = 0; i < dims; ++i) {
    Eigen::MatrixXd h(feature_dim, in);
    for (int k = 0; k < h.size(); ++k)
      h.data()[k] = scale * rng.normal() / std::sqrt(static_cast<double>(in));
    net.head.push_back(h);
  }
  return net;
}

NetGrads NetGrads::zeros_like(const FeatureNet& net) {
  NetGrads g;
  for (const auto& wl : net.w) g.w.push_back(Eigen::MatrixXd::Zero(wl.rows(), wl.cols()));
  for (const auto& bl : net.b) g.b.push_back(Eigen::VectorXd::Zero(bl.size()));
  for (const auto& h : net.head) g.head.push_back(Eigen::MatrixXd::Zero(h.rows(), h.cols()));
  return g;
}

void NetGrads::add_scaled(const NetGrads& other, double s) {
  for (size_t l = 0; l < w.size(); ++l) w[l] += s * other.w[l];
  for (size_t l = 0; l < b.size(); ++l) b[l] += s * other.b[l];
  for (size_t i = 0; i < head.size(); ++i) head[i] += s * other.head[i];
}

NetActivations trunk_forward(const FeatureNet& net, const Eigen::VectorXd& z) {
  if (z.size() != net.input_dim)
    throw std::invalid_argument("trunk_forward: input dimension mismatch");
  NetActivations act;
  act.input = z;
  Eigen::VectorXd cur = z;
  for (int l = 0; l < net.layers(); ++l) {
    Eigen::VectorXd pre = net.w[l] * cur + net.b[l];
    act.pre.push_back(pre);
    cur = pre.array().tanh();
    act.post.push_back(cur);
  }
  return act;
}

std::vector<Eigen::VectorXd> features(const FeatureNet& net,
                                      const Eigen::VectorXd& z) {
  NetActivations act = trunk_forward(net, z);
  const Eigen::VectorXd& top = net.layers() > 0 ? act.post.back() : act.input;
  std::vector<Eigen::VectorXd> phi;
  phi.reserve(net.head.size());
  for (const auto& h : net.head) phi.push_back(h * top);
  return phi;
}

std::vector<Eigen::VectorXd> features(const FeatureNet& net,
                                      const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& u) {
  Eigen::VectorXd z(x.size() + u.size());
  z << x, u;
  return features(net, z);
}

void net_backward(const FeatureNet& net, const NetActivations& act,
                  const std::vector<Eigen::VectorXd>& phi_bar, NetGrads& grads,
                  Eigen::VectorXd* z_bar) {
  const int L = net.layers();
  const Eigen::VectorXd& top = L > 0 ? act.post.back() : act.input;
  Eigen::VectorXd top_bar = Eigen::VectorXd::Zero(top.size());
  for (int i = 0; i < net.dims(); ++i) {
    grads.head[i] += phi_bar[i] * top.transpose();
    top_bar += net.head[i].transpose() * phi_bar[i];
  }
  Eigen::VectorXd cur_bar = top_bar;
  for (int l = L - 1; l >= 0; --l) {
    // through tanh: d tanh = 1 - tanh^2
    Eigen::VectorXd pre_bar =
        cur_bar.array() * (1.0 - act.post[l].array().square());
    const Eigen::VectorXd& below = l > 0 ? act.post[l - 1] : act.input;
    grads.w[l] += pre_bar * below.transpose();
    grads.b[l] += pre_bar;
    cur_bar = net.w[l].transpose() * pre_bar;
  }
  if (z_bar) *z_bar += cur_bar;
}

std::vector<Eigen::MatrixXd> feature_jacobian(const FeatureNet& net,
                                              const Eigen::VectorXd& z) {
  NetActivations act = trunk_forward(net, z);
  // J_trunk = prod_l diag(1 - tanh^2(pre_l)) W_l
  Eigen::MatrixXd j = Eigen::MatrixXd::Identity(net.input_dim, net.input_dim);
  for (int l = 0; l < net.layers(); ++l) {
    Eigen::MatrixXd wj = net.w[l] * j;
    j = (1.0 - act.post[l].array().square()).matrix().asDiagonal() * wj;
  }
  std::vector<Eigen::MatrixXd> out;
  out.reserve(net.head.size());
  for (const auto& h : net.head) out.push_back(h * j);
  return out;
}

std::vector<Eigen::MatrixXd> feature_jacobian(const FeatureNet& net,
                                              const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& u) {
  Eigen::VectorXd z(x.size() + u.size());
  z << x, u;
  return feature_jacobian(net, z);
}

}  // namespace seels
