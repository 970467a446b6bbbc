#pragma once

#include <vector>

#include <Eigen/Dense>

#include "seels/rng.hpp"

namespace seels {

// Shared tanh trunk with one linear head per state dimension:
//   phi_i(z) = H_i * tanh(W_L * tanh(... tanh(W_1 z + b_1) ...) + b_L).
// Trunk layers carry biases; heads are bias-free.
struct FeatureNet {
  int input_dim = 0;   // n + m
  int feature_dim = 0; // d, per dimension
  std::vector<Eigen::MatrixXd> w;  // trunk weights, layer l: width_l x width_{l-1}
  std::vector<Eigen::VectorXd> b;  // trunk biases
  std::vector<Eigen::MatrixXd> head;  // one d x width_L matrix per state dim

  int layers() const { return static_cast<int>(w.size()); }
  int dims() const { return static_cast<int>(head.size()); }

  static FeatureNet random(int input_dim, int width, int layers, int feature_dim,
                           int dims, RngStream& rng, double scale = 0.3);
};

// Trunk activations kept for backprop: pre[l] = W_l z_{l-1} + b_l,
// post[l] = tanh(pre[l]), post.back() feeds the heads.
struct NetActivations {
  Eigen::VectorXd input;
  std::vector<Eigen::VectorXd> pre;
  std::vector<Eigen::VectorXd> post;
};

struct NetGrads {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
  std::vector<Eigen::MatrixXd> head;

  static NetGrads zeros_like(const FeatureNet& net);
  void add_scaled(const NetGrads& other, double s);
};

// Forward pass through the trunk only.
NetActivations trunk_forward(const FeatureNet& net, const Eigen::VectorXd& z);

// phi_i(z) for every dimension i.
std::vector<Eigen::VectorXd> features(const FeatureNet& net,
                                      const Eigen::VectorXd& z);
std::vector<Eigen::VectorXd> features(const FeatureNet& net,
                                      const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& u);

// Accumulates parameter gradients (and optionally the input adjoint) given
// the adjoints of every phi_i at one evaluation point.
void net_backward(const FeatureNet& net, const NetActivations& act,
                  const std::vector<Eigen::VectorXd>& phi_bar, NetGrads& grads,
                  Eigen::VectorXd* z_bar = nullptr);

// d phi_i / d z, one d x input_dim Jacobian per dimension.
std::vector<Eigen::MatrixXd> feature_jacobian(const FeatureNet& net,
                                              const Eigen::VectorXd& z);
std::vector<Eigen::MatrixXd> feature_jacobian(const FeatureNet& net,
                                              const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& u);

}  // namespace seels
