#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "seels/rng.hpp"

namespace seels {

// Axis-aligned box [lower, upper].
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Eigen::VectorXd& x, double margin = 0.0) const {
    for (Eigen::Index i = 0; i < lower.size(); ++i)
      if (x[i] < lower[i] - margin || x[i] > upper[i] + margin) return false;
    return true;
  }
  Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
  Eigen::VectorXd sample(RngStream& rng) const {
    Eigen::VectorXd x(lower.size());
    for (Eigen::Index i = 0; i < lower.size(); ++i)
      x[i] = rng.uniform(lower[i], upper[i]);
    return x;
  }
};

// Ball obstacle in a projected space: keep-out set {x : ||p(x) - center|| < r}.
// The projection defaults to taking the leading state components.
struct Obstacle {
  Eigen::VectorXd center;
  double radius = 0.0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> project;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> project_jacobian;

  Eigen::VectorXd p_of(const Eigen::VectorXd& x) const {
    return project ? project(x) : x.head(center.size());
  }
  Eigen::MatrixXd jac_of(const Eigen::VectorXd& x) const {
    if (project_jacobian) return project_jacobian(x);
    Eigen::MatrixXd j =
        Eigen::MatrixXd::Zero(center.size(), x.size());
    j.leftCols(center.size()).setIdentity();
    return j;
  }
  // Signed distance of the projected point to the keep-out boundary.
  double distance(const Eigen::VectorXd& x) const {
    return (p_of(x) - center).norm() - radius;
  }
};

}  // namespace seels
