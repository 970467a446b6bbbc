#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace seels {

struct NotPositiveDefinite : std::runtime_error {
  explicit NotPositiveDefinite(const std::string& what)
      : std::runtime_error(what) {}
};

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
// Throws NotPositiveDefinite if a pivot is not strictly positive.
Eigen::MatrixXd cholesky(const Eigen::MatrixXd& a);

// Solves A x = b for symmetric positive definite A.
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

// log det(A) for SPD A, computed as twice the sum of log Cholesky pivots.
double log_det_spd(const Eigen::MatrixXd& a);

// Regularized lower incomplete gamma function P(a, x).
double gamma_p(double a, double x);

// chi-squared CDF with d degrees of freedom.
double chi2_cdf(int d, double x);

// p-th quantile of the chi-squared distribution with d degrees of freedom,
// found by inverting the regularized incomplete gamma CDF.
double chi2_quantile(int d, double p);

}  // namespace seels
