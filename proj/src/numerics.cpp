#include "seels/numerics.hpp"

#include <cmath>

namespace seels {

Eigen::MatrixXd cholesky(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  if (n != a.cols()) throw DomainError("cholesky: matrix not square");
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d))
      throw NotPositiveDefinite("cholesky: pivot " + std::to_string(j) +
                                " is not positive");
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = a(i, j) - l.row(i).head(j).dot(l.row(j).head(j));
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  if (a.rows() != b.size()) throw DomainError("solve_spd: dimension mismatch");
  Eigen::MatrixXd l = cholesky(a);
  Eigen::VectorXd y =
      l.triangularView<Eigen::Lower>().solve(b);
  return l.transpose().triangularView<Eigen::Upper>().solve(y);
}

double log_det_spd(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd l = cholesky(a);
  return 2.0 * l.diagonal().array().log().sum();
}

namespace {

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) = 1 - P(a, x), valid for x >= a + 1
// (modified Lentz).
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw DomainError("gamma_p: invalid arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double chi2_cdf(int d, double x) {
  if (d < 1) throw DomainError("chi2_cdf: degrees of freedom must be >= 1");
  if (x <= 0.0) return 0.0;
  return gamma_p(0.5 * d, 0.5 * x);
}

double chi2_quantile(int d, double p) {
  if (d < 1) throw DomainError("chi2_quantile: degrees of freedom must be >= 1");
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("chi2_quantile: p must be in (0, 1)");

  // Bracket the root, then bisect with Newton refinement.
  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(d));
  while (chi2_cdf(d, hi) < p) hi *= 2.0;

  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double f = chi2_cdf(d, x) - p;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    // chi2 pdf at x.
    double logpdf = -0.5 * x + (0.5 * d - 1.0) * std::log(x) -
                    0.5 * d * std::log(2.0) - std::lgamma(0.5 * d);
    double pdf = std::exp(logpdf);
    double step = pdf > 0.0 ? f / pdf : 0.0;
    double xn = x - step;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (std::abs(xn - x) < 1e-13 * std::max(1.0, x)) {
      x = xn;
      break;
    }
    x = xn;
  }
  return x;
}

}  // namespace seels
