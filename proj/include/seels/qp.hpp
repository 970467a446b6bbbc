#pragma once

#include <string>

#include <Eigen/Dense>

namespace seels {

// min 0.5 x^T P x + q^T x   s.t.  l <= A x <= u
// Equality rows are expressed as l_j == u_j; +/-infinity bounds allowed.
struct QpProblem {
  Eigen::MatrixXd p;
  Eigen::VectorXd q;
  Eigen::MatrixXd a;
  Eigen::VectorXd l;
  Eigen::VectorXd u;

  int num_vars() const { return static_cast<int>(q.size()); }
  int num_cons() const { return static_cast<int>(l.size()); }
};

enum class QpStatus { Solved, PrimalInfeasible, DualInfeasible, MaxIters };

const char* qp_status_name(QpStatus s);

struct QpSolution {
  QpStatus status = QpStatus::MaxIters;
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // multipliers with P x + q + A^T y = 0 at optimum
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
};

struct QpConfig {
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  double eps_infeas = 1e-7;
  int max_iter = 20000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;  // over-relaxation
  bool polish = true;
};

// Dense operator-splitting (ADMM) solver with over-relaxation, adaptive
// penalty, infeasibility certificates, and an active-set polish step.
QpSolution solve_qp(const QpProblem& prob, const QpConfig& cfg = {});

// Round-trip serialization for debugging failed subproblems.
std::string qp_to_json(const QpProblem& prob);
QpProblem qp_from_json(const std::string& text);
void save_qp(const QpProblem& prob, const std::string& path);
QpProblem load_qp(const std::string& path);

}  // namespace seels
