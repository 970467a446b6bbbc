#include "seels/qp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

namespace seels {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

// Factor of the quasi-definite KKT matrix [P + sigma I, A^T; A, -diag(1/rho)].
Eigen::PartialPivLU<Eigen::MatrixXd> factor_kkt(const QpProblem& prob,
                                                double sigma,
                                                const Eigen::VectorXd& rho_vec) {
  const int n = prob.num_vars();
  const int m = prob.num_cons();
  Eigen::MatrixXd kkt(n + m, n + m);
  kkt.topLeftCorner(n, n) =
      prob.p + sigma * Eigen::MatrixXd::Identity(n, n);
  kkt.topRightCorner(n, m) = prob.a.transpose();
  kkt.bottomLeftCorner(m, n) = prob.a;
  kkt.bottomRightCorner(m, m) =
      (-rho_vec.cwiseInverse()).asDiagonal().toDenseMatrix();
  return Eigen::PartialPivLU<Eigen::MatrixXd>(kkt);
}

// Equality-constrained re-solve on the active set; returns false if the
// active-set KKT system is singular or the result is worse.
bool polish_solution(const QpProblem& prob, const QpConfig& cfg,
                     QpSolution& sol) {
  const int n = prob.num_vars();
  const int m = prob.num_cons();
  std::vector<int> active;
  std::vector<double> bound;
  const Eigen::VectorXd ax = prob.a * sol.x;
  for (int j = 0; j < m; ++j) {
    const bool at_lower =
        std::isfinite(prob.l[j]) &&
        (sol.y[j] < -1e-9 || ax[j] - prob.l[j] < 1e-9 * (1.0 + std::abs(prob.l[j])));
    const bool at_upper =
        std::isfinite(prob.u[j]) &&
        (sol.y[j] > 1e-9 || prob.u[j] - ax[j] < 1e-9 * (1.0 + std::abs(prob.u[j])));
    if (prob.l[j] == prob.u[j]) {
      active.push_back(j);
      bound.push_back(prob.l[j]);
    } else if (at_lower && !at_upper) {
      active.push_back(j);
      bound.push_back(prob.l[j]);
    } else if (at_upper && !at_lower) {
      active.push_back(j);
      bound.push_back(prob.u[j]);
    }
  }
  const int k = static_cast<int>(active.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
  kkt.topLeftCorner(n, n) = prob.p;
  Eigen::VectorXd rhs(n + k);
  rhs.head(n) = -prob.q;
  for (int r = 0; r < k; ++r) {
    kkt.block(n + r, 0, 1, n) = prob.a.row(active[r]);
    kkt.block(0, n + r, n, 1) = prob.a.row(active[r]).transpose();
    rhs[n + r] = bound[r];
  }
  // Light regularization keeps redundant active rows solvable.
  for (int r = 0; r < k; ++r) kkt(n + r, n + r) = -1e-10;
  for (int i = 0; i < n; ++i) kkt(i, i) += 1e-10;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
  Eigen::VectorXd sol_vec = lu.solve(rhs);
  if (!sol_vec.allFinite()) return false;

  Eigen::VectorXd x = sol_vec.head(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  for (int r = 0; r < k; ++r) y[active[r]] = sol_vec[n + r];

  const Eigen::VectorXd ax2 = prob.a * x;
  double prim = 0.0;
  for (int j = 0; j < m; ++j) {
    if (std::isfinite(prob.l[j])) prim = std::max(prim, prob.l[j] - ax2[j]);
    if (std::isfinite(prob.u[j])) prim = std::max(prim, ax2[j] - prob.u[j]);
  }
  const double dual = inf_norm(prob.p * x + prob.q + prob.a.transpose() * y);
  if (prim <= std::max(sol.primal_residual, cfg.eps_abs) &&
      dual <= std::max(sol.dual_residual, cfg.eps_abs)) {
    sol.x = x;
    sol.y = y;
    sol.primal_residual = prim;
    sol.dual_residual = dual;
    return true;
  }
  return false;
}

}  // namespace

const char* qp_status_name(QpStatus s) {
  switch (s) {
    case QpStatus::Solved:
      return "solved";
    case QpStatus::PrimalInfeasible:
      return "primal_infeasible";
    case QpStatus::DualInfeasible:
      return "dual_infeasible";
    case QpStatus::MaxIters:
      return "max_iters";
  }
  return "unknown";
}

namespace {

QpSolution solve_qp_scaled(const QpProblem& prob, const QpConfig& cfg) {
  const int n = prob.num_vars();
  const int m = prob.num_cons();

  QpSolution sol;
  sol.x = Eigen::VectorXd::Zero(n);
  sol.y = Eigen::VectorXd::Zero(m);
  if (m == 0 && n == 0) {
    sol.status = QpStatus::Solved;
    return sol;
  }

  double rho = cfg.rho;
  auto rho_vector = [&](double r) {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(m, r);
    for (int j = 0; j < m; ++j)
      if (prob.l[j] == prob.u[j]) v[j] = r * 1e3;
    return v;
  };
  Eigen::VectorXd rho_vec = rho_vector(rho);
  auto kkt = factor_kkt(prob, cfg.sigma, rho_vec);

  Eigen::VectorXd x = sol.x;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  for (int j = 0; j < m; ++j)
    z[j] = std::clamp(0.0, prob.l[j], prob.u[j]);

  Eigen::VectorXd rhs(n + m), x_prev(n), y_prev(m);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    x_prev = x;
    y_prev = y;
    rhs.head(n) = cfg.sigma * x - prob.q;
    rhs.tail(m) = z - rho_vec.cwiseInverse().cwiseProduct(y);
    Eigen::VectorXd sol_vec = kkt.solve(rhs);
    Eigen::VectorXd x_tilde = sol_vec.head(n);
    Eigen::VectorXd nu = sol_vec.tail(m);
    Eigen::VectorXd z_tilde =
        z + rho_vec.cwiseInverse().cwiseProduct(nu - y);

    x = cfg.alpha * x_tilde + (1.0 - cfg.alpha) * x;
    Eigen::VectorXd z_relaxed = cfg.alpha * z_tilde + (1.0 - cfg.alpha) * z;
    Eigen::VectorXd z_new = z_relaxed + rho_vec.cwiseInverse().cwiseProduct(y);
    for (int j = 0; j < m; ++j) z_new[j] = std::clamp(z_new[j], prob.l[j], prob.u[j]);
    y = y + rho_vec.cwiseProduct(z_relaxed - z_new);
    z = z_new;

    const Eigen::VectorXd ax = prob.a * x;
    const Eigen::VectorXd px = prob.p * x;
    const Eigen::VectorXd aty = prob.a.transpose() * y;
    const double r_prim = inf_norm(ax - z);
    const double r_dual = inf_norm(px + prob.q + aty);
    const double s_prim = std::max({inf_norm(ax), inf_norm(z), 1e-12});
    const double s_dual =
        std::max({inf_norm(px), inf_norm(prob.q), inf_norm(aty), 1e-12});
    sol.primal_residual = r_prim;
    sol.dual_residual = r_dual;
    sol.iterations = it;

    if (r_prim <= cfg.eps_abs + cfg.eps_rel * s_prim &&
        r_dual <= cfg.eps_abs + cfg.eps_rel * s_dual) {
      sol.status = QpStatus::Solved;
      break;
    }

    // Primal infeasibility: a direction dy with A^T dy ~ 0 and
    // u^T dy_+ + l^T dy_- < 0 certifies an empty feasible set.
    Eigen::VectorXd dy = y - y_prev;
    const double dy_norm = inf_norm(dy);
    if (dy_norm > 1e-12) {
      const double at_dy = inf_norm(prob.a.transpose() * dy);
      double support = 0.0;
      bool bounded_support = true;
      for (int j = 0; j < m; ++j) {
        if (dy[j] > 0.0) {
          if (!std::isfinite(prob.u[j])) { bounded_support = false; break; }
          support += prob.u[j] * dy[j];
        } else if (dy[j] < 0.0) {
          if (!std::isfinite(prob.l[j])) { bounded_support = false; break; }
          support += prob.l[j] * dy[j];
        }
      }
      if (bounded_support && at_dy <= cfg.eps_infeas * dy_norm &&
          support < -cfg.eps_infeas * dy_norm) {
        sol.status = QpStatus::PrimalInfeasible;
        sol.y = dy / dy_norm;
        return sol;
      }
    }

    // Dual infeasibility: a ray dx with P dx ~ 0, q^T dx < 0 and A dx
    // compatible with the bounds certifies an unbounded objective.
    Eigen::VectorXd dx = x - x_prev;
    const double dx_norm = inf_norm(dx);
    if (dx_norm > 1e-12) {
      const double p_dx = inf_norm(prob.p * dx);
      const double q_dx = prob.q.dot(dx);
      if (p_dx <= cfg.eps_infeas * dx_norm &&
          q_dx < -cfg.eps_infeas * dx_norm) {
        const Eigen::VectorXd a_dx = prob.a * dx;
        bool ray_ok = true;
        for (int j = 0; j < m; ++j) {
          if (a_dx[j] > cfg.eps_infeas * dx_norm && std::isfinite(prob.u[j]))
            ray_ok = false;
          if (a_dx[j] < -cfg.eps_infeas * dx_norm && std::isfinite(prob.l[j]))
            ray_ok = false;
        }
        if (ray_ok) {
          sol.status = QpStatus::DualInfeasible;
          sol.x = dx / dx_norm;
          return sol;
        }
      }
    }

    if (it % 50 == 0) {
      const double ratio =
          std::sqrt((r_prim / s_prim) / std::max(r_dual / s_dual, 1e-16));
      if (ratio > 5.0 || ratio < 0.2) {
        rho = std::clamp(rho * ratio, 1e-6, 1e6);
        rho_vec = rho_vector(rho);
        kkt = factor_kkt(prob, cfg.sigma, rho_vec);
      }
    }
  }

  sol.x = x;
  sol.y = y;
  if (sol.status == QpStatus::Solved && cfg.polish) polish_solution(prob, cfg, sol);
  sol.objective = 0.5 * sol.x.dot(prob.p * sol.x) + prob.q.dot(sol.x);
  return sol;
}

}  // namespace

QpSolution solve_qp(const QpProblem& prob, const QpConfig& cfg) {
  const int n = prob.num_vars();
  const int m = prob.num_cons();
  if (prob.p.rows() != n || prob.p.cols() != n || prob.a.cols() != n ||
      prob.a.rows() != m || prob.u.size() != m)
    throw std::invalid_argument("solve_qp: dimension mismatch");
  for (int j = 0; j < m; ++j)
    if (prob.l[j] > prob.u[j])
      throw std::invalid_argument("solve_qp: l > u in row " + std::to_string(j));

  // Row equilibration: normalize each constraint row so that badly scaled
  // inputs do not stall the iteration. Multipliers are rescaled on output so
  // stationarity holds for the original data.
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(m);
  QpProblem eq = prob;
  for (int j = 0; j < m; ++j) {
    const double norm = prob.a.row(j).cwiseAbs().maxCoeff();
    if (norm > 0.0 && std::isfinite(norm)) {
      scale[j] = 1.0 / norm;
      eq.a.row(j) *= scale[j];
      if (std::isfinite(eq.l[j])) eq.l[j] *= scale[j];
      if (std::isfinite(eq.u[j])) eq.u[j] *= scale[j];
    }
  }
  QpSolution sol = solve_qp_scaled(eq, cfg);
  sol.y = sol.y.cwiseProduct(scale);
  return sol;
}

namespace {

using nlohmann::json;

json dense_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd dense_from_json(const json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]
                    .get<double>();
  return m;
}

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] == kInf)
      a.push_back("inf");
    else if (v[i] == -kInf)
      a.push_back("-inf");
    else
      a.push_back(v[i]);
  }
  return a;
}

Eigen::VectorXd vec_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].is_string())
      v[static_cast<Eigen::Index>(i)] =
          (j[i].get<std::string>() == "inf") ? kInf : -kInf;
    else
      v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

}  // namespace

std::string qp_to_json(const QpProblem& prob) {
  json j;
  j["p"] = dense_to_json(prob.p);
  j["q"] = vec_to_json(prob.q);
  j["a"] = dense_to_json(prob.a);
  j["l"] = vec_to_json(prob.l);
  j["u"] = vec_to_json(prob.u);
  return j.dump(2);
}

QpProblem qp_from_json(const std::string& text) {
  json j = json::parse(text);
  QpProblem p;
  p.p = dense_from_json(j.at("p"));
  p.q = vec_from_json(j.at("q"));
  p.a = dense_from_json(j.at("a"));
  if (p.a.size() == 0) p.a.resize(0, p.q.size());
  p.l = vec_from_json(j.at("l"));
  p.u = vec_from_json(j.at("u"));
  return p;
}

void save_qp(const QpProblem& prob, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_qp: cannot open " + path);
  f << qp_to_json(prob);
}

QpProblem load_qp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_qp: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return qp_from_json(text);
}

}  // namespace seels
