#include "seels/scp.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "seels/numerics.hpp"

namespace seels {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sqrt_term(const Eigen::VectorXd& x, const Eigen::VectorXd& q_diag,
                 const Obstacle& obs) {
  Eigen::VectorXd diff = obs.p_of(x) - obs.center;
  const double dist = diff.norm();
  if (dist < 1e-12) return 0.0;
  Eigen::VectorXd j = obs.jac_of(x).transpose() * (diff / dist);
  return std::sqrt(j.dot(q_diag.cwiseProduct(j)));
}

// Full dynamics Jacobian of f(x,u) = h(x,u) + sum_i kappa_i.phi_i(x,u)
// w.r.t. the stacked input (x, u): finite differences for h, analytic
// feature Jacobians for the learned residual.
void dynamics_jacobian(const FeatureNet& net, const NominalDynamics& h,
                       const PosteriorState& post, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u, double fd_step,
                       Eigen::MatrixXd& a, Eigen::MatrixXd& b) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(u.size());
  Eigen::MatrixXd jac(n, n + m);
  Eigen::VectorXd xp = x, xm = x, up = u, um = u;
  for (int c = 0; c < n + m; ++c) {
    if (c < n) {
      xp[c] += fd_step;
      xm[c] -= fd_step;
      jac.col(c) = (h(xp, u) - h(xm, u)) / (2.0 * fd_step);
      xp[c] = x[c];
      xm[c] = x[c];
    } else {
      up[c - n] += fd_step;
      um[c - n] -= fd_step;
      jac.col(c) = (h(x, up) - h(x, um)) / (2.0 * fd_step);
      up[c - n] = u[c - n];
      um[c - n] = u[c - n];
    }
  }
  std::vector<Eigen::MatrixXd> jphi = feature_jacobian(net, x, u);
  for (int i = 0; i < n; ++i) jac.row(i) += post.kappa[i].transpose() * jphi[i];
  a = jac.leftCols(n);
  b = jac.rightCols(m);
}

Eigen::VectorXd mean_dynamics(const FeatureNet& net, const NominalDynamics& h,
                              const PosteriorState& post,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u) {
  Eigen::VectorXd next = h(x, u);
  std::vector<Eigen::VectorXd> phi = features(net, x, u);
  for (Eigen::Index i = 0; i < next.size(); ++i)
    next[i] += post.kappa[i].dot(phi[i]);
  return next;
}

}  // namespace

double info_cost(const FeatureNet& net, const PosteriorState& post,
                 const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  std::vector<Eigen::VectorXd> phi = features(net, x, u);
  double total = 0.0;
  for (size_t i = 0; i < phi.size(); ++i) {
    Eigen::VectorXd w = solve_spd(post.lambda[i], phi[i]);
    total += 0.5 * std::log1p(phi[i].dot(w));
  }
  return total;
}

Eigen::VectorXd info_cost_gradient(const FeatureNet& net,
                                   const PosteriorState& post,
                                   const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& u) {
  std::vector<Eigen::VectorXd> phi = features(net, x, u);
  std::vector<Eigen::MatrixXd> jac = feature_jacobian(net, x, u);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.size() + u.size());
  for (size_t i = 0; i < phi.size(); ++i) {
    Eigen::VectorXd w = solve_spd(post.lambda[i], phi[i]);
    grad += jac[i].transpose() * w / (1.0 + phi[i].dot(w));
  }
  return grad;
}

void robust_obstacle_row(const Eigen::VectorXd& mu,
                         const Eigen::VectorXd& q_diag, const Obstacle& obs,
                         Eigen::VectorXd& a, double& b) {
  Eigen::VectorXd diff = obs.p_of(mu) - obs.center;
  const double dist = diff.norm();
  if (dist < 1e-12) throw SingularGradient();
  const double margin = dist - obs.radius - sqrt_term(mu, q_diag, obs);

  // Analytic gradient of the distance part, central differences for the
  // tube-backoff part (its Jacobian-of-Jacobian is not worth carrying).
  a = obs.jac_of(mu).transpose() * (diff / dist);
  const double fd = 1e-6;
  Eigen::VectorXd xp = mu, xm = mu;
  for (Eigen::Index c = 0; c < mu.size(); ++c) {
    xp[c] += fd;
    xm[c] -= fd;
    a[c] -= (sqrt_term(xp, q_diag, obs) - sqrt_term(xm, q_diag, obs)) / (2.0 * fd);
    xp[c] = mu[c];
    xm[c] = mu[c];
  }
  b = a.dot(mu) - margin;
}

void robust_box_rows(const Eigen::VectorXd& delta, const Box& box,
                     Eigen::VectorXd& lower, Eigen::VectorXd& upper) {
  lower = box.lower + delta;
  upper = box.upper - delta;
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (lower[i] > upper[i] + 1e-12)
      throw ImmediateInfeasible("tube width exceeds box in dimension " +
                                std::to_string(i));
}

OcpSolution solve_ocp(const OcpSpec& spec, const FeatureNet& net,
                      const NominalDynamics& h, const PosteriorState& post,
                      const Eigen::VectorXd& x_start,
                      const std::vector<Scenario>& scenarios,
                      const ScpConfig& cfg) {
  const int n = static_cast<int>(x_start.size());
  const int m = spec.control_box.dim();
  const int horizon = spec.horizon;
  const int nv = n * (horizon + 1) + m * horizon;
  auto idx_mu = [&](int k) { return n * k; };
  auto idx_u = [&](int k) { return n * (horizon + 1) + m * k; };

  std::ofstream trace;
  if (cfg.trace_path) trace.open(*cfg.trace_path, std::ios::app);
  auto log_line = [&](const std::string& s) {
    if (trace.is_open()) trace << s << "\n";
  };

  OcpSolution sol;
  sol.mu.assign(horizon + 1, x_start);
  sol.controls.assign(horizon, Eigen::VectorXd::Zero(m));
  if (spec.mode == OcpMode::Reach) {
    Eigen::VectorXd target = spec.terminal.center();
    for (int k = 0; k <= horizon; ++k)
      sol.mu[k] = x_start + (static_cast<double>(k) / horizon) * (target - x_start);
  } else {
    // Exploration stays local: seed with the zero-control mean rollout so the
    // first linearization happens where the plan will actually live.
    for (int k = 0; k < horizon; ++k)
      sol.mu[k + 1] = mean_dynamics(net, h, post, sol.mu[k], sol.controls[k]);
  }

  const Eigen::VectorXd u_half =
      0.5 * (spec.control_box.upper - spec.control_box.lower);
  Eigen::VectorXd trust = cfg.trust_init_frac * u_half;

  auto exact_cost = [&](const std::vector<Eigen::VectorXd>& mu,
                        const std::vector<Eigen::VectorXd>& us) {
    double c = 0.0;
    for (int k = 0; k < horizon; ++k) {
      c += mu[k].dot(spec.cost_q * mu[k]) + us[k].dot(spec.cost_r * us[k]);
      if (spec.alpha_info > 0.0)
        c -= spec.alpha_info * info_cost(net, post, mu[k], us[k]);
    }
    Eigen::VectorXd dn = mu[horizon] - spec.goal;
    c += dn.dot(spec.cost_qn * dn);
    return c;
  };

  double prev_cost = exact_cost(sol.mu, sol.controls);
  bool converged = false;

  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    sol.iterations = iter;
    ReachTube tube;
    try {
      tube = compute_tube(net, h, post, x_start, sol.controls, scenarios);
    } catch (const NonFiniteState&) {
      sol.detail = "tube propagation diverged";
      log_line("{\"iter\":" + std::to_string(iter) + ",\"event\":\"tube_diverged\"}");
      return sol;
    }

    // Assemble the subproblem around the current iterate.
    QpProblem qp;
    qp.p = Eigen::MatrixXd::Zero(nv, nv);
    qp.q = Eigen::VectorXd::Zero(nv);
    for (int k = 0; k < horizon; ++k) {
      qp.p.block(idx_mu(k), idx_mu(k), n, n) = 2.0 * spec.cost_q;
      qp.p.block(idx_u(k), idx_u(k), m, m) = 2.0 * spec.cost_r;
      if (spec.alpha_info > 0.0) {
        Eigen::VectorXd g =
            info_cost_gradient(net, post, sol.mu[k], sol.controls[k]);
        qp.q.segment(idx_mu(k), n) -= spec.alpha_info * g.head(n);
        qp.q.segment(idx_u(k), m) -= spec.alpha_info * g.tail(m);
      }
    }
    qp.p.block(idx_mu(horizon), idx_mu(horizon), n, n) = 2.0 * spec.cost_qn;
    qp.q.segment(idx_mu(horizon), n) -= 2.0 * spec.cost_qn * spec.goal;

    const int n_eq = n * (horizon + 1);
    const int n_box = n * horizon;  // k = 1..N state rows
    const int n_ctrl = m * horizon;
    const int n_obs = static_cast<int>(spec.obstacles.size()) * horizon;
    const int mc = n_eq + n_box + n_ctrl + n_obs;
    qp.a = Eigen::MatrixXd::Zero(mc, nv);
    qp.l = Eigen::VectorXd::Constant(mc, -kInf);
    qp.u = Eigen::VectorXd::Constant(mc, kInf);
    int row = 0;

    // mu_0 pinned to the start state.
    qp.a.block(row, idx_mu(0), n, n).setIdentity();
    qp.l.segment(row, n) = x_start;
    qp.u.segment(row, n) = x_start;
    row += n;

    // Linearized mean dynamics: mu_{k+1} - A mu_k - B u_k = c.
    for (int k = 0; k < horizon; ++k) {
      Eigen::MatrixXd a_k, b_k;
      dynamics_jacobian(net, h, post, sol.mu[k], sol.controls[k],
                        cfg.dyn_fd_step, a_k, b_k);
      Eigen::VectorXd f0 = mean_dynamics(net, h, post, sol.mu[k], sol.controls[k]);
      Eigen::VectorXd c = f0 - a_k * sol.mu[k] - b_k * sol.controls[k];
      qp.a.block(row, idx_mu(k + 1), n, n).setIdentity();
      qp.a.block(row, idx_mu(k), n, n) = -a_k;
      qp.a.block(row, idx_u(k), n, m) = -b_k;
      qp.l.segment(row, n) = c;
      qp.u.segment(row, n) = c;
      row += n;
    }

    // Tightened state boxes (terminal row also intersects the terminal set).
    try {
      for (int k = 1; k <= horizon; ++k) {
        Eigen::VectorXd lo, hi;
        robust_box_rows(tube.delta[k], spec.state_box, lo, hi);
        if (k == horizon) {
          Eigen::VectorXd tlo, thi;
          robust_box_rows(tube.delta[k], spec.terminal, tlo, thi);
          lo = lo.cwiseMax(tlo);
          hi = hi.cwiseMin(thi);
          for (int i = 0; i < n; ++i)
            if (lo[i] > hi[i] + 1e-12)
              throw ImmediateInfeasible("terminal tightening crosses");
        }
        qp.a.block(row, idx_mu(k), n, n).setIdentity();
        qp.l.segment(row, n) = lo;
        qp.u.segment(row, n) = hi;
        row += n;
      }
    } catch (const ImmediateInfeasible& e) {
      sol.detail = std::string("tightening infeasible: ") + e.what();
      log_line("{\"iter\":" + std::to_string(iter) +
               ",\"event\":\"tightening_infeasible\"}");
      return sol;
    }

    // Control box intersected with the trust region around the iterate.
    for (int k = 0; k < horizon; ++k) {
      qp.a.block(row, idx_u(k), m, m).setIdentity();
      qp.l.segment(row, m) =
          spec.control_box.lower.cwiseMax(sol.controls[k] - trust);
      qp.u.segment(row, m) =
          spec.control_box.upper.cwiseMin(sol.controls[k] + trust);
      row += m;
    }

    // Robustified obstacle half-spaces at k = 1..N.
    try {
      for (int k = 1; k <= horizon; ++k) {
        for (const Obstacle& obs : spec.obstacles) {
          Eigen::VectorXd a_row;
          double b_row;
          robust_obstacle_row(sol.mu[k], tube.q_diag[k], obs, a_row, b_row);
          qp.a.block(row, idx_mu(k), 1, n) = a_row.transpose();
          qp.l[row] = b_row;
          row += 1;
        }
      }
    } catch (const SingularGradient&) {
      sol.detail = "iterate inside obstacle center";
      log_line("{\"iter\":" + std::to_string(iter) +
               ",\"event\":\"singular_gradient\"}");
      return sol;
    }

    QpSolution qs = solve_qp(qp);
    if (qs.status != QpStatus::Solved) {
      sol.detail = std::string("qp ") + qp_status_name(qs.status);
      log_line("{\"iter\":" + std::to_string(iter) + ",\"qp\":\"" +
               qp_status_name(qs.status) + "\"}");
      return sol;
    }

    std::vector<Eigen::VectorXd> mu_new(horizon + 1), u_new(horizon);
    for (int k = 0; k <= horizon; ++k) mu_new[k] = qs.x.segment(idx_mu(k), n);
    // Clamp away solver tolerance so the next trust-region rows stay ordered.
    for (int k = 0; k < horizon; ++k)
      u_new[k] = qs.x.segment(idx_u(k), m)
                     .cwiseMax(spec.control_box.lower)
                     .cwiseMin(spec.control_box.upper);
    const double cost_new = exact_cost(mu_new, u_new);

    double step = 0.0;
    for (int k = 0; k < horizon; ++k)
      step = std::max(step, (u_new[k] - sol.controls[k]).cwiseAbs().maxCoeff());

    const bool accept = cost_new <= prev_cost + 1e-12 || iter == 1;
    log_line("{\"iter\":" + std::to_string(iter) + ",\"cost\":" +
             std::to_string(cost_new) + ",\"trust\":" +
             std::to_string(trust.maxCoeff()) + ",\"qp\":\"solved\",\"accepted\":" +
             (accept ? "true" : "false") + "}");
    if (!accept) {
      trust *= cfg.trust_shrink;
      continue;
    }
    const double rel =
        std::abs(cost_new - prev_cost) / std::max(1.0, std::abs(prev_cost));
    sol.mu = std::move(mu_new);
    sol.controls = std::move(u_new);
    prev_cost = cost_new;
    if (rel < cfg.rel_cost_tol && step < 1e-3 && iter > 1) {
      converged = true;
      break;
    }
  }
  (void)converged;

  // Independent verification: re-propagate the tube from the accepted
  // controls and re-check every original constraint on it.
  ReachTube tube;
  try {
    tube = compute_tube(net, h, post, x_start, sol.controls, scenarios);
  } catch (const NonFiniteState&) {
    sol.detail = "verifier tube diverged";
    log_line("{\"verifier\":\"fail\",\"reason\":\"tube_diverged\"}");
    return sol;
  }
  const double tol = 1e-6;
  bool ok = true;
  std::string why;
  for (int k = 0; k < horizon && ok; ++k)
    if (!spec.control_box.contains(sol.controls[k], tol)) {
      ok = false;
      why = "control bounds";
    }
  for (int k = 1; k <= horizon && ok; ++k) {
    const Eigen::VectorXd lo = tube.mu[k] - tube.delta[k];
    const Eigen::VectorXd hi = tube.mu[k] + tube.delta[k];
    if (!spec.state_box.contains(lo, tol) || !spec.state_box.contains(hi, tol)) {
      ok = false;
      why = "state box";
      break;
    }
    for (const Obstacle& obs : spec.obstacles) {
      const double margin = obs.distance(tube.mu[k]) -
                            sqrt_term(tube.mu[k], tube.q_diag[k], obs);
      if (margin < -tol) {
        ok = false;
        why = "obstacle margin";
        break;
      }
    }
  }
  if (ok) {
    const Eigen::VectorXd lo = tube.mu[horizon] - tube.delta[horizon];
    const Eigen::VectorXd hi = tube.mu[horizon] + tube.delta[horizon];
    if (!spec.terminal.contains(lo, tol) || !spec.terminal.contains(hi, tol)) {
      ok = false;
      why = "terminal set";
    }
  }
  if (!ok) {
    sol.detail = "re-check failed: " + why;
    log_line("{\"verifier\":\"fail\",\"reason\":\"" + why + "\"}");
    return sol;
  }

  sol.status = OcpStatus::Feasible;
  sol.detail.clear();
  sol.mu = tube.mu;
  sol.tube = std::move(tube);
  sol.cost = exact_cost(sol.mu, sol.controls);
  sol.info_gain = 0.0;
  for (int k = 0; k < horizon; ++k)
    sol.info_gain += info_cost(net, post, sol.mu[k], sol.controls[k]);
  log_line("{\"verifier\":\"pass\",\"cost\":" + std::to_string(sol.cost) + "}");
  return sol;
}

}  // namespace seels
