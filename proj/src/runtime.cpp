#include "seels/runtime.hpp"

#include <fstream>
#include <sstream>

#include "seels/reach.hpp"

namespace seels {

const char* episode_status_name(EpisodeStatus s) {
  switch (s) {
    case EpisodeStatus::ReachedGoal:
      return "reached_goal";
    case EpisodeStatus::SafeStall:
      return "safe_stall";
    case EpisodeStatus::ConstraintViolation:
      return "constraint_violation";
    case EpisodeStatus::PlannerFailure:
      return "planner_failure";
  }
  return "unknown";
}

SeelsConfig SeelsConfig::freeflyer_defaults() {
  SeelsConfig cfg;
  cfg.cost_q_diag = (Eigen::VectorXd(6) << 0, 0, 0, 1, 1, 10).finished();
  cfg.cost_r_diag = (Eigen::VectorXd(3) << 10, 10, 10).finished();
  cfg.cost_qn_diag =
      1e3 * (Eigen::VectorXd(6) << 1, 1, 0.1, 10, 10, 10).finished();
  return cfg;
}

SeelsConfig SeelsConfig::manipulator_defaults() {
  SeelsConfig cfg;
  cfg.cost_q_diag = (Eigen::VectorXd(6) << 0, 0, 0, 1, 1, 1).finished();
  cfg.cost_r_diag = (Eigen::VectorXd(3) << 1, 1, 1).finished();
  cfg.cost_qn_diag = 1e3 * Eigen::VectorXd::Ones(6);
  cfg.n_reach_min = 2;
  cfg.n_reach_max = 10;
  cfg.n_info = 5;
  return cfg;
}

ConstraintAudit constraint_audit(const std::vector<Eigen::VectorXd>& states,
                                 const std::vector<Eigen::VectorXd>& controls,
                                 const EnvSpec& spec) {
  ConstraintAudit audit;
  for (const auto& x : states) {
    if (!spec.state_box.contains(x, 1e-9)) audit.state_box_ok = false;
    for (const auto& obs : spec.obstacles)
      if (obs.distance(x) < 0.0) audit.obstacles_ok = false;
  }
  for (const auto& u : controls)
    if (!spec.control_box.contains(u, 1e-9)) audit.controls_ok = false;
  audit.terminal_ok =
      !states.empty() && spec.goal_box.contains(states.back(), 1e-9);
  return audit;
}

namespace {

OcpSpec make_ocp_spec(const EnvSpec& env_spec, const SeelsConfig& cfg,
                      OcpMode mode, int horizon) {
  OcpSpec spec;
  spec.mode = mode;
  spec.horizon = horizon;
  spec.cost_q = cfg.cost_q_diag.asDiagonal();
  spec.cost_r = cfg.cost_r_diag.asDiagonal();
  spec.cost_qn = cfg.cost_qn_diag.asDiagonal();
  spec.goal = env_spec.goal_box.center();
  spec.terminal = (mode == OcpMode::Reach) ? env_spec.goal_box : env_spec.init_box;
  spec.state_box = env_spec.state_box;
  spec.control_box = env_spec.control_box;
  spec.obstacles = env_spec.obstacles;
  spec.alpha_info = (mode == OcpMode::Explore) ? cfg.alpha_info : 0.0;
  spec.delta = cfg.delta;
  return spec;
}

}  // namespace

EpisodeResult run_episode(Env& env, const MetaModel& model,
                          const SeelsConfig& cfg, const Eigen::VectorXd& x0,
                          RngStream& rng,
                          const std::optional<std::string>& log_path) {
  const EnvSpec& env_spec = env.spec();
  const NominalDynamics h = env.nominal_dynamics();
  const Eigen::VectorXd noise_bound = noise_bounds(env_spec.sigma);

  EpisodeResult result;
  result.posterior = PosteriorState::from_prior(model.prior);
  Eigen::VectorXd x = x0;
  std::vector<Eigen::VectorXd> all_states{x0};
  std::vector<Eigen::VectorXd> all_controls;

  auto execute = [&](const OcpSolution& sol, PhaseRecord& rec) {
    rec.executed_x.push_back(x);
    for (const auto& u : sol.controls) {
      const Eigen::VectorXd eps = sample_noise(env_spec.sigma, rng);
      x = env.true_step(x, u, eps);
      rec.executed_u.push_back(u);
      rec.executed_x.push_back(x);
      all_controls.push_back(u);
      all_states.push_back(x);
      ++result.total_steps;
    }
  };
  auto record_plan = [](const OcpSolution& sol, PhaseRecord& rec) {
    rec.horizon = static_cast<int>(sol.controls.size());
    rec.cost = sol.cost;
    rec.info_gain = sol.info_gain;
    rec.planned_mu = sol.mu;
    rec.planned_delta = sol.tube.delta;
  };
  auto update_posterior = [&](const PhaseRecord& rec) {
    for (size_t k = 0; k + 1 < rec.executed_x.size(); ++k) {
      TransitionRecord t{rec.executed_x[k], rec.executed_u[k],
                         rec.executed_x[k + 1]};
      posterior_update(result.posterior, model.net, t, h);
    }
  };

  bool done = false;
  int phase = 0;
  for (; phase < cfg.max_phases && !done; ++phase) {
    if (env_spec.goal_box.contains(x, 1e-9)) {
      result.status = EpisodeStatus::ReachedGoal;
      done = true;
      break;
    }

    std::vector<ConfidenceSet> sets =
        confidence_sets(model.prior, result.posterior, cfg.delta);
    if (cfg.baseline_mean_equivalent)
      for (auto& s : sets) s.beta = 0.0;

    // Task attempt: increasing horizons, first verified-feasible plan wins.
    bool reached_plan = false;
    for (int n = cfg.n_reach_min; n <= cfg.n_reach_max && !reached_plan; ++n) {
      RngStream scen_rng = rng.substream(
          1000003ULL * static_cast<std::uint64_t>(phase) + 2ULL * n);
      std::vector<Scenario> scen = sample_scenarios(
          sets, noise_bound, cfg.samples_m, n, scen_rng);
      OcpSpec ocp = make_ocp_spec(env_spec, cfg, OcpMode::Reach, n);
      OcpSolution sol =
          solve_ocp(ocp, model.net, h, result.posterior, x, scen, cfg.scp);
      if (sol.status == OcpStatus::Feasible) {
        PhaseRecord rec;
        rec.mode = OcpMode::Reach;
        record_plan(sol, rec);
        execute(sol, rec);
        if (cfg.update_with_reach_data) update_posterior(rec);
        result.phases.push_back(std::move(rec));
        ++result.reach_phases;
        reached_plan = true;
      }
    }
    if (reached_plan) continue;  // back to the goal check

    // Exploration: most informative verified-feasible horizon.
    OcpSolution best;
    int best_n = -1;
    for (int n = 1; n <= cfg.n_info; ++n) {
      RngStream scen_rng = rng.substream(
          1000003ULL * static_cast<std::uint64_t>(phase) + 2ULL * n + 1ULL);
      std::vector<Scenario> scen = sample_scenarios(
          sets, noise_bound, cfg.samples_m, n, scen_rng);
      OcpSpec ocp = make_ocp_spec(env_spec, cfg, OcpMode::Explore, n);
      OcpSolution sol =
          solve_ocp(ocp, model.net, h, result.posterior, x, scen, cfg.scp);
      if (sol.status == OcpStatus::Feasible &&
          (best_n < 0 || sol.info_gain > best.info_gain)) {
        best = std::move(sol);
        best_n = n;
      }
    }
    if (best_n < 0) {
      result.status = EpisodeStatus::PlannerFailure;
      result.detail = "no feasible exploration horizon";
      done = true;
      break;
    }
    PhaseRecord rec;
    rec.mode = OcpMode::Explore;
    record_plan(best, rec);
    execute(best, rec);
    update_posterior(rec);
    result.phases.push_back(std::move(rec));
    ++result.explore_phases;

    if (cfg.fallback_between_phases && env_spec.init_box.contains(x, 1e-9)) {
      const Eigen::VectorXd u = env.fallback(x);
      const Eigen::VectorXd eps = sample_noise(env_spec.sigma, rng);
      x = env.true_step(x, u, eps);
      all_controls.push_back(u);
      all_states.push_back(x);
      ++result.total_steps;
    }
  }

  if (!done) {
    result.status = env_spec.goal_box.contains(x, 1e-9)
                        ? EpisodeStatus::ReachedGoal
                        : EpisodeStatus::SafeStall;
  }

  result.audit = constraint_audit(all_states, all_controls, env_spec);
  if (!result.audit.obstacles_ok || !result.audit.state_box_ok ||
      !result.audit.controls_ok)
    result.status = EpisodeStatus::ConstraintViolation;

  if (log_path) {
    std::ofstream f(*log_path);
    if (f) f << episode_to_jsonl(result);
  }
  return result;
}

namespace {

void append_vec(std::ostringstream& os, const Eigen::VectorXd& v) {
  os << "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << "]";
}

void append_vecs(std::ostringstream& os, const std::vector<Eigen::VectorXd>& vs) {
  os << "[";
  for (size_t i = 0; i < vs.size(); ++i) {
    if (i) os << ",";
    append_vec(os, vs[i]);
  }
  os << "]";
}

}  // namespace

std::string episode_to_jsonl(const EpisodeResult& result) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& p : result.phases) {
    os << "{\"mode\":\"" << (p.mode == OcpMode::Reach ? "reach" : "explore")
       << "\",\"horizon\":" << p.horizon << ",\"cost\":" << p.cost
       << ",\"info_gain\":" << p.info_gain << ",\"planned_mu\":";
    append_vecs(os, p.planned_mu);
    os << ",\"planned_delta\":";
    append_vecs(os, p.planned_delta);
    os << ",\"executed_x\":";
    append_vecs(os, p.executed_x);
    os << ",\"executed_u\":";
    append_vecs(os, p.executed_u);
    os << "}\n";
  }
  os << "{\"status\":\"" << episode_status_name(result.status)
     << "\",\"explore_phases\":" << result.explore_phases
     << ",\"reach_phases\":" << result.reach_phases
     << ",\"total_steps\":" << result.total_steps
     << ",\"audit\":{\"obstacles\":" << (result.audit.obstacles_ok ? "true" : "false")
     << ",\"state_box\":" << (result.audit.state_box_ok ? "true" : "false")
     << ",\"controls\":" << (result.audit.controls_ok ? "true" : "false")
     << ",\"terminal\":" << (result.audit.terminal_ok ? "true" : "false")
     << ",\"joint\":" << (result.audit.joint() ? "true" : "false") << "}";
  if (!result.detail.empty()) os << ",\"detail\":\"" << result.detail << "\"";
  os << "}\n";
  return os.str();
}

}  // namespace seels
