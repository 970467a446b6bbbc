#pragma once

#include <optional>
#include <string>
#include <vector>

#include "seels/confidence.hpp"
#include "seels/env.hpp"
#include "seels/model.hpp"
#include "seels/scp.hpp"

namespace seels {

enum class EpisodeStatus {
  ReachedGoal,
  SafeStall,
  ConstraintViolation,
  PlannerFailure
};

const char* episode_status_name(EpisodeStatus s);

struct SeelsConfig {
  double delta = 0.1;
  int samples_m = 500;
  int n_reach_min = 4;
  int n_reach_max = 14;
  int n_info = 8;
  int max_phases = 12;
  double alpha_info = 0.025;
  bool baseline_mean_equivalent = false;  // beta forced to 0
  bool update_with_reach_data = false;
  bool fallback_between_phases = false;
  Eigen::VectorXd cost_q_diag;   // stage state weights
  Eigen::VectorXd cost_r_diag;   // stage control weights
  Eigen::VectorXd cost_qn_diag;  // terminal weights
  ScpConfig scp;

  static SeelsConfig freeflyer_defaults();
  static SeelsConfig manipulator_defaults();
};

struct PhaseRecord {
  OcpMode mode = OcpMode::Explore;
  int horizon = 0;
  double cost = 0.0;
  double info_gain = 0.0;
  std::vector<Eigen::VectorXd> planned_mu;
  std::vector<Eigen::VectorXd> planned_delta;  // tube half-widths per step
  std::vector<Eigen::VectorXd> executed_x;     // horizon+1 states
  std::vector<Eigen::VectorXd> executed_u;
};

struct ConstraintAudit {
  bool obstacles_ok = true;
  bool state_box_ok = true;
  bool controls_ok = true;
  bool terminal_ok = false;
  bool joint() const { return obstacles_ok && state_box_ok && controls_ok && terminal_ok; }
};

struct EpisodeResult {
  EpisodeStatus status = EpisodeStatus::SafeStall;
  int explore_phases = 0;
  int reach_phases = 0;
  int total_steps = 0;
  std::vector<PhaseRecord> phases;
  ConstraintAudit audit;
  PosteriorState posterior;
  std::string detail;
};

// Independent re-evaluation of every executed constraint, ignoring all
// planner claims.
ConstraintAudit constraint_audit(const std::vector<Eigen::VectorXd>& states,
                                 const std::vector<Eigen::VectorXd>& controls,
                                 const EnvSpec& spec);

// One closed loop of the sequential explore/exploit algorithm: try task
// horizons first, execute the first feasible plan open-loop; otherwise run
// the most informative feasible exploration plan and update the posterior
// with its executed transitions.
EpisodeResult run_episode(Env& env, const MetaModel& model,
                          const SeelsConfig& cfg, const Eigen::VectorXd& x0,
                          RngStream& rng,
                          const std::optional<std::string>& log_path = {});

// JSON-lines serialization of an episode (one line per phase + summary).
std::string episode_to_jsonl(const EpisodeResult& result);

}  // namespace seels
