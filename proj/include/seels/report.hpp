#pragma once

#include <string>
#include <vector>

#include "seels/runtime.hpp"

namespace seels {

// One batch episode, flattened for aggregation.
struct EpisodeRow {
  int episode = 0;
  std::uint64_t seed = 0;
  int scenario = 0;
  EpisodeStatus status = EpisodeStatus::SafeStall;
  int explore_phases = 0;
  int reach_phases = 0;
  int total_steps = 0;
  bool obstacles_ok = true;
  bool state_box_ok = true;
  bool controls_ok = true;
  bool terminal_ok = false;
  bool joint_ok = false;
  bool goal_reached = false;

  static EpisodeRow from_result(int episode, std::uint64_t seed, int scenario,
                                const EpisodeResult& r);
};

// Aggregate statistics in the style of a results table: mean exploration
// phases with a 95% confidence interval and per-constraint satisfaction
// rates with normal-approximation binomial intervals.
struct BatchReport {
  std::vector<EpisodeRow> rows;
  double explore_mean = 0.0;
  double explore_ci = 0.0;  // half-width, 95% normal approximation
  double obstacles_rate = 0.0;
  double state_box_rate = 0.0;
  double controls_rate = 0.0;
  double terminal_rate = 0.0;
  double joint_rate = 0.0;
  double joint_ci = 0.0;  // half-width, 95% normal approximation
  double goal_rate = 0.0;
  std::string config_echo;  // JSON text of the configuration used
};

BatchReport aggregate(std::vector<EpisodeRow> rows);

// Both emitters print every number with the same formatting so the CSV and
// JSON artifacts agree digit for digit.
std::string report_to_csv(const BatchReport& report);
std::string report_to_json(const BatchReport& report);

}  // namespace seels
