#include "seels/report.hpp"

#include <cmath>
#include <sstream>

namespace seels {

namespace {

constexpr double kZ95 = 1.959963984540054;  // Phi^{-1}(0.975)

double rate_of(const std::vector<EpisodeRow>& rows,
               bool EpisodeRow::*flag) {
  if (rows.empty()) return 0.0;
  int count = 0;
  for (const auto& r : rows)
    if (r.*flag) ++count;
  return static_cast<double>(count) / static_cast<double>(rows.size());
}

double binomial_ci(double p, size_t n) {
  if (n == 0) return 0.0;
  return kZ95 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

EpisodeRow EpisodeRow::from_result(int episode, std::uint64_t seed,
                                   int scenario, const EpisodeResult& r) {
  EpisodeRow row;
  row.episode = episode;
  row.seed = seed;
  row.scenario = scenario;
  row.status = r.status;
  row.explore_phases = r.explore_phases;
  row.reach_phases = r.reach_phases;
  row.total_steps = r.total_steps;
  row.obstacles_ok = r.audit.obstacles_ok;
  row.state_box_ok = r.audit.state_box_ok;
  row.controls_ok = r.audit.controls_ok;
  row.terminal_ok = r.audit.terminal_ok;
  row.joint_ok = r.audit.joint();
  row.goal_reached = r.status == EpisodeStatus::ReachedGoal;
  return row;
}

BatchReport aggregate(std::vector<EpisodeRow> rows) {
  BatchReport rep;
  rep.rows = std::move(rows);
  const size_t n = rep.rows.size();
  if (n == 0) return rep;

  double sum = 0.0;
  for (const auto& r : rep.rows) sum += r.explore_phases;
  rep.explore_mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (const auto& r : rep.rows) {
    const double d = r.explore_phases - rep.explore_mean;
    var += d * d;
  }
  var = (n > 1) ? var / static_cast<double>(n - 1) : 0.0;
  rep.explore_ci = kZ95 * std::sqrt(var / static_cast<double>(n));

  rep.obstacles_rate = rate_of(rep.rows, &EpisodeRow::obstacles_ok);
  rep.state_box_rate = rate_of(rep.rows, &EpisodeRow::state_box_ok);
  rep.controls_rate = rate_of(rep.rows, &EpisodeRow::controls_ok);
  rep.terminal_rate = rate_of(rep.rows, &EpisodeRow::terminal_ok);
  rep.joint_rate = rate_of(rep.rows, &EpisodeRow::joint_ok);
  rep.joint_ci = binomial_ci(rep.joint_rate, n);
  rep.goal_rate = rate_of(rep.rows, &EpisodeRow::goal_reached);
  return rep;
}

std::string report_to_csv(const BatchReport& report) {
  std::ostringstream os;
  os << "episode,seed,scenario,status,explore_phases,reach_phases,total_steps,"
        "obstacles_ok,state_box_ok,controls_ok,terminal_ok,joint_ok,"
        "goal_reached\n";
  for (const auto& r : report.rows) {
    os << r.episode << "," << r.seed << "," << r.scenario << ","
       << episode_status_name(r.status) << "," << r.explore_phases << ","
       << r.reach_phases << "," << r.total_steps << "," << r.obstacles_ok
       << "," << r.state_box_ok << "," << r.controls_ok << ","
       << r.terminal_ok << "," << r.joint_ok << "," << r.goal_reached << "\n";
  }
  os << "aggregate,explore_mean," << fmt(report.explore_mean) << "\n";
  os << "aggregate,explore_ci," << fmt(report.explore_ci) << "\n";
  os << "aggregate,obstacles_rate," << fmt(report.obstacles_rate) << "\n";
  os << "aggregate,state_box_rate," << fmt(report.state_box_rate) << "\n";
  os << "aggregate,controls_rate," << fmt(report.controls_rate) << "\n";
  os << "aggregate,terminal_rate," << fmt(report.terminal_rate) << "\n";
  os << "aggregate,joint_rate," << fmt(report.joint_rate) << "\n";
  os << "aggregate,joint_ci," << fmt(report.joint_ci) << "\n";
  os << "aggregate,goal_rate," << fmt(report.goal_rate) << "\n";
  return os.str();
}

std::string report_to_json(const BatchReport& report) {
  std::ostringstream os;
  os << "{\n  \"rows\": [\n";
  for (size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    os << "    {\"episode\":" << r.episode << ",\"seed\":" << r.seed
       << ",\"scenario\":" << r.scenario << ",\"status\":\""
       << episode_status_name(r.status)
       << "\",\"explore_phases\":" << r.explore_phases
       << ",\"reach_phases\":" << r.reach_phases
       << ",\"total_steps\":" << r.total_steps
       << ",\"obstacles_ok\":" << r.obstacles_ok
       << ",\"state_box_ok\":" << r.state_box_ok
       << ",\"controls_ok\":" << r.controls_ok
       << ",\"terminal_ok\":" << r.terminal_ok
       << ",\"joint_ok\":" << r.joint_ok
       << ",\"goal_reached\":" << r.goal_reached << "}"
       << (i + 1 < report.rows.size() ? "," : "") << "\n";
  }
  os << "  ],\n  \"aggregate\": {\n";
  os << "    \"explore_mean\": " << fmt(report.explore_mean) << ",\n";
  os << "    \"explore_ci\": " << fmt(report.explore_ci) << ",\n";
  os << "    \"obstacles_rate\": " << fmt(report.obstacles_rate) << ",\n";
  os << "    \"state_box_rate\": " << fmt(report.state_box_rate) << ",\n";
  os << "    \"controls_rate\": " << fmt(report.controls_rate) << ",\n";
  os << "    \"terminal_rate\": " << fmt(report.terminal_rate) << ",\n";
  os << "    \"joint_rate\": " << fmt(report.joint_rate) << ",\n";
  os << "    \"joint_ci\": " << fmt(report.joint_ci) << ",\n";
  os << "    \"goal_rate\": " << fmt(report.goal_rate) << "\n";
  os << "  }";
  if (!report.config_echo.empty()) os << ",\n  \"config\": " << report.config_echo;
  os << "\n}\n";
  return os.str();
}

}  // namespace seels
