#include "seels/svg.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace seels {

namespace {

Eigen::VectorXd to_vec(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i];
  return v;
}

std::vector<Eigen::VectorXd> to_vecs(const nlohmann::json& j) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(to_vec(e));
  return out;
}

}  // namespace

std::vector<PhaseRecord> parse_episode_log(const std::string& text) {
  std::vector<PhaseRecord> phases;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    if (!j.contains("mode")) continue;  // summary line
    PhaseRecord p;
    p.mode = j["mode"] == "reach" ? OcpMode::Reach : OcpMode::Explore;
    p.horizon = j["horizon"];
    p.cost = j["cost"];
    p.info_gain = j["info_gain"];
    p.planned_mu = to_vecs(j["planned_mu"]);
    p.planned_delta = to_vecs(j["planned_delta"]);
    p.executed_x = to_vecs(j["executed_x"]);
    p.executed_u = to_vecs(j["executed_u"]);
    phases.push_back(std::move(p));
  }
  return phases;
}

namespace {

struct Frame {
  double x0, y0, x1, y1;  // world bounds
  double w = 640.0, h = 640.0, pad = 20.0;

  double sx(double x) const {
    return pad + (x - x0) / (x1 - x0) * (w - 2 * pad);
  }
  double sy(double y) const {
    // SVG y grows downward; flip so world +y points up.
    return h - pad - (y - y0) / (y1 - y0) * (h - 2 * pad);
  }
  double sr(double r) const { return r / (x1 - x0) * (w - 2 * pad); }
};

void polyline(std::ostringstream& os, const Frame& f,
              const std::vector<Eigen::VectorXd>& pts, const char* color,
              double width, const char* dash = nullptr) {
  if (pts.size() < 2) return;
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
     << width << "\"";
  if (dash) os << " stroke-dasharray=\"" << dash << "\"";
  os << " points=\"";
  for (const auto& p : pts) os << f.sx(p[0]) << "," << f.sy(p[1]) << " ";
  os << "\"/>\n";
}

}  // namespace

std::string episode_svg(const std::vector<PhaseRecord>& phases,
                        const EnvSpec& spec) {
  Frame f;
  f.x0 = spec.state_box.lower[0];
  f.x1 = spec.state_box.upper[0];
  f.y0 = spec.state_box.lower[1];
  f.y1 = spec.state_box.upper[1];

  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.w
     << "\" height=\"" << f.h << "\" viewBox=\"0 0 " << f.w << " " << f.h
     << "\">\n";
  os << "<rect x=\"" << f.sx(f.x0) << "\" y=\"" << f.sy(f.y1) << "\" width=\""
     << f.sx(f.x1) - f.sx(f.x0) << "\" height=\"" << f.sy(f.y0) - f.sy(f.y1)
     << "\" fill=\"#ffffff\" stroke=\"#333333\"/>\n";

  for (const auto& obs : spec.obstacles) {
    os << "<circle cx=\"" << f.sx(obs.center[0]) << "\" cy=\""
       << f.sy(obs.center[1]) << "\" r=\"" << f.sr(obs.radius)
       << "\" fill=\"#d9534f\" fill-opacity=\"0.4\" stroke=\"#d9534f\"/>\n";
  }

  os << "<rect x=\"" << f.sx(spec.goal_box.lower[0]) << "\" y=\""
     << f.sy(spec.goal_box.upper[1]) << "\" width=\""
     << f.sx(spec.goal_box.upper[0]) - f.sx(spec.goal_box.lower[0])
     << "\" height=\""
     << f.sy(spec.goal_box.lower[1]) - f.sy(spec.goal_box.upper[1])
     << "\" fill=\"#5cb85c\" fill-opacity=\"0.3\" stroke=\"#5cb85c\"/>\n";

  for (const auto& p : phases) {
    const char* tube_color = p.mode == OcpMode::Reach ? "#337ab7" : "#f0ad4e";
    for (size_t k = 0; k < p.planned_mu.size() && k < p.planned_delta.size();
         ++k) {
      const auto& mu = p.planned_mu[k];
      const auto& d = p.planned_delta[k];
      if (mu.size() < 2 || d.size() < 2) continue;
      os << "<rect x=\"" << f.sx(mu[0] - d[0]) << "\" y=\""
         << f.sy(mu[1] + d[1]) << "\" width=\""
         << f.sx(mu[0] + d[0]) - f.sx(mu[0] - d[0]) << "\" height=\""
         << f.sy(mu[1] - d[1]) - f.sy(mu[1] + d[1]) << "\" fill=\""
         << tube_color << "\" fill-opacity=\"0.15\" stroke=\"" << tube_color
         << "\" stroke-opacity=\"0.5\"/>\n";
    }
    polyline(os, f, p.planned_mu, tube_color, 1.5, "4,3");
    polyline(os, f, p.executed_x, "#000000", 1.5);
  }

  os << "</svg>\n";
  return os.str();
}

}  // namespace seels
