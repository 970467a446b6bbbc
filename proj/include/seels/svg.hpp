#pragma once

#include <string>
#include <vector>

#include "seels/env.hpp"
#include "seels/runtime.hpp"

namespace seels {

// Parses the JSON-lines episode log back into phase records (summary line
// ignored). Throws std::runtime_error on malformed input.
std::vector<PhaseRecord> parse_episode_log(const std::string& text);

// Standalone SVG of the 2-D position projection of an episode: workspace
// frame, obstacles, goal box, per-step tube boxes, planned nominal
// trajectory, and the executed trajectory.
std::string episode_svg(const std::vector<PhaseRecord>& phases,
                        const EnvSpec& spec);

}  // namespace seels
