#pragma once

#include <string>

#include "seels/model.hpp"

namespace seels {

// Versioned JSON persistence with explicit shapes and little-endian
// base-16 encoded float64 payloads; round trips are bit-exact.
std::string model_to_json(const MetaModel& model);
MetaModel model_from_json(const std::string& text);

void save_model(const MetaModel& model, const std::string& path);
MetaModel load_model(const std::string& path);

}  // namespace seels
