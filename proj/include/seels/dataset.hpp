#pragma once

#include "seels/env.hpp"
#include "seels/model.hpp"

namespace seels {

// J trajectories of T transitions each, one freshly drawn hidden-parameter
// system per trajectory, uniform-random excitation.
MetaDataset generate_dataset(const Env& base_env, int num_systems,
                             int steps_per_trajectory, RngStream& rng);

}  // namespace seels
