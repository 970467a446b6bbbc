#include "seels/dataset.hpp"

#include "seels/confidence.hpp"

namespace seels {

MetaDataset generate_dataset(const Env& base_env, int num_systems,
                             int steps_per_trajectory, RngStream& rng) {
  MetaDataset data;
  for (int j = 0; j < num_systems; ++j) {
    RngStream sys_rng = rng.substream(static_cast<std::uint64_t>(j));
    std::unique_ptr<Env> env = base_env.clone();
    env->sample_params(sys_rng);
    const EnvSpec& spec = env->spec();

    Trajectory traj;
    traj.reserve(steps_per_trajectory);
    Eigen::VectorXd x = spec.state_box.sample(sys_rng);
    while (static_cast<int>(traj.size()) < steps_per_trajectory) {
      // Excitation: i.i.d. uniform controls; restart from a fresh state when
      // the rollout leaves X so every recorded transition starts inside it.
      const Eigen::VectorXd u = spec.control_box.sample(sys_rng);
      const Eigen::VectorXd eps = sample_noise(spec.sigma, sys_rng);
      const Eigen::VectorXd x_next = env->true_step(x, u, eps);
      traj.push_back({x, u, x_next});
      if (!spec.state_box.contains(x_next)) {
        x = spec.state_box.sample(sys_rng);
      } else {
        x = x_next;
      }
    }
    data.trajectories.push_back(std::move(traj));
    data.system_id.push_back(j);
  }
  return data;
}

}  // namespace seels
