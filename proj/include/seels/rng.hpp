#pragma once

#include <cstdint>
#include <cmath>

#include <Eigen/Dense>

namespace seels {

// Deterministic 64-bit generator (splitmix64) with independent streams.
// Identical (seed, stream_id, draw sequence) yields bit-identical outputs
// on every platform; no standard-library distributions are used since their
// output is not pinned by the C++ standard.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id = 0) {
    state_ = mix(seed ^ mix(0x9E3779B97F4A7C15ULL * (stream_id + 1)));
    has_spare_ = false;
    spare_ = 0.0;
  }

  // Derives an independent child stream, e.g. one per (episode, purpose).
  RngStream substream(std::uint64_t id) const {
    RngStream r(state_, id);
    return r;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the spare draw is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  Eigen::VectorXd normal_vec(int d) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = normal();
    return v;
  }

  // Uniform direction on the unit sphere in R^d.
  Eigen::VectorXd sphere(int d) {
    Eigen::VectorXd v = normal_vec(d);
    double n = v.norm();
    while (n < 1e-12) {
      v = normal_vec(d);
      n = v.norm();
    }
    return v / n;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
  bool has_spare_;
  double spare_;
};

}  // namespace seels
