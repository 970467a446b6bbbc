#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "seels/confidence.hpp"
#include "seels/numerics.hpp"

using namespace seels;

TEST_CASE("radius spot value at the prior with identity precision") {
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  const double beta = beta_radius(eye, eye, 1.0, 0.05);
  CHECK(beta == doctest::Approx(4.895494).epsilon(1e-5));
  // Equivalently sqrt(2 ln 20) + sqrt(chi2_2(0.95)).
  const double expected =
      std::sqrt(2.0 * std::log(20.0)) + std::sqrt(chi2_quantile(2, 0.95));
  CHECK(beta == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("radius scales linearly with the noise scale, zero at zero") {
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  const double b1 = beta_radius(eye, eye, 1.0, 0.1);
  CHECK(beta_radius(eye, eye, 0.0, 0.1) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(beta_radius(eye, eye, 0.5, 0.1) == doctest::Approx(0.5 * b1).epsilon(1e-12));
}

TEST_CASE("radius shrinks as the failure budget grows") {
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  double prev = beta_radius(eye, eye, 1.0, 0.01);
  for (double di : {0.05, 0.1, 0.2, 0.4}) {
    const double b = beta_radius(eye, eye, 1.0, di);
    CHECK(b < prev);
    prev = b;
  }
  CHECK_THROWS_AS(beta_radius(eye, eye, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(beta_radius(eye, eye, 1.0, 1.0), DomainError);
}

TEST_CASE("membership at and just beyond the boundary") {
  ConfidenceSet set;
  set.center = Eigen::VectorXd::Zero(2);
  set.lambda = Eigen::MatrixXd::Identity(2, 2);
  set.beta = 2.0;
  Eigen::VectorXd on_boundary(2), outside(2);
  on_boundary << 2.0, 0.0;
  outside << 2.0 + 1e-9, 0.0;
  CHECK(membership(set, on_boundary));
  CHECK_FALSE(membership(set, outside));
}

TEST_CASE("every sampled parameter lies inside the set") {
  RngStream rng(2);
  ConfidenceSet set;
  set.center = rng.normal_vec(3);
  Eigen::MatrixXd a(3, 3);
  for (int i = 0; i < 9; ++i) a.data()[i] = rng.normal();
  set.lambda = a * a.transpose() + Eigen::MatrixXd::Identity(3, 3);
  set.beta = 1.3;
  for (int s = 0; s < 100000; ++s)
    REQUIRE(membership(set, sample_params(set, rng)));
  // Boundary-biased draws land exactly on the shell half the time.
  int on_boundary = 0;
  for (int s = 0; s < 2000; ++s) {
    Eigen::VectorXd k = sample_params(set, rng, SampleLaw::BoundaryBiased);
    Eigen::VectorXd d = k - set.center;
    if (std::abs(std::sqrt(d.dot(set.lambda * d)) - set.beta) < 1e-9)
      ++on_boundary;
    REQUIRE(membership(set, k));
  }
  CHECK(on_boundary > 800);
  CHECK(on_boundary < 1200);
}

TEST_CASE("draws are radial in the radius") {
  ConfidenceSet small, large;
  small.center = Eigen::VectorXd::Zero(2);
  small.lambda = Eigen::MatrixXd::Identity(2, 2);
  small.beta = 0.5;
  large = small;
  large.beta = 1.0;
  for (int s = 0; s < 50; ++s) {
    RngStream r1(77, s), r2(77, s);
    Eigen::VectorXd k1 = sample_params(small, r1);
    Eigen::VectorXd k2 = sample_params(large, r2);
    CHECK((k2 - 2.0 * k1).norm() < 1e-12);
  }
}

TEST_CASE("per-dimension budget split and posterior plumbing") {
  LastLayerPrior prior = LastLayerPrior::identity(3, 2, 1.0);
  PosteriorState post = PosteriorState::from_prior(prior);
  std::vector<ConfidenceSet> sets = confidence_sets(prior, post, 0.3);
  REQUIRE(sets.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(sets[i].delta_i == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(sets[i].dim_index == i);
    CHECK(sets[i].beta == doctest::Approx(4.895494).epsilon(1e-5));
  }
}

TEST_CASE("noise bounds and truncated sampling") {
  Eigen::VectorXd sigma(3);
  sigma << 0.2, 0.0, 1.5;
  Eigen::VectorXd b = noise_bounds(sigma);
  const double z = std::sqrt(chi2_quantile(1, 0.95));
  CHECK(b[0] == doctest::Approx(0.2 * z).epsilon(1e-10));
  CHECK(b[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(b[2] == doctest::Approx(1.5 * z).epsilon(1e-10));
  RngStream rng(6);
  for (int s = 0; s < 20000; ++s) {
    Eigen::VectorXd e = sample_noise(sigma, rng);
    REQUIRE(std::abs(e[0]) <= b[0]);
    REQUIRE(e[1] == 0.0);
    REQUIRE(std::abs(e[2]) <= b[2]);
  }
}

TEST_CASE("coverage audit meets the target level") {
  RngStream rng(11);
  SyntheticLinearSystem sys(8, 1.0, rng);
  CoverageReport rep = calibration_audit(sys, 200, 50, 0.05, rng);
  REQUIRE(rep.coverage.size() == 1);
  CHECK(rep.coverage[0] >= 0.90);
  CHECK(rep.trials == 200);
  CHECK(rep.horizon == 50);
  // A huge budget still yields a well-formed report.
  CoverageReport loose = calibration_audit(sys, 50, 10, 0.5, rng);
  CHECK(loose.coverage[0] >= 0.0);
  CHECK(loose.coverage[0] <= 1.0);
  CHECK(loose.to_json().find("\"coverage\"") != std::string::npos);
}
