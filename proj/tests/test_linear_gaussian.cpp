#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hula/linear_gaussian.hpp"

using hula::LatentState;
using hula::LinearGaussianModel;
using hula::ParameterVector;
using hula::RngKey;

namespace {

ParameterVector theta1(double v) {
  ParameterVector t(1);
  t(0) = v;
  return t;
}

LinearGaussianModel standard_model(const Eigen::VectorXd& y) {
  return LinearGaussianModel(y, 1.0, 1.0, 0.0, 1.0);
}

}  // namespace

TEST_CASE("prior gradient is zero at the mode and linear away from it") {
  const auto model = standard_model(Eigen::VectorXd::Zero(1));
  REQUIRE(model.log_prior_gradient(theta1(0.0))(0) == 0.0);
  REQUIRE(model.log_prior_gradient(theta1(2.0))(0) == -2.0);
  // general case: -(theta - mu)/v
  LinearGaussianModel m2(Eigen::VectorXd::Zero(1), 1.0, 1.0, 3.0, 4.0);
  REQUIRE(m2.log_prior_gradient(theta1(1.0))(0) == Catch::Approx(0.5));
}

TEST_CASE("prior gradient rejects non-finite parameters") {
  const auto model = standard_model(Eigen::VectorXd::Zero(1));
  REQUIRE_THROWS_AS(model.log_prior_gradient(theta1(std::nan(""))),
                    std::domain_error);
}

TEST_CASE("constructor validates scales and prior variance") {
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
  REQUIRE_THROWS_AS(LinearGaussianModel(y, 0.0, 1.0, 0.0, 1.0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(LinearGaussianModel(y, 1.0, -1.0, 0.0, 1.0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(LinearGaussianModel(y, 1.0, 1.0, 0.0, 0.0),
                    std::invalid_argument);
}

TEST_CASE("conditional latent draws collapse to y as sigma_y shrinks") {
  Eigen::VectorXd y(3);
  y << 1.0, -2.0, 0.5;
  LinearGaussianModel model(y, 1.0, 1e-9, 0.0, 1.0);
  LatentState z = model.initial_latents();
  z.values.setZero();
  model.sample_latents(theta1(0.0), z, RngKey{7, 0});
  for (int i = 0; i < 3; ++i)
    REQUIRE(std::abs(z.values(i) - y(i)) < 1e-6);
}

TEST_CASE("conditional latent mean matches the precision-weighted formula") {
  // theta = 0, sigma_z = sigma_y = 1, y = 2: conditional Normal(1, 1/2)
  Eigen::VectorXd y(1);
  y << 2.0;
  const auto model = standard_model(y);
  LatentState z = model.initial_latents();
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int k = 0; k < n; ++k) {
    model.sample_latents(theta1(0.0), z, RngKey{3, static_cast<std::uint64_t>(k)});
    sum += z.values(0);
    sum2 += z.values(0) * z.values(0);
  }
  const double mean = sum / n;
  REQUIRE(std::abs(mean - 1.0) < 0.01);
  REQUIRE(std::abs(sum2 / n - mean * mean - 0.5) < 0.01);
}

TEST_CASE("latent draws are deterministic in the stream key") {
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  const auto model = standard_model(y);
  LatentState z1 = model.initial_latents();
  LatentState z2 = model.initial_latents();
  model.sample_latents(theta1(0.3), z1, RngKey{11, 5});
  model.sample_latents(theta1(0.3), z2, RngKey{11, 5});
  REQUIRE(z1.values == z2.values);
  model.sample_latents(theta1(0.3), z2, RngKey{11, 6});
  REQUIRE(z1.values != z2.values);
}

TEST_CASE("augmented gradient sums standardized residuals") {
  Eigen::VectorXd y(2);
  y << 0.0, 0.0;
  const auto model = standard_model(y);
  LatentState z(Eigen::VectorXd::Zero(2), 1);
  z.values << 1.0, -1.0;
  REQUIRE(model.augmented_gradient(theta1(0.0), z)(0) == 0.0);

  Eigen::VectorXd y1(1);
  y1 << 0.0;
  const auto m1 = standard_model(y1);
  LatentState z1(Eigen::VectorXd::Zero(1), 1);
  z1.values << 3.0;
  REQUIRE(m1.augmented_gradient(theta1(1.0), z1)(0) == 2.0);
}

TEST_CASE("subset gradient: full index set equals the full gradient") {
  Eigen::VectorXd y(5);
  y << 0.4, -1.2, 2.0, 0.0, 1.1;
  LinearGaussianModel model(y, 1.3, 0.7, 0.2, 2.0);
  LatentState z(Eigen::VectorXd::LinSpaced(5, -1.0, 1.0), 1);
  const auto full = model.augmented_gradient(theta1(0.5), z);
  const auto sub =
      model.augmented_gradient_subset(theta1(0.5), z, {0, 1, 2, 3, 4});
  REQUIRE(full(0) == sub(0));
}

TEST_CASE("subset gradient is additive over disjoint index sets") {
  Eigen::VectorXd y(4);
  y << 1, -1, 2, 0;
  LinearGaussianModel model(y, 0.9, 1.4, 0.0, 1.0);
  LatentState z(Eigen::VectorXd::LinSpaced(4, 0.0, 3.0), 1);
  const auto t = theta1(-0.2);
  const double gi = model.augmented_gradient_subset(t, z, {1})(0);
  const double gj = model.augmented_gradient_subset(t, z, {3})(0);
  const double gij = model.augmented_gradient_subset(t, z, {1, 3})(0);
  REQUIRE(gi + gj == Catch::Approx(gij).margin(1e-14));
  // partition of all observations reassembles the full gradient
  const double g01 = model.augmented_gradient_subset(t, z, {0, 1})(0);
  const double g23 = model.augmented_gradient_subset(t, z, {2, 3})(0);
  REQUIRE(g01 + g23 == Catch::Approx(model.augmented_gradient(t, z)(0)).margin(1e-14));
}

TEST_CASE("single-observation subset gradient is the scaled residual") {
  Eigen::VectorXd y(3);
  y << 0, 0, 0;
  const auto model = standard_model(y);
  LatentState z(Eigen::VectorXd::Zero(3), 1);
  z.values(1) = 2.0;
  REQUIRE(model.augmented_gradient_subset(theta1(0.0), z, {1})(0) == 2.0);
}

TEST_CASE("exact posterior reduces to the prior with no data") {
  LinearGaussianModel model(Eigen::VectorXd(0), 1.0, 1.0, 0.7, 2.5);
  const auto post = model.exact_posterior();
  REQUIRE(post.mean == 0.7);
  REQUIRE(post.variance == 2.5);
}

TEST_CASE("exact posterior matches the hand conjugate update") {
  Eigen::VectorXd y(1);
  y << 2.0;
  const auto model = standard_model(y);
  const auto post = model.exact_posterior();
  REQUIRE(post.variance == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
  REQUIRE(post.mean == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("flat-prior limit recovers the sample mean") {
  Eigen::VectorXd y(4);
  y << 1.0, 2.0, 3.0, 6.0;
  LinearGaussianModel model(y, 1.0, 1.0, 100.0, 1e12);
  REQUIRE(model.exact_posterior().mean == Catch::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("Fisher identity: conditional-draw average matches marginal gradient") {
  Eigen::VectorXd y(8);
  y << 0.5, -0.3, 1.7, 2.2, -1.0, 0.1, 0.9, -0.6;
  LinearGaussianModel model(y, 1.2, 0.8, 0.0, 1.0);
  const auto t = theta1(0.4);
  const double target = model.marginal_gradient(t)(0);
  LatentState z = model.initial_latents();
  const int s_draws = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int s = 0; s < s_draws; ++s) {
    model.sample_latents(t, z, RngKey{19, static_cast<std::uint64_t>(s)});
    const double g = model.augmented_gradient(t, z)(0);
    sum += g;
    sum2 += g * g;
  }
  const double mean = sum / s_draws;
  const double se = std::sqrt((sum2 / s_draws - mean * mean) / s_draws);
  REQUIRE(std::abs(mean - target) < 4.0 * se);
}

TEST_CASE("analytic gradients match central finite differences") {
  Eigen::VectorXd y(6);
  y << 0.2, -0.7, 1.1, 0.0, 2.4, -1.5;
  LinearGaussianModel model(y, 1.1, 0.6, 0.3, 1.8);
  LatentState z(Eigen::VectorXd::LinSpaced(6, -1.2, 1.6), 1);
  const double h = 1e-5;
  for (const double t0 : {-1.0, 0.0, 0.8, 2.5}) {
    const double fd = (model.log_augmented(theta1(t0 + h), z) -
                       model.log_augmented(theta1(t0 - h), z)) /
                      (2.0 * h);
    const double an = model.augmented_gradient(theta1(t0), z)(0);
    REQUIRE(std::abs(fd - an) < 1e-5 * std::max(1.0, std::abs(an)));
  }
}

TEST_CASE("marginal gradient agrees with the log-marginal finite difference") {
  Eigen::VectorXd y(3);
  y << 1.0, -0.5, 0.25;
  LinearGaussianModel model(y, 1.5, 0.5, 0.0, 1.0);
  // marginal log-likelihood: sum of Normal(theta, sz^2 + sy^2) densities
  const double v = 1.5 * 1.5 + 0.5 * 0.5;
  auto loglik = [&](double t) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += -0.5 * (y(i) - t) * (y(i) - t) / v;
    return s;
  };
  const double h = 1e-6;
  for (const double t0 : {-0.4, 0.0, 1.3}) {
    const double fd = (loglik(t0 + h) - loglik(t0 - h)) / (2.0 * h);
    REQUIRE(model.marginal_gradient(theta1(t0))(0) ==
            Catch::Approx(fd).margin(1e-6));
  }
}

TEST_CASE("latent gradient matches finite differences of the joint density") {
  Eigen::VectorXd y(3);
  y << 0.7, -0.2, 1.9;
  LinearGaussianModel model(y, 0.8, 1.3, 0.0, 1.0);
  const auto t = theta1(0.6);
  LatentState z(Eigen::VectorXd::LinSpaced(3, -0.5, 0.9), 1);
  const auto grad = model.latent_gradient(t, z);
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    LatentState zp = z, zm = z;
    zp.values(i) += h;
    zm.values(i) -= h;
    const double fd =
        (model.log_augmented(t, zp) - model.log_augmented(t, zm)) / (2.0 * h);
    REQUIRE(grad(i) == Catch::Approx(fd).margin(1e-6));
  }
}
