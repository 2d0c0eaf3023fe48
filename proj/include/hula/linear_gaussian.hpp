#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hula/model.hpp"
#include "hula/rng.hpp"
#include "hula/types.hpp"

namespace hula {

/// Conjugate oracle model with a scalar parameter:
///   theta ~ Normal(prior_mean, prior_var)
///   z_i | theta ~ Normal(theta, sigma_z^2)
///   y_i | z_i ~ Normal(z_i, sigma_y^2)
/// Everything is available in closed form (marginal posterior, conditional
/// latent law, marginal gradient), so samplers and estimators can be checked
/// against exact answers. n = 0 is legal and means a pure prior target.
class LinearGaussianModel {
 public:
  LinearGaussianModel(Eigen::VectorXd y, double sigma_z, double sigma_y,
                      double prior_mean, double prior_var)
      : y_(std::move(y)),
        sigma_z_(sigma_z),
        sigma_y_(sigma_y),
        prior_mean_(prior_mean),
        prior_var_(prior_var) {
    if (!(sigma_z > 0.0) || !(sigma_y > 0.0) || !(prior_var > 0.0))
      throw std::invalid_argument("LinearGaussianModel: scales must be > 0");
    if (!y_.allFinite())
      throw std::invalid_argument("LinearGaussianModel: non-finite data");
  }

  const Eigen::VectorXd& data() const { return y_; }
  double sigma_z() const { return sigma_z_; }
  double sigma_y() const { return sigma_y_; }
  double prior_mean() const { return prior_mean_; }
  double prior_var() const { return prior_var_; }

  ModelDimensions dimensions() const {
    return ModelDimensions{.parameter_dim = 1,
                           .latent_per_obs = 1,
                           .n_obs = static_cast<int>(y_.size())};
  }

  Eigen::VectorXd log_prior_gradient(const ParameterVector& theta) const {
    check_theta(theta);
    Eigen::VectorXd g(1);
    g(0) = -(theta(0) - prior_mean_) / prior_var_;
    return g;
  }

  void sample_latents(const ParameterVector& theta, LatentState& z,
                      const RngKey& key) const {
    std::vector<int> all(static_cast<std::size_t>(y_.size()));
    for (int i = 0; i < y_.size(); ++i) all[static_cast<std::size_t>(i)] = i;
    sample_latents_subset(theta, z, all, key);
  }

  /// z_i | y_i, theta is Normal with precision 1/sigma_z^2 + 1/sigma_y^2;
  /// the draw is exact and independent of the carried state.
  void sample_latents_subset(const ParameterVector& theta, LatentState& z,
                             const std::vector<int>& indices,
                             const RngKey& key) const {
    check_theta(theta);
    const double prec = 1.0 / (sigma_z_ * sigma_z_) + 1.0 / (sigma_y_ * sigma_y_);
    const double var_c = 1.0 / prec;
    const double sd_c = std::sqrt(var_c);
    for (int i : indices) {
      RngStream rng(key.seed, StreamPurpose::latent_sweep, key.step,
                    static_cast<std::uint64_t>(i));
      const double mean = var_c * (theta(0) / (sigma_z_ * sigma_z_) +
                                   y_(i) / (sigma_y_ * sigma_y_));
      z.values(i) = rng.normal(mean, sd_c);
    }
  }

  Eigen::VectorXd augmented_gradient(const ParameterVector& theta,
                                     const LatentState& z) const {
    std::vector<int> all(static_cast<std::size_t>(y_.size()));
    for (int i = 0; i < y_.size(); ++i) all[static_cast<std::size_t>(i)] = i;
    return augmented_gradient_subset(theta, z, all);
  }

  Eigen::VectorXd augmented_gradient_subset(const ParameterVector& theta,
                                            const LatentState& z,
                                            const std::vector<int>& indices) const {
    check_theta(theta);
    double g = 0.0;
    for (int i : indices) g += (z.values(i) - theta(0));
    Eigen::VectorXd out(1);
    out(0) = g / (sigma_z_ * sigma_z_);
    return out;
  }

  /// grad_z of log p(y, z | theta), one entry per latent coordinate.
  Eigen::VectorXd latent_gradient(const ParameterVector& theta,
                                  const LatentState& z) const {
    check_theta(theta);
    return -(z.values.array() - theta(0)).matrix() / (sigma_z_ * sigma_z_) -
           (z.values - y_) / (sigma_y_ * sigma_y_);
  }

  /// log p(y, z | theta) including normalizing constants.
  double log_augmented(const ParameterVector& theta, const LatentState& z) const {
    check_theta(theta);
    const double n = static_cast<double>(y_.size());
    const double vz = sigma_z_ * sigma_z_;
    const double vy = sigma_y_ * sigma_y_;
    double quad = 0.0;
    for (int i = 0; i < y_.size(); ++i) {
      const double dz = z.values(i) - theta(0);
      const double dy = y_(i) - z.values(i);
      quad += dz * dz / vz + dy * dy / vy;
    }
    return -0.5 * n * std::log(2.0 * kPi * vz) -
           0.5 * n * std::log(2.0 * kPi * vy) - 0.5 * quad;
  }

  /// Analytic grad_theta log p(y | theta): the target the Fisher-identity
  /// estimator must match in expectation.
  Eigen::VectorXd marginal_gradient(const ParameterVector& theta) const {
    check_theta(theta);
    const double v = sigma_z_ * sigma_z_ + sigma_y_ * sigma_y_;
    Eigen::VectorXd g(1);
    g(0) = (y_.array() - theta(0)).sum() / v;
    return g;
  }

  LatentState initial_latents() const { return LatentState(y_, 1); }

  void constrain(ParameterVector&) const {}

  struct Posterior {
    double mean = 0.0;
    double variance = 0.0;
  };

  /// Conjugate Normal posterior of theta given y, using the marginal
  /// observation variance sigma_z^2 + sigma_y^2.
  Posterior exact_posterior() const {
    if (y_.size() == 0) return Posterior{prior_mean_, prior_var_};
    const double v = sigma_z_ * sigma_z_ + sigma_y_ * sigma_y_;
    const double prec = 1.0 / prior_var_ + static_cast<double>(y_.size()) / v;
    const double mean = (prior_mean_ / prior_var_ + y_.sum() / v) / prec;
    return Posterior{mean, 1.0 / prec};
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  static void check_theta(const ParameterVector& theta) {
    if (theta.size() != 1 || !theta.allFinite())
      throw std::domain_error("LinearGaussianModel: bad theta");
  }

  Eigen::VectorXd y_;
  double sigma_z_;
  double sigma_y_;
  double prior_mean_;
  double prior_var_;
};

static_assert(LatentVariableModel<LinearGaussianModel>);
static_assert(SubsamplableModel<LinearGaussianModel>);
static_assert(JointGradientModel<LinearGaussianModel>);

/// Two-block Gibbs sampler on (theta, z): z_i | theta, y_i exact conditional,
/// then theta | z conjugate Normal. Serves as the exact-MCMC comparator when
/// the CLI runs the oracle model.
inline ChainOutput run_lg_exact_gibbs(const LinearGaussianModel& model,
                                      const SamplerConfig& config,
                                      const ParameterVector& theta_init) {
  const ModelDimensions dims = model.dimensions();
  config.validate(dims.n_obs);
  const double vz = model.sigma_z() * model.sigma_z();

  ParameterVector theta = theta_init;
  LatentState z = model.initial_latents();

  ChainOutput out;
  out.config_echo = config;
  out.draws.resize(config.retained_rows(), 1);

  const auto t0 = std::chrono::steady_clock::now();
  double latent_seconds = 0.0;
  for (std::int64_t k = 0; k < config.iterations; ++k) {
    const auto l0 = std::chrono::steady_clock::now();
    model.sample_latents(theta, z, RngKey{config.seed, static_cast<std::uint64_t>(k)});
    latent_seconds += std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - l0)
                          .count();

    const double prec = 1.0 / model.prior_var() + static_cast<double>(dims.n_obs) / vz;
    const double mean =
        (model.prior_mean() / model.prior_var() + z.values.sum() / vz) / prec;
    RngStream rng(config.seed, StreamPurpose::theta_noise,
                  static_cast<std::uint64_t>(k));
    theta(0) = rng.normal(mean, std::sqrt(1.0 / prec));

    if (k >= config.burn_in) {
      const std::int64_t idx = k - config.burn_in;
      if ((idx + 1) % config.thin == 0) {
        out.draws.row((idx + 1) / config.thin - 1) = theta.transpose();
        if (config.store_latents) out.latent_draws.push_back(z.values);
      }
    }
  }
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.wall_time_per_iteration = total / static_cast<double>(config.iterations);
  out.latent_wall_time_per_iteration =
      latent_seconds / static_cast<double>(config.iterations);
  out.final_latent = z.values;
  return out;
}

}  // namespace hula
