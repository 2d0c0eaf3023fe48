#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>

#include "hula/gradient.hpp"
#include "hula/model.hpp"
#include "hula/rng.hpp"
#include "hula/types.hpp"

namespace hula {

/// Coordinates beyond this magnitude mean the step size is non-ergodic; the
/// run aborts with whatever was retained so far.
inline constexpr double kDivergenceThreshold = 1e10;

/// One preconditioned Langevin step:
///   theta + tau * U * grad + sqrt(2 tau) * U^{1/2} * noise
/// with U the diagonal config.u_diag (identity when empty) and U^{1/2} its
/// elementwise square root. Affine in (grad, noise).
inline ParameterVector hula_step(const ParameterVector& theta,
                                 const Eigen::VectorXd& grad,
                                 const SamplerConfig& config,
                                 const Eigen::VectorXd& noise,
                                 std::int64_t iteration = 0) {
  if (grad.size() != theta.size() || noise.size() != theta.size())
    throw std::invalid_argument("hula_step: dimension mismatch");
  if (!grad.allFinite()) throw divergence_error(iteration, ChainOutput{});
  const double root = std::sqrt(2.0 * config.tau);
  if (config.u_diag.size() == 0) return theta + config.tau * grad + root * noise;
  if (config.u_diag.size() != theta.size())
    throw std::invalid_argument("hula_step: preconditioner dimension mismatch");
  return theta + config.tau * config.u_diag.cwiseProduct(grad).eval() +
         root * config.u_diag.cwiseSqrt().cwiseProduct(noise).eval();
}

namespace detail {

inline bool diverged(const ParameterVector& theta) {
  return !theta.allFinite() || theta.cwiseAbs().maxCoeff() > kDivergenceThreshold;
}

inline void finalize_times(ChainOutput& out, double total_seconds,
                           double latent_seconds, std::int64_t iterations_run) {
  const double denom = static_cast<double>(iterations_run > 0 ? iterations_run : 1);
  out.wall_time_per_iteration = total_seconds / denom;
  out.latent_wall_time_per_iteration = latent_seconds / denom;
}

}  // namespace detail

/// Marginal Langevin sampler. Per iteration: refresh latents conditionally,
/// estimate the marginal likelihood gradient (subsampled when
/// config.subsample_size > 0), add the prior gradient, take one
/// preconditioned step, and map theta back into its domain. The latent state
/// carries across iterations, which makes single-sweep conditional updates
/// valid.
template <LatentVariableModel M>
ChainOutput run_hula(const M& model, const SamplerConfig& config,
                     const ParameterVector& theta_init) {
  const ModelDimensions dims = model.dimensions();
  config.validate(dims.n_obs);
  if (theta_init.size() != dims.parameter_dim)
    throw std::invalid_argument("run_hula: theta_init dimension mismatch");
  const bool subsampling = config.subsample_size > 0;
  if constexpr (!SubsamplableModel<M>) {
    if (subsampling)
      throw std::invalid_argument("run_hula: model does not support subsampling");
  }

  ParameterVector theta = theta_init;
  LatentState z = model.initial_latents();

  ChainOutput out;
  out.config_echo = config;
  out.draws.resize(config.retained_rows(), dims.parameter_dim);

  const auto t0 = std::chrono::steady_clock::now();
  double latent_seconds = 0.0;
  std::int64_t filled = 0;

  auto partial = [&](std::int64_t k) {
    ChainOutput p;
    p.config_echo = config;
    p.draws = out.draws.topRows(filled);
    p.final_latent = z.values;
    detail::finalize_times(
        p,
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
        latent_seconds, k + 1);
    return p;
  };

  for (std::int64_t k = 0; k < config.iterations; ++k) {
    // draw s of iteration k consumes step k*S + s, never reused
    const RngKey key{config.seed,
                     static_cast<std::uint64_t>(k) *
                         static_cast<std::uint64_t>(config.gradient_draws)};
    GradientEstimate est;
    if constexpr (SubsamplableModel<M>) {
      est = subsampling
                ? subsampled_fisher_gradient(model, theta, config.gradient_draws,
                                             config.subsample_size, z, key)
                : fisher_gradient(model, theta, config.gradient_draws, z, key);
    } else {
      est = fisher_gradient(model, theta, config.gradient_draws, z, key);
    }
    latent_seconds += est.latent_seconds;

    const Eigen::VectorXd grad = posterior_gradient(model, theta, est);
    if (!grad.allFinite()) throw divergence_error(k, partial(k));

    RngStream noise_rng(config.seed, StreamPurpose::theta_noise,
                        static_cast<std::uint64_t>(k));
    Eigen::VectorXd noise(dims.parameter_dim);
    for (int j = 0; j < dims.parameter_dim; ++j)
      noise(j) = config.noise_scale * noise_rng.normal();

    theta = hula_step(theta, grad, config, noise, k);
    model.constrain(theta);
    if (detail::diverged(theta)) throw divergence_error(k, partial(k));

    if (k >= config.burn_in) {
      const std::int64_t idx = k - config.burn_in;
      if ((idx + 1) % config.thin == 0) {
        out.draws.row(filled++) = theta.transpose();
        if (config.store_latents) out.latent_draws.push_back(z.values);
      }
    }
  }

  detail::finalize_times(
      out,
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
      latent_seconds, config.iterations);
  out.final_latent = z.values;
  return out;
}

/// Joint Langevin sampler on the stacked state (theta, z): one Euler step of
/// the augmented-posterior diffusion with a single scalar step size. No
/// conditional latent resampling and no preconditioner; config.u_diag is
/// ignored by design. Latent noise uses per-observation streams.
template <JointGradientModel M>
ChainOutput run_joint_ula(const M& model, const SamplerConfig& config,
                          const ParameterVector& theta_init,
                          const LatentState& z_init) {
  const ModelDimensions dims = model.dimensions();
  config.validate(dims.n_obs);
  if (theta_init.size() != dims.parameter_dim)
    throw std::invalid_argument("run_joint_ula: theta_init dimension mismatch");
  if (z_init.values.size() != dims.latent_dim() ||
      z_init.dim_per_obs != dims.latent_per_obs)
    throw std::invalid_argument("run_joint_ula: z_init dimension mismatch");

  ParameterVector theta = theta_init;
  LatentState z = z_init;
  const double root = std::sqrt(2.0 * config.tau);

  ChainOutput out;
  out.config_echo = config;
  out.draws.resize(config.retained_rows(), dims.parameter_dim);

  const auto t0 = std::chrono::steady_clock::now();
  double latent_seconds = 0.0;
  std::int64_t filled = 0;

  auto partial = [&](std::int64_t k) {
    ChainOutput p;
    p.config_echo = config;
    p.draws = out.draws.topRows(filled);
    p.final_latent = z.values;
    detail::finalize_times(
        p,
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
        latent_seconds, k + 1);
    return p;
  };

  for (std::int64_t k = 0; k < config.iterations; ++k) {
    const Eigen::VectorXd grad_theta =
        model.augmented_gradient(theta, z) + model.log_prior_gradient(theta);
    if (!grad_theta.allFinite()) throw divergence_error(k, partial(k));

    const auto l0 = std::chrono::steady_clock::now();
    const Eigen::VectorXd grad_z = model.latent_gradient(theta, z);
    if (!grad_z.allFinite()) throw divergence_error(k, partial(k));

    for (int i = 0; i < dims.n_obs; ++i) {
      RngStream rng(config.seed, StreamPurpose::latent_sweep,
                    static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i));
      auto block = z.block(i);
      for (int j = 0; j < dims.latent_per_obs; ++j) {
        const int idx = i * dims.latent_per_obs + j;
        block(j) += config.tau * grad_z(idx) +
                    root * config.noise_scale * rng.normal();
      }
    }
    latent_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - l0)
            .count();

    RngStream noise_rng(config.seed, StreamPurpose::theta_noise,
                        static_cast<std::uint64_t>(k));
    for (int j = 0; j < dims.parameter_dim; ++j)
      theta(j) += config.tau * grad_theta(j) +
                  root * config.noise_scale * noise_rng.normal();
    model.constrain(theta);

    if (detail::diverged(theta) || !z.values.allFinite() ||
        (z.values.size() > 0 &&
         z.values.cwiseAbs().maxCoeff() > kDivergenceThreshold))
      throw divergence_error(k, partial(k));

    if (k >= config.burn_in) {
      const std::int64_t idx = k - config.burn_in;
      if ((idx + 1) % config.thin == 0) {
        out.draws.row(filled++) = theta.transpose();
        if (config.store_latents) out.latent_draws.push_back(z.values);
      }
    }
  }

  detail::finalize_times(
      out,
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
      latent_seconds, config.iterations);
  out.final_latent = z.values;
  return out;
}

}  // namespace hula
