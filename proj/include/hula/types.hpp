#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hula {

using ParameterVector = Eigen::VectorXd;

/// Shape of a latent-variable model instance.
struct ModelDimensions {
  int parameter_dim = 0;   // length of theta, > 0
  int latent_per_obs = 0;  // latent coordinates per observation, > 0
  int n_obs = 0;           // observations, >= 0 (a pure prior has none)

  void validate() const {
    if (parameter_dim <= 0 || latent_per_obs <= 0 || n_obs < 0)
      throw std::invalid_argument("ModelDimensions: invalid shape");
  }

  int latent_dim() const { return latent_per_obs * n_obs; }
};

/// Stacked latent vector with per-observation block access. Block i holds the
/// latent coordinates of observation i, contiguously.
struct LatentState {
  Eigen::VectorXd values;
  int dim_per_obs = 1;

  LatentState() = default;
  LatentState(Eigen::VectorXd v, int per_obs)
      : values(std::move(v)), dim_per_obs(per_obs) {
    if (per_obs <= 0 || values.size() % per_obs != 0)
      throw std::invalid_argument("LatentState: size not divisible by block");
  }

  int n_obs() const {
    return dim_per_obs == 0 ? 0
                            : static_cast<int>(values.size()) / dim_per_obs;
  }

  Eigen::VectorBlock<Eigen::VectorXd> block(int i) {
    return values.segment(static_cast<Eigen::Index>(i) * dim_per_obs,
                          dim_per_obs);
  }
  Eigen::VectorBlock<const Eigen::VectorXd> block(int i) const {
    return values.segment(static_cast<Eigen::Index>(i) * dim_per_obs,
                          dim_per_obs);
  }
};

/// Tuning knobs shared by the samplers. A default-constructed config is not
/// runnable; tau and iterations must be set.
struct SamplerConfig {
  double tau = 0.0;             // step size, > 0
  Eigen::VectorXd u_diag;       // diagonal preconditioner; empty means identity
  int gradient_draws = 1;       // latent refreshes averaged per gradient
  int subsample_size = 0;       // observations per gradient; 0 means all
  std::int64_t iterations = 0;  // total steps taken
  std::int64_t burn_in = 0;     // leading steps discarded
  std::int64_t thin = 1;        // keep every thin-th post-burn-in step
  std::uint64_t seed = 0;
  double noise_scale = 1.0;  // 0 turns the sampler into gradient ascent
  bool store_latents = false;

  void validate(int n_obs) const {
    if (!(tau > 0.0)) throw std::invalid_argument("SamplerConfig: tau <= 0");
    if (iterations <= 0)
      throw std::invalid_argument("SamplerConfig: iterations <= 0");
    if (burn_in < 0 || burn_in >= iterations)
      throw std::invalid_argument("SamplerConfig: bad burn_in");
    if (thin <= 0) throw std::invalid_argument("SamplerConfig: thin <= 0");
    if (gradient_draws <= 0)
      throw std::invalid_argument("SamplerConfig: gradient_draws <= 0");
    if (subsample_size < 0 || subsample_size > n_obs)
      throw std::invalid_argument("SamplerConfig: bad subsample_size");
    if (noise_scale < 0.0)
      throw std::invalid_argument("SamplerConfig: noise_scale < 0");
    if (u_diag.size() > 0 && !(u_diag.minCoeff() > 0.0))
      throw std::invalid_argument("SamplerConfig: u_diag entries must be > 0");
  }

  std::int64_t retained_rows() const { return (iterations - burn_in) / thin; }
};

/// Result of a sampler run. draws has one retained parameter vector per row.
struct ChainOutput {
  Eigen::MatrixXd draws;
  double wall_time_per_iteration = 0.0;         // seconds, full step
  double latent_wall_time_per_iteration = 0.0;  // seconds inside latent work
  Eigen::VectorXd final_latent;
  SamplerConfig config_echo;
  std::vector<Eigen::VectorXd> latent_draws;  // filled iff store_latents
};

/// Thrown when a chain leaves the numerically representable region. Carries
/// whatever the chain produced before diverging so callers can inspect it.
class divergence_error : public std::runtime_error {
 public:
  divergence_error(std::int64_t iteration, ChainOutput partial)
      : std::runtime_error("chain diverged at iteration " +
                           std::to_string(iteration)),
        iteration_(iteration),
        partial_(std::move(partial)) {}

  std::int64_t iteration() const { return iteration_; }
  const ChainOutput& partial() const { return partial_; }

 private:
  std::int64_t iteration_;
  ChainOutput partial_;
};

}  // namespace hula
