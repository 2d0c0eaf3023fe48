#pragma once

#include <concepts>
#include <cstdint>
#include <vector>

#include "hula/rng.hpp"
#include "hula/types.hpp"

namespace hula {

/// Address of the randomness a model may consume during one logical step.
/// Models derive per-observation streams as RngStream(seed, purpose, step, i),
/// which keeps parallel per-observation work reproducible for any thread
/// count and evaluation order.
struct RngKey {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
};

/// Contract required by the marginal sampler. Semantics:
///  - dimensions(): shape of theta and of the latent vector.
///  - log_prior_gradient(theta): exact closed-form gradient of log p(theta).
///  - sample_latents(theta, z, key): updates z in place; the update's
///    stationary law is exactly p(z | y, theta). A single MCMC sweep is
///    acceptable; an independent exact draw is the special case.
///  - augmented_gradient(theta, z): closed-form gradient of the likelihood
///    part log p(y, z | theta); the prior term is added once by the sampler.
///  - initial_latents(): a latent state satisfying the model's constraints.
///  - constrain(theta): maps theta back into its canonical domain (angle
///    wrapping for the probit model, a no-op for unconstrained models).
template <typename M>
concept LatentVariableModel = requires(const M& m, const ParameterVector& th,
                                       ParameterVector& th_mut, LatentState& z,
                                       const LatentState& zc, const RngKey& k) {
  { m.dimensions() } -> std::same_as<ModelDimensions>;
  { m.log_prior_gradient(th) } -> std::same_as<Eigen::VectorXd>;
  { m.sample_latents(th, z, k) } -> std::same_as<void>;
  { m.augmented_gradient(th, zc) } -> std::same_as<Eigen::VectorXd>;
  { m.initial_latents() } -> std::same_as<LatentState>;
  { m.constrain(th_mut) } -> std::same_as<void>;
};

/// Extension for models whose likelihood factorizes over observations,
/// p(y, z | theta) = prod_i p(y_i, z_i | theta), enabling unbiased gradient
/// subsampling. Subset calls touch only the listed observation blocks.
template <typename M>
concept SubsamplableModel =
    LatentVariableModel<M> &&
    requires(const M& m, const ParameterVector& th, LatentState& z,
             const LatentState& zc, const std::vector<int>& idx,
             const RngKey& k) {
      { m.sample_latents_subset(th, z, idx, k) } -> std::same_as<void>;
      { m.augmented_gradient_subset(th, zc, idx) } -> std::same_as<Eigen::VectorXd>;
    };

/// Extension for models exposing the closed-form latent-block gradient
/// grad_z log p(y, z | theta), required by the joint update over (theta, z).
template <typename M>
concept JointGradientModel =
    LatentVariableModel<M> &&
    requires(const M& m, const ParameterVector& th, const LatentState& zc) {
      { m.latent_gradient(th, zc) } -> std::same_as<Eigen::VectorXd>;
    };

}  // namespace hula
