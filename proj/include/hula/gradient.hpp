#pragma once

#include <chrono>
#include <vector>

#include "hula/model.hpp"
#include "hula/rng.hpp"
#include "hula/types.hpp"

namespace hula {

/// One unbiased estimate of the marginal log-likelihood gradient
/// grad_theta log p(y | theta), produced by averaging augmented gradients
/// over conditional latent draws. The prior gradient is NOT included here;
/// posterior_gradient adds it exactly once.
struct GradientEstimate {
  Eigen::VectorXd value;
  int draws_used = 0;
  std::vector<int> subsample_indices;  // filled iff subsampling was active
  double latent_seconds = 0.0;         // wall time spent refreshing latents
};

/// Full-data estimator: s_draws sequential conditional refreshes of the
/// carried latent state, averaging the likelihood gradient. Draw s consumes
/// randomness addressed by step key.step + s, so the caller must advance
/// key.step by at least s_draws between invocations.
template <LatentVariableModel M>
GradientEstimate fisher_gradient(const M& model, const ParameterVector& theta,
                                 int s_draws, LatentState& latent,
                                 const RngKey& key) {
  if (s_draws < 1) throw std::invalid_argument("fisher_gradient: s_draws < 1");
  GradientEstimate est;
  est.value = Eigen::VectorXd::Zero(model.dimensions().parameter_dim);
  est.draws_used = s_draws;
  for (int s = 0; s < s_draws; ++s) {
    const RngKey draw_key{key.seed, key.step + static_cast<std::uint64_t>(s)};
    const auto t0 = std::chrono::steady_clock::now();
    model.sample_latents(theta, latent, draw_key);
    est.latent_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    est.value += model.augmented_gradient(theta, latent);
  }
  est.value /= static_cast<double>(s_draws);
  return est;
}

/// Subsampled estimator: per draw s, a uniform without-replacement index set
/// A of size subset_size is drawn, only the latent blocks in A are refreshed,
/// and the likelihood gradient over A is scaled by n/|A|. Unbiased for the
/// full-data marginal gradient. subsample_indices reports the last draw's A.
template <SubsamplableModel M>
GradientEstimate subsampled_fisher_gradient(const M& model,
                                            const ParameterVector& theta,
                                            int s_draws, int subset_size,
                                            LatentState& latent,
                                            const RngKey& key) {
  if (s_draws < 1)
    throw std::invalid_argument("subsampled_fisher_gradient: s_draws < 1");
  const int n = model.dimensions().n_obs;
  if (subset_size < 1 || subset_size > n)
    throw std::invalid_argument("subsampled_fisher_gradient: need 1 <= M <= n");
  const double scale = static_cast<double>(n) / static_cast<double>(subset_size);

  GradientEstimate est;
  est.value = Eigen::VectorXd::Zero(model.dimensions().parameter_dim);
  est.draws_used = s_draws;
  for (int s = 0; s < s_draws; ++s) {
    const RngKey draw_key{key.seed, key.step + static_cast<std::uint64_t>(s)};
    RngStream subset_rng(key.seed, StreamPurpose::subsample, draw_key.step);
    est.subsample_indices = sample_index_subset(n, subset_size, subset_rng);
    const auto t0 = std::chrono::steady_clock::now();
    model.sample_latents_subset(theta, latent, est.subsample_indices, draw_key);
    est.latent_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    est.value += scale * model.augmented_gradient_subset(theta, latent,
                                                         est.subsample_indices);
  }
  est.value /= static_cast<double>(s_draws);
  return est;
}

/// Completes the posterior gradient estimate by adding the closed-form prior
/// gradient to the likelihood estimate.
template <LatentVariableModel M>
Eigen::VectorXd posterior_gradient(const M& model, const ParameterVector& theta,
                                   const GradientEstimate& estimate) {
  return estimate.value + model.log_prior_gradient(theta);
}

}  // namespace hula
