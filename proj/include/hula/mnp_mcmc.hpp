#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hula/mnp.hpp"
#include "hula/model.hpp"
#include "hula/rng.hpp"
#include "hula/types.hpp"

namespace hula {

/// Random-walk settings for the angle updates. blocks must partition the
/// angle indices; proposal scales adapt during the first adapt_until
/// iterations and are frozen afterwards so the post-freeze chain is exact.
struct MhConfig {
  std::vector<std::vector<int>> blocks;
  std::vector<double> proposal_sd;
  std::int64_t adapt_until = 0;

  void validate(int angle_dim) const {
    if (blocks.size() != proposal_sd.size())
      throw std::invalid_argument("MhConfig: blocks/proposal_sd mismatch");
    std::vector<int> seen(static_cast<std::size_t>(angle_dim), 0);
    for (const auto& b : blocks)
      for (int idx : b) {
        if (idx < 0 || idx >= angle_dim)
          throw std::invalid_argument("MhConfig: block index out of range");
        ++seen[static_cast<std::size_t>(idx)];
      }
    for (int c : seen)
      if (c != 1) throw std::invalid_argument("MhConfig: blocks must partition");
    for (double sd : proposal_sd)
      if (!(sd > 0.0)) throw std::invalid_argument("MhConfig: proposal_sd <= 0");
  }
};

/// Consecutive blocks of at most 3 angles, initial scale 0.1, adaptation
/// through the burn-in.
inline MhConfig default_mh_config(const MnpSpec& spec, std::int64_t adapt_until) {
  MhConfig mh;
  mh.adapt_until = adapt_until;
  const int d = spec.angle_dim();
  for (int lo = 0; lo < d; lo += 3) {
    std::vector<int> block;
    for (int k = lo; k < std::min(d, lo + 3); ++k) block.push_back(k);
    mh.blocks.push_back(std::move(block));
    mh.proposal_sd.push_back(0.1);
  }
  return mh;
}

/// Exact conjugate draw of beta given the utilities and Sigma under the
/// Normal(0, 1/prior_precision I) prior. Posterior precision is
/// prior_precision I + sum_i X_i^T Omega X_i. noise_scale 0 returns the GLS
/// posterior mean.
inline Eigen::VectorXd gibbs_beta(const LatentState& z, const ChoiceDataset& data,
                                  const Eigen::MatrixXd& sigma,
                                  double prior_precision, const RngKey& key,
                                  double noise_scale = 1.0) {
  const int r = static_cast<int>(data.X.at(0).cols());
  const Eigen::LLT<Eigen::MatrixXd> sigma_llt(sigma);
  if (sigma_llt.info() != Eigen::Success)
    throw std::runtime_error("gibbs_beta: Sigma not SPD");
  const Eigen::MatrixXd omega =
      sigma_llt.solve(Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()));

  Eigen::MatrixXd prec =
      prior_precision * Eigen::MatrixXd::Identity(r, r);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(r);
  for (int i = 0; i < data.n_obs(); ++i) {
    const Eigen::MatrixXd& Xi = data.X[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd wX = omega * Xi;
    prec.noalias() += Xi.transpose() * wX;
    rhs.noalias() += wX.transpose() * z.block(i);
  }

  const Eigen::LLT<Eigen::MatrixXd> prec_llt(prec);
  if (prec_llt.info() != Eigen::Success)
    throw std::runtime_error("gibbs_beta: posterior precision not SPD");
  const Eigen::VectorXd mean = prec_llt.solve(rhs);

  RngStream rng(key.seed, StreamPurpose::beta_gibbs, key.step);
  Eigen::VectorXd eps(r);
  for (int k = 0; k < r; ++k) eps(k) = noise_scale * rng.normal();
  // x = mean + L^{-T} eps has covariance (L L^T)^{-1} = prec^{-1}
  return mean + prec_llt.matrixU().solve(eps);
}

/// One random-walk Metropolis update of the listed coordinates of x against
/// an arbitrary log target. wrap maps proposals back into the domain and must
/// preserve the target value. Returns the new state and the acceptance flag.
template <typename LogTarget, typename WrapFn>
std::pair<Eigen::VectorXd, bool> mh_block_update(
    const Eigen::VectorXd& x, const std::vector<int>& block, LogTarget&& log_target,
    WrapFn&& wrap, double proposal_sd, RngStream& proposal_rng,
    RngStream& accept_rng) {
  Eigen::VectorXd proposal = x;
  for (int idx : block) proposal(idx) += proposal_sd * proposal_rng.normal();
  proposal = wrap(proposal);
  const double log_ratio = log_target(proposal) - log_target(x);
  if (std::log(accept_rng.uniform()) < log_ratio) return {std::move(proposal), true};
  return {x, false};
}

/// Blocked random-walk update of the angles given utilities and beta. The
/// target is the Gaussian utility likelihood times the angle prior; the
/// outcome indicator does not depend on kappa. unit should identify the block
/// so blocks within one iteration use distinct streams.
inline std::pair<Eigen::VectorXd, bool> mh_kappa_block(
    const Eigen::VectorXd& kappa, const std::vector<int>& block,
    const LatentState& z, const ChoiceDataset& data, const MnpModel& model,
    const Eigen::VectorXd& beta, double proposal_sd, const RngKey& key,
    std::uint64_t unit) {
  RngStream proposal_rng(key.seed, StreamPurpose::mh_proposal, key.step, unit);
  RngStream accept_rng(key.seed, StreamPurpose::mh_accept, key.step, unit);
  auto log_target = [&](const Eigen::VectorXd& k) {
    const FactorCovariance fc = sigma_from_angles(k, model.spec());
    return MnpModel::gaussian_log_likelihood(beta, fc.Sigma, data, z) +
           model.log_kappa_prior(k);
  };
  return mh_block_update(
      kappa, block, log_target,
      [](const Eigen::VectorXd& k) { return wrap_angles(k); }, proposal_sd,
      proposal_rng, accept_rng);
}

struct ExactMcmcResult {
  ChainOutput chain;
  std::vector<double> acceptance_rates;  // post-adaptation, per block
  std::vector<double> final_proposal_sd;
};

/// Exact data-augmentation sampler: per iteration one full utility sweep,
/// a conjugate beta draw, then one Metropolis update per angle block.
/// Proposal scales adapt toward the 25-40% acceptance window during
/// adapt_until iterations, then freeze. Starts at beta = 0 and the
/// equicorrelated angles.
inline ExactMcmcResult run_exact_mcmc(const ChoiceDataset& data,
                                      const MnpSpec& spec,
                                      const SamplerConfig& config, MhConfig mh) {
  MnpModel model(spec, data);
  const ModelDimensions dims = model.dimensions();
  config.validate(dims.n_obs);
  mh.validate(spec.angle_dim());
  const std::size_t n_blocks = mh.blocks.size();

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(spec.n_regressors);
  Eigen::VectorXd kappa = equicorrelated_angles(spec);
  LatentState z = model.initial_latents();

  ChainOutput out;
  out.config_echo = config;
  out.draws.resize(config.retained_rows(), dims.parameter_dim);

  std::vector<std::int64_t> window_accepts(n_blocks, 0);
  std::vector<std::int64_t> frozen_accepts(n_blocks, 0);
  std::int64_t frozen_iters = 0;

  const auto t0 = std::chrono::steady_clock::now();
  double latent_seconds = 0.0;
  std::int64_t filled = 0;

  for (std::int64_t k = 0; k < config.iterations; ++k) {
    const FactorCovariance fc = sigma_from_angles(kappa, spec);
    const Eigen::MatrixXd omega = MnpModel::inverse_spd(fc.Sigma);

    const auto l0 = std::chrono::steady_clock::now();
    gibbs_sweep_utilities(beta, omega, data, z, model.all_indices(), config.seed,
                          static_cast<std::uint64_t>(k));
    latent_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - l0)
            .count();

    beta = gibbs_beta(z, data, fc.Sigma, model.beta_prior_precision(),
                      RngKey{config.seed, static_cast<std::uint64_t>(k)});

    const bool adapting = k < mh.adapt_until;
    for (std::size_t b = 0; b < n_blocks; ++b) {
      auto [next, accepted] = mh_kappa_block(
          kappa, mh.blocks[b], z, data, model, beta, mh.proposal_sd[b],
          RngKey{config.seed, static_cast<std::uint64_t>(k)},
          static_cast<std::uint64_t>(b));
      kappa = std::move(next);
      if (accepted) ++window_accepts[b];
      if (!adapting && accepted) ++frozen_accepts[b];
    }
    if (!adapting) ++frozen_iters;

    // nudge scales toward the 25-40% acceptance window, frozen after burn-in
    if (adapting && (k + 1) % 100 == 0) {
      for (std::size_t b = 0; b < n_blocks; ++b) {
        const double rate = static_cast<double>(window_accepts[b]) / 100.0;
        if (rate < 0.25) mh.proposal_sd[b] *= 0.8;
        else if (rate > 0.40) mh.proposal_sd[b] *= 1.25;
        window_accepts[b] = 0;
      }
    } else if (!adapting && (k + 1) % 100 == 0) {
      for (auto& w : window_accepts) w = 0;
    }

    if (k >= config.burn_in) {
      const std::int64_t idx = k - config.burn_in;
      if ((idx + 1) % config.thin == 0) {
        out.draws.row(filled).head(spec.n_regressors) = beta.transpose();
        out.draws.row(filled).tail(spec.angle_dim()) = kappa.transpose();
        ++filled;
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

  ExactMcmcResult result;
  result.chain = std::move(out);
  result.final_proposal_sd = mh.proposal_sd;
  result.acceptance_rates.resize(n_blocks, 0.0);
  for (std::size_t b = 0; b < n_blocks; ++b)
    result.acceptance_rates[b] =
        frozen_iters > 0
            ? static_cast<double>(frozen_accepts[b]) / static_cast<double>(frozen_iters)
            : 0.0;
  return result;
}

}  // namespace hula
