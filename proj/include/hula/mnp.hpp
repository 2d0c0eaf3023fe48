#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hula/model.hpp"
#include "hula/rng.hpp"
#include "hula/thread.hpp"
#include "hula/types.hpp"

namespace hula {

/// Shape of a multinomial probit instance. Category 0 is the base outcome
/// with utility fixed at 0; the J alternatives carry latent utilities.
/// J = 1 is the binary probit special case.
struct MnpSpec {
  int n_alternatives = 0;  // J >= 1
  int n_factors = 0;       // p in [1, J]
  int n_regressors = 0;    // r >= 1

  void validate() const {
    if (n_alternatives < 1 || n_factors < 1 || n_factors > n_alternatives ||
        n_regressors < 1)
      throw std::invalid_argument("MnpSpec: invalid shape");
  }

  // dimension of the unit vector stacking [vec(B), D_diag]
  int stacked_dim() const { return n_alternatives * (n_factors + 1); }
  int angle_dim() const { return stacked_dim() - 1; }
  int theta_dim() const { return n_regressors + angle_dim(); }
};

/// Observed choices plus per-observation regressor matrices (each J x r).
struct ChoiceDataset {
  Eigen::VectorXi y;                // entries in {0, ..., J}
  std::vector<Eigen::MatrixXd> X;   // one J x r matrix per observation

  int n_obs() const { return static_cast<int>(X.size()); }

  void validate(const MnpSpec& spec) const {
    if (y.size() != static_cast<Eigen::Index>(X.size()))
      throw std::invalid_argument("ChoiceDataset: y/X length mismatch");
    for (const auto& Xi : X)
      if (Xi.rows() != spec.n_alternatives || Xi.cols() != spec.n_regressors ||
          !Xi.allFinite())
        throw std::invalid_argument("ChoiceDataset: bad regressor matrix");
    for (Eigen::Index i = 0; i < y.size(); ++i)
      if (y(i) < 0 || y(i) > spec.n_alternatives)
        throw std::invalid_argument("ChoiceDataset: outcome out of range");
  }
};

/// Factor-structured utility covariance Sigma = B B^T + diag(D_diag)^2,
/// trace-normalized to 1 by the spherical construction.
struct FactorCovariance {
  Eigen::MatrixXd B;       // J x p loadings
  Eigen::VectorXd D_diag;  // J nonnegative idiosyncratic scales
  Eigen::MatrixXd Sigma;   // J x J symmetric positive definite
};

/// Hyperspherical map: angles (d-1 of them) to a unit vector in R^d.
/// v_1 = cos k_1, v_j = cos k_j * prod_{l<j} sin k_l, v_d = prod sin k_l.
/// Defined for any real angles; the canonical domain is [0, pi] for all but
/// the last angle and [0, 2 pi) for the last.
inline Eigen::VectorXd unit_vector_from_angles(const Eigen::VectorXd& kappa) {
  const Eigen::Index d = kappa.size() + 1;
  Eigen::VectorXd v(d);
  double prod = 1.0;
  for (Eigen::Index k = 0; k + 1 < d; ++k) {
    v(k) = std::cos(kappa(k)) * prod;
    prod *= std::sin(kappa(k));
  }
  v(d - 1) = prod;
  return v;
}

/// Inverse of unit_vector_from_angles for unit-norm v, returning angles in
/// the canonical domain.
inline Eigen::VectorXd angles_from_unit_vector(const Eigen::VectorXd& v) {
  const Eigen::Index d = v.size();
  if (d < 2) throw std::invalid_argument("angles_from_unit_vector: need d >= 2");
  Eigen::VectorXd kappa(d - 1);
  // suffix 2-norms computed backwards for stability
  Eigen::VectorXd tail_norm(d);
  tail_norm(d - 1) = std::abs(v(d - 1));
  for (Eigen::Index k = d - 2; k >= 0; --k)
    tail_norm(k) = std::hypot(v(k), tail_norm(k + 1));
  for (Eigen::Index k = 0; k + 2 < d; ++k)
    kappa(k) = std::atan2(tail_norm(k + 1), v(k));
  double last = std::atan2(v(d - 1), v(d - 2));
  if (last < 0.0) last += 2.0 * 3.14159265358979323846;
  kappa(d - 2) = last;
  return kappa;
}

/// Maps arbitrary real angles to the canonical domain without moving the
/// point on the sphere: wrap(k) has unit_vector_from_angles(wrap(k)) equal to
/// unit_vector_from_angles(k).
inline Eigen::VectorXd wrap_angles(const Eigen::VectorXd& kappa) {
  return angles_from_unit_vector(unit_vector_from_angles(kappa));
}

/// Jacobian d v / d kappa, size d x (d-1). Products are formed directly so
/// no division by sin(kappa) occurs; safe at the domain boundaries.
inline Eigen::MatrixXd unit_vector_jacobian(const Eigen::VectorXd& kappa) {
  const Eigen::Index d = kappa.size() + 1;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(d, d - 1);
  for (Eigen::Index k = 0; k + 1 < d; ++k) {
    // v_k = cos k_k * prod_{j<k} sin k_j
    for (Eigen::Index l = 0; l <= k; ++l) {
      double prod = 1.0;
      for (Eigen::Index j = 0; j < k; ++j)
        if (j != l) prod *= std::sin(kappa(j));
      jac(k, l) = (l == k) ? -std::sin(kappa(k)) * prod
                           : std::cos(kappa(k)) * std::cos(kappa(l)) * prod;
    }
  }
  for (Eigen::Index l = 0; l + 1 < d; ++l) {
    double prod = 1.0;
    for (Eigen::Index j = 0; j + 1 < d; ++j)
      if (j != l) prod *= std::sin(kappa(j));
    jac(d - 1, l) = std::cos(kappa(l)) * prod;
  }
  return jac;
}

/// Builds the factor covariance from angles: the unit vector fills B
/// column-major from its first J*p entries and D_diag (absolute values) from
/// the last J. trace(Sigma) = ||v||^2 = 1 by construction.
inline FactorCovariance sigma_from_angles(const Eigen::VectorXd& kappa,
                                          const MnpSpec& spec) {
  if (kappa.size() != spec.angle_dim())
    throw std::invalid_argument("sigma_from_angles: angle dimension mismatch");
  const Eigen::VectorXd v = unit_vector_from_angles(kappa);
  FactorCovariance fc;
  fc.B = Eigen::Map<const Eigen::MatrixXd>(v.data(), spec.n_alternatives,
                                           spec.n_factors);
  fc.D_diag = v.tail(spec.n_alternatives).cwiseAbs();
  fc.Sigma = fc.B * fc.B.transpose();
  fc.Sigma.diagonal() += v.tail(spec.n_alternatives).cwiseAbs2();
  return fc;
}

/// Equicorrelated covariance (I + ones)/2 on the J alternatives; the implied
/// preconditioner target for the beta block.
inline Eigen::MatrixXd equicorrelated_sigma(int n_alternatives) {
  return 0.5 * (Eigen::MatrixXd::Identity(n_alternatives, n_alternatives) +
                Eigen::MatrixXd::Ones(n_alternatives, n_alternatives));
}

/// Angles whose covariance is the trace-normalized equicorrelated matrix
/// (I + ones)/(2J): first factor column and D_diag both ones/sqrt(2J),
/// remaining factor columns zero. Used as the kappa prior center and as the
/// default chain initialization.
inline Eigen::VectorXd equicorrelated_angles(const MnpSpec& spec) {
  const int J = spec.n_alternatives;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(spec.stacked_dim());
  const double c = 1.0 / std::sqrt(2.0 * static_cast<double>(J));
  v.head(J).setConstant(c);
  v.tail(J).setConstant(c);
  return angles_from_unit_vector(v);
}

/// Outcome rule: category 0 when every utility is negative, otherwise the
/// (1-based) argmax alternative. Exact ties go to the lowest index.
inline int outcome_from_utilities(const Eigen::VectorXd& z_i) {
  int best = 0;
  double best_val = z_i(0);
  for (Eigen::Index j = 1; j < z_i.size(); ++j)
    if (z_i(j) > best_val) {
      best_val = z_i(j);
      best = static_cast<int>(j);
    }
  return best_val < 0.0 ? 0 : best + 1;
}

/// One Geweke-style sweep of univariate truncated-normal updates over the
/// listed observations. omega is Sigma^{-1}. Each z_ij is drawn from its
/// exact Normal full conditional truncated to the region that keeps
/// outcome_from_utilities(z_i) = y_i. Throws if a listed block violates its
/// constraint on entry.
inline void gibbs_sweep_utilities(const Eigen::VectorXd& beta,
                                  const Eigen::MatrixXd& omega,
                                  const ChoiceDataset& data, LatentState& z,
                                  const std::vector<int>& index_set,
                                  std::uint64_t seed, std::uint64_t step) {
  const int J = static_cast<int>(omega.rows());
  // constraint check happens before the parallel region; worker threads must
  // not throw
  for (int i : index_set)
    if (outcome_from_utilities(z.block(i)) != data.y(i))
      throw std::runtime_error("gibbs_sweep_utilities: constraint violated");
  parallel_for(static_cast<int>(index_set.size()), [&](int pos) {
    const int i = index_set[static_cast<std::size_t>(pos)];
    auto zi = z.block(i);
    RngStream rng(seed, StreamPurpose::latent_sweep, step,
                  static_cast<std::uint64_t>(i));
    const Eigen::VectorXd mu = data.X[static_cast<std::size_t>(i)] * beta;
    const int yi = data.y(i);
    for (int j = 0; j < J; ++j) {
      const double var_j = 1.0 / omega(j, j);
      // conditional mean given the other coordinates of this block
      double cross = 0.0;
      for (int k = 0; k < J; ++k)
        if (k != j) cross += omega(j, k) * (zi(k) - mu(k));
      const double mean_j = mu(j) - var_j * cross;
      const double sd_j = std::sqrt(var_j);
      // rounding in the affine back-transform can land a draw exactly on its
      // truncation bound; clamp one ulp inside to keep the constraint strict
      if (yi == 0) {
        zi(j) = std::min(rng.normal_upper_truncated(mean_j, sd_j, 0.0),
                         -std::numeric_limits<double>::denorm_min());
      } else if (j == yi - 1) {
        double lower = 0.0;
        for (int k = 0; k < J; ++k)
          if (k != j) lower = std::max(lower, zi(k));
        zi(j) = std::max(rng.normal_lower_truncated(mean_j, sd_j, lower),
                         std::nextafter(lower, std::numeric_limits<double>::infinity()));
      } else {
        const double upper = zi(yi - 1);
        zi(j) = std::min(rng.normal_upper_truncated(mean_j, sd_j, upper),
                         std::nextafter(upper, -std::numeric_limits<double>::infinity()));
      }
    }
  });
}

/// Multinomial probit with latent Gaussian utilities:
///   z_i = X_i beta + eps_i, eps_i ~ Normal(0, Sigma(kappa)),
///   y_i determined by the sign/argmax of z_i.
/// Priors: beta ~ Normal(0, 1/beta_prior_precision * I), kappa ~
/// Normal(kappa_prior_mean, kappa_prior_sd^2 * I) on the canonical angle
/// domain. theta stacks (beta, kappa).
class MnpModel {
 public:
  MnpModel(MnpSpec spec, ChoiceDataset data, double beta_prior_precision = 10.0,
           Eigen::VectorXd kappa_prior_mean = Eigen::VectorXd(),
           double kappa_prior_sd = 1.0)
      : spec_(spec),
        data_(std::move(data)),
        beta_prior_precision_(beta_prior_precision),
        kappa_prior_mean_(std::move(kappa_prior_mean)),
        kappa_prior_sd_(kappa_prior_sd) {
    spec_.validate();
    data_.validate(spec_);
    if (data_.n_obs() == 0)
      throw std::invalid_argument("MnpModel: empty dataset");
    if (kappa_prior_mean_.size() == 0)
      kappa_prior_mean_ = equicorrelated_angles(spec_);
    if (kappa_prior_mean_.size() != spec_.angle_dim())
      throw std::invalid_argument("MnpModel: bad kappa prior mean");
    if (!(beta_prior_precision_ > 0.0) || !(kappa_prior_sd_ > 0.0))
      throw std::invalid_argument("MnpModel: bad prior scales");
  }

  const MnpSpec& spec() const { return spec_; }
  const ChoiceDataset& dataset() const { return data_; }
  double beta_prior_precision() const { return beta_prior_precision_; }
  const Eigen::VectorXd& kappa_prior_mean() const { return kappa_prior_mean_; }
  double kappa_prior_sd() const { return kappa_prior_sd_; }

  Eigen::VectorXd beta_of(const ParameterVector& theta) const {
    return theta.head(spec_.n_regressors);
  }
  Eigen::VectorXd kappa_of(const ParameterVector& theta) const {
    return theta.tail(spec_.angle_dim());
  }

  ModelDimensions dimensions() const {
    return ModelDimensions{.parameter_dim = spec_.theta_dim(),
                           .latent_per_obs = spec_.n_alternatives,
                           .n_obs = data_.n_obs()};
  }

  Eigen::VectorXd log_prior_gradient(const ParameterVector& theta) const {
    check_theta(theta);
    Eigen::VectorXd g(spec_.theta_dim());
    g.head(spec_.n_regressors) =
        -beta_prior_precision_ * theta.head(spec_.n_regressors);
    g.tail(spec_.angle_dim()) =
        -(theta.tail(spec_.angle_dim()) - kappa_prior_mean_) /
        (kappa_prior_sd_ * kappa_prior_sd_);
    return g;
  }

  void sample_latents(const ParameterVector& theta, LatentState& z,
                      const RngKey& key) const {
    sample_latents_subset(theta, z, all_indices(), key);
  }

  void sample_latents_subset(const ParameterVector& theta, LatentState& z,
                             const std::vector<int>& indices,
                             const RngKey& key) const {
    check_theta(theta);
    const FactorCovariance fc = sigma_from_angles(kappa_of(theta), spec_);
    const Eigen::MatrixXd omega = inverse_spd(fc.Sigma);
    gibbs_sweep_utilities(beta_of(theta), omega, data_, z, indices, key.seed,
                          key.step);
  }

  Eigen::VectorXd augmented_gradient(const ParameterVector& theta,
                                     const LatentState& z) const {
    return augmented_gradient_subset(theta, z, all_indices());
  }

  /// Likelihood gradient over the listed observations: the beta block is
  /// sum_i X_i^T Omega (z_i - X_i beta); the angle block is the chain rule
  /// of the Gaussian log-density through Sigma = B B^T + D^2 and the
  /// spherical map.
  Eigen::VectorXd augmented_gradient_subset(const ParameterVector& theta,
                                            const LatentState& z,
                                            const std::vector<int>& indices) const {
    check_theta(theta);
    const int J = spec_.n_alternatives;
    const int p = spec_.n_factors;
    const Eigen::VectorXd beta = beta_of(theta);
    const Eigen::VectorXd kappa = kappa_of(theta);
    const Eigen::VectorXd v = unit_vector_from_angles(kappa);
    const FactorCovariance fc = sigma_from_angles(kappa, spec_);
    const Eigen::MatrixXd omega = inverse_spd(fc.Sigma);

    Eigen::VectorXd g_beta = Eigen::VectorXd::Zero(spec_.n_regressors);
    Eigen::MatrixXd resid_outer = Eigen::MatrixXd::Zero(J, J);
    for (int i : indices) {
      const Eigen::MatrixXd& Xi = data_.X[static_cast<std::size_t>(i)];
      const Eigen::VectorXd delta = z.block(i) - Xi * beta;
      const Eigen::VectorXd wdelta = omega * delta;
      g_beta.noalias() += Xi.transpose() * wdelta;
      resid_outer.noalias() += delta * delta.transpose();
    }

    const double count = static_cast<double>(indices.size());
    const Eigen::MatrixXd g_sigma =
        -0.5 * count * omega + 0.5 * omega * resid_outer * omega;

    // gradient wrt the stacked vector v = [vec(B), D slots]
    Eigen::VectorXd g_v(spec_.stacked_dim());
    const Eigen::MatrixXd g_b = 2.0 * g_sigma * fc.B;
    g_v.head(J * p) = Eigen::Map<const Eigen::VectorXd>(g_b.data(), J * p);
    g_v.tail(J) = 2.0 * g_sigma.diagonal().cwiseProduct(v.tail(J));

    Eigen::VectorXd g(spec_.theta_dim());
    g.head(spec_.n_regressors) = g_beta;
    g.tail(spec_.angle_dim()) = unit_vector_jacobian(kappa).transpose() * g_v;
    return g;
  }

  /// grad_z of the Gaussian part of log p(y, z | theta): block i is
  /// -Omega (z_i - X_i beta). The outcome indicator is flat on its support,
  /// so this is the density gradient almost everywhere.
  Eigen::VectorXd latent_gradient(const ParameterVector& theta,
                                  const LatentState& z) const {
    check_theta(theta);
    const Eigen::VectorXd beta = beta_of(theta);
    const FactorCovariance fc = sigma_from_angles(kappa_of(theta), spec_);
    const Eigen::MatrixXd omega = inverse_spd(fc.Sigma);
    const int J = spec_.n_alternatives;
    Eigen::VectorXd g(static_cast<Eigen::Index>(data_.n_obs()) * J);
    for (int i = 0; i < data_.n_obs(); ++i) {
      const Eigen::VectorXd delta =
          z.block(i) - data_.X[static_cast<std::size_t>(i)] * beta;
      g.segment(static_cast<Eigen::Index>(i) * J, J) = -(omega * delta);
    }
    return g;
  }

  /// Gaussian part of log p(y, z | theta); the outcome indicator contributes
  /// no theta dependence and is omitted.
  double log_augmented(const ParameterVector& theta, const LatentState& z) const {
    check_theta(theta);
    const Eigen::VectorXd beta = beta_of(theta);
    const FactorCovariance fc = sigma_from_angles(kappa_of(theta), spec_);
    return gaussian_log_likelihood(beta, fc.Sigma, data_, z);
  }

  LatentState initial_latents() const {
    const int J = spec_.n_alternatives;
    Eigen::VectorXd values(static_cast<Eigen::Index>(data_.n_obs()) * J);
    for (int i = 0; i < data_.n_obs(); ++i) {
      auto block = values.segment(static_cast<Eigen::Index>(i) * J, J);
      block.setConstant(-1.0);
      if (data_.y(i) > 0) block(data_.y(i) - 1) = 1.0;
    }
    return LatentState(std::move(values), J);
  }

  void constrain(ParameterVector& theta) const {
    theta.tail(spec_.angle_dim()) = wrap_angles(theta.tail(spec_.angle_dim()));
  }

  /// Draws (y, z) from the generative law at theta for the given regressor
  /// matrices. Per-observation streams keyed by i.
  std::pair<Eigen::VectorXi, Eigen::MatrixXd> simulate(
      const ParameterVector& theta, const std::vector<Eigen::MatrixXd>& X,
      std::uint64_t seed) const {
    check_theta(theta);
    const int J = spec_.n_alternatives;
    const Eigen::VectorXd beta = beta_of(theta);
    const FactorCovariance fc = sigma_from_angles(kappa_of(theta), spec_);
    const Eigen::MatrixXd chol = fc.Sigma.llt().matrixL();
    const int n = static_cast<int>(X.size());
    Eigen::VectorXi y(n);
    Eigen::MatrixXd z(n, J);
    parallel_for(n, [&](int i) {
      RngStream rng(seed, StreamPurpose::simulate, 0,
                    static_cast<std::uint64_t>(i));
      Eigen::VectorXd eps(J);
      for (int j = 0; j < J; ++j) eps(j) = rng.normal();
      const Eigen::VectorXd zi =
          X[static_cast<std::size_t>(i)] * beta + chol * eps;
      z.row(i) = zi.transpose();
      y(i) = outcome_from_utilities(zi);
    });
    return {std::move(y), std::move(z)};
  }

  /// Shared helper: joint Gaussian log-likelihood of the utilities,
  /// sum_i log N(z_i; X_i beta, Sigma), with normalizing constants.
  static double gaussian_log_likelihood(const Eigen::VectorXd& beta,
                                        const Eigen::MatrixXd& sigma,
                                        const ChoiceDataset& data,
                                        const LatentState& z) {
    const int J = static_cast<int>(sigma.rows());
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("gaussian_log_likelihood: Sigma not SPD");
    double log_det = 0.0;
    for (int j = 0; j < J; ++j)
      log_det += 2.0 * std::log(llt.matrixL()(j, j));
    const double n = static_cast<double>(data.n_obs());
    double quad = 0.0;
    for (int i = 0; i < data.n_obs(); ++i) {
      const Eigen::VectorXd delta =
          z.block(i) - data.X[static_cast<std::size_t>(i)] * beta;
      quad += delta.dot(llt.solve(delta));
    }
    constexpr double kLog2Pi = 1.8378770664093453;
    return -0.5 * n * (static_cast<double>(J) * kLog2Pi + log_det) - 0.5 * quad;
  }

  /// Gaussian log prior of the angle block.
  double log_kappa_prior(const Eigen::VectorXd& kappa) const {
    const double sd2 = kappa_prior_sd_ * kappa_prior_sd_;
    return -0.5 * (kappa - kappa_prior_mean_).squaredNorm() / sd2;
  }

  std::vector<int> all_indices() const {
    std::vector<int> all(static_cast<std::size_t>(data_.n_obs()));
    for (int i = 0; i < data_.n_obs(); ++i) all[static_cast<std::size_t>(i)] = i;
    return all;
  }

  static Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd& sigma) {
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("MnpModel: Sigma not SPD");
    return llt.solve(Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()));
  }

 private:
  void check_theta(const ParameterVector& theta) const {
    if (theta.size() != spec_.theta_dim() || !theta.allFinite())
      throw std::domain_error("MnpModel: bad theta");
  }

  MnpSpec spec_;
  ChoiceDataset data_;
  double beta_prior_precision_;
  Eigen::VectorXd kappa_prior_mean_;
  double kappa_prior_sd_;
};

static_assert(LatentVariableModel<MnpModel>);
static_assert(SubsamplableModel<MnpModel>);
static_assert(JointGradientModel<MnpModel>);

/// Posterior predictive category probabilities for one regressor matrix:
/// per retained draw, simulate one utility vector and tally outcomes. The
/// modal entry absorbs rounding so the result sums to 1 exactly. unit keys
/// the randomness so distinct prediction points get independent streams.
inline Eigen::VectorXd choice_probabilities(const Eigen::MatrixXd& theta_draws,
                                            const MnpSpec& spec,
                                            const Eigen::MatrixXd& X_i,
                                            std::uint64_t seed,
                                            std::uint64_t unit = 0) {
  if (theta_draws.rows() < 1)
    throw std::invalid_argument("choice_probabilities: no draws");
  if (theta_draws.cols() != spec.theta_dim())
    throw std::invalid_argument("choice_probabilities: draw dimension mismatch");
  if (X_i.rows() != spec.n_alternatives || X_i.cols() != spec.n_regressors)
    throw std::invalid_argument("choice_probabilities: bad regressor matrix");
  const int J = spec.n_alternatives;
  const int r = spec.n_regressors;
  std::vector<std::int64_t> counts(static_cast<std::size_t>(J) + 1, 0);
  for (Eigen::Index k = 0; k < theta_draws.rows(); ++k) {
    const Eigen::VectorXd beta = theta_draws.row(k).head(r).transpose();
    const FactorCovariance fc = sigma_from_angles(
        theta_draws.row(k).tail(spec.angle_dim()).transpose(), spec);
    const Eigen::MatrixXd chol = fc.Sigma.llt().matrixL();
    RngStream rng(seed, StreamPurpose::predictive, static_cast<std::uint64_t>(k),
                  unit);
    Eigen::VectorXd eps(J);
    for (int j = 0; j < J; ++j) eps(j) = rng.normal();
    const Eigen::VectorXd zi = X_i * beta + chol * eps;
    ++counts[static_cast<std::size_t>(outcome_from_utilities(zi))];
  }
  const double total = static_cast<double>(theta_draws.rows());
  Eigen::VectorXd probs(J + 1);
  for (int c = 0; c <= J; ++c)
    probs(c) = static_cast<double>(counts[static_cast<std::size_t>(c)]) / total;
  // absorb summation rounding into the last occupied category: zeros after
  // it add exactly, so the left-to-right sum can always reach exactly 1
  int adjust = 0;
  for (int c = 0; c <= J; ++c)
    if (counts[static_cast<std::size_t>(c)] > 0) adjust = c;
  for (int pass = 0; pass < 32; ++pass) {
    double s = 0.0;
    for (int c = 0; c <= J; ++c) s += probs(c);
    if (s == 1.0) break;
    probs(adjust) += 1.0 - s;
  }
  return probs;
}

/// Step-size preconditioner: beta entries are 0.99 over the diagonal of
/// (1/n) sum_i X_i^T Sigma_equi X_i with the equicorrelated covariance, and
/// every angle entry is 0.1.
inline Eigen::VectorXd default_preconditioner(const ChoiceDataset& data,
                                              const MnpSpec& spec) {
  data.validate(spec);
  if (data.n_obs() == 0)
    throw std::invalid_argument("default_preconditioner: empty dataset");
  const Eigen::MatrixXd sigma_equi = equicorrelated_sigma(spec.n_alternatives);
  Eigen::MatrixXd fisher_scale =
      Eigen::MatrixXd::Zero(spec.n_regressors, spec.n_regressors);
  for (const auto& Xi : data.X)
    fisher_scale.noalias() += Xi.transpose() * sigma_equi * Xi;
  fisher_scale /= static_cast<double>(data.n_obs());

  Eigen::VectorXd u(spec.theta_dim());
  for (int k = 0; k < spec.n_regressors; ++k) {
    const double d = fisher_scale(k, k);
    if (!(d > 0.0))
      throw std::invalid_argument("default_preconditioner: degenerate design");
    u(k) = 0.99 / d;
  }
  u.tail(spec.angle_dim()).setConstant(0.1);
  return u;
}

/// Intercept-plus-log-price regressor matrix: r = J + 1 columns, row j is
/// the j-th unit vector followed by that alternative's log price.
inline Eigen::MatrixXd intercept_logprice_design(int n_alternatives,
                                                 const Eigen::VectorXd& logprices) {
  if (logprices.size() != n_alternatives)
    throw std::invalid_argument("intercept_logprice_design: price length");
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n_alternatives, n_alternatives + 1);
  for (int j = 0; j < n_alternatives; ++j) {
    X(j, j) = 1.0;
    X(j, n_alternatives) = logprices(j);
  }
  return X;
}

}  // namespace hula
