#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hula/mnp.hpp"

namespace hula {

/// Per-parameter effective sample size at a fixed autocorrelation truncation.
struct EssReport {
  Eigen::VectorXd ess;                // in (0, 2K]
  Eigen::VectorXd ess_per_iteration;  // ess / chain length
  int max_lag = 0;
};

/// ESS = K / (1 + 2 sum_{l<=max_lag} rho_l) per column, with the biased (1/K)
/// autocovariance normalization and no adaptive truncation. Non-positive
/// denominators are floored at 1/K and the result capped at 2K; a
/// zero-variance column reports ESS 1.
inline EssReport effective_sample_size(const Eigen::MatrixXd& draws,
                                       int max_lag = 1000) {
  const Eigen::Index K = draws.rows();
  if (max_lag < 1) throw std::invalid_argument("effective_sample_size: max_lag < 1");
  if (K <= max_lag)
    throw std::invalid_argument("effective_sample_size: series shorter than max_lag");

  EssReport report;
  report.max_lag = max_lag;
  report.ess.resize(draws.cols());
  report.ess_per_iteration.resize(draws.cols());
  const double Kd = static_cast<double>(K);

  for (Eigen::Index c = 0; c < draws.cols(); ++c) {
    const Eigen::VectorXd x =
        draws.col(c).array() - draws.col(c).mean();
    const double c0 = x.squaredNorm() / Kd;
    double ess = 1.0;
    if (c0 > 0.0) {
      double acc = 0.0;
      for (int l = 1; l <= max_lag; ++l) {
        const double cl = x.head(K - l).dot(x.tail(K - l)) / Kd;
        acc += cl / c0;
      }
      double denom = 1.0 + 2.0 * acc;
      if (denom < 1.0 / Kd) denom = 1.0 / Kd;
      ess = std::min(Kd / denom, 2.0 * Kd);
    }
    report.ess(c) = ess;
    report.ess_per_iteration(c) = ess / Kd;
  }
  return report;
}

/// Mean log predicted probability of the realized outcomes and the fraction
/// of observations whose modal predicted category is the realized one.
struct PredictiveScore {
  double log_score = 0.0;  // <= 0
  double hit_rate = 0.0;   // in [0, 1]
};

/// prob_table holds one probability row per observation (categories in
/// columns). Rows must sum to 1 within 1e-8; probabilities are floored at
/// 1e-12 before the log. Modal ties go to the lowest index.
inline PredictiveScore predictive_scores(const Eigen::MatrixXd& prob_table,
                                         const Eigen::VectorXi& y) {
  if (prob_table.rows() != y.size())
    throw std::invalid_argument("predictive_scores: row/outcome mismatch");
  if (prob_table.rows() == 0)
    throw std::invalid_argument("predictive_scores: empty input");
  PredictiveScore score;
  for (Eigen::Index i = 0; i < prob_table.rows(); ++i) {
    if (std::abs(prob_table.row(i).sum() - 1.0) > 1e-8)
      throw std::invalid_argument("predictive_scores: row does not sum to 1");
    if (y(i) < 0 || y(i) >= prob_table.cols())
      throw std::invalid_argument("predictive_scores: outcome out of range");
    score.log_score += std::log(std::max(prob_table(i, y(i)), 1e-12));
    Eigen::Index modal = 0;
    prob_table.row(i).maxCoeff(&modal);
    if (modal == y(i)) score.hit_rate += 1.0;
  }
  const double n = static_cast<double>(prob_table.rows());
  score.log_score /= n;
  score.hit_rate /= n;
  return score;
}

/// Constant forecast: the most frequent training category (ties to the
/// lowest index) plus the empirical category frequencies as its probability
/// row.
struct NaivePrediction {
  int category = 0;
  Eigen::VectorXd probabilities;
};

inline NaivePrediction naive_predictor(const Eigen::VectorXi& y_train,
                                       int n_categories = 0) {
  if (y_train.size() == 0)
    throw std::invalid_argument("naive_predictor: empty training outcomes");
  if (n_categories <= 0) n_categories = y_train.maxCoeff() + 1;
  NaivePrediction pred;
  pred.probabilities = Eigen::VectorXd::Zero(n_categories);
  for (Eigen::Index i = 0; i < y_train.size(); ++i) {
    if (y_train(i) < 0 || y_train(i) >= n_categories)
      throw std::invalid_argument("naive_predictor: outcome out of range");
    pred.probabilities(y_train(i)) += 1.0;
  }
  pred.probabilities /= static_cast<double>(y_train.size());
  Eigen::Index modal = 0;
  pred.probabilities.maxCoeff(&modal);
  pred.category = static_cast<int>(modal);
  return pred;
}

/// Predictive category probabilities as the target alternative's log price
/// moves over a grid, all other attributes held at base_attributes. Returns
/// one row per grid point: the price followed by the J+1 probabilities. A
/// singleton grid reproduces a direct choice_probabilities call.
inline Eigen::MatrixXd probability_curve(const Eigen::MatrixXd& theta_draws,
                                         const MnpSpec& spec,
                                         const Eigen::MatrixXd& base_attributes,
                                         int price_column,
                                         const Eigen::VectorXd& price_grid,
                                         int target_alternative,
                                         std::uint64_t seed) {
  if (target_alternative < 1 || target_alternative > spec.n_alternatives)
    throw std::invalid_argument("probability_curve: bad target alternative");
  if (price_column < 0 || price_column >= spec.n_regressors)
    throw std::invalid_argument("probability_curve: bad price column");
  Eigen::MatrixXd curve(price_grid.size(), spec.n_alternatives + 2);
  for (Eigen::Index g = 0; g < price_grid.size(); ++g) {
    Eigen::MatrixXd X = base_attributes;
    X(target_alternative - 1, price_column) = price_grid(g);
    curve(g, 0) = price_grid(g);
    curve.row(g).tail(spec.n_alternatives + 1) =
        choice_probabilities(theta_draws, spec, X, seed,
                             static_cast<std::uint64_t>(g))
            .transpose();
  }
  return curve;
}

}  // namespace hula
