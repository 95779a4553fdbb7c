#pragma once

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "strnpga/str.hpp"

namespace strnpga {

/// 48 five-minute intervals per day, 244 trading days.
inline constexpr int kIntervalsPerYear = 48 * 244;

/// Above this size spectral norms fall back to power iteration.
inline constexpr Eigen::Index kDenseNormLimit = 1000;

/// ||A||_2 of a symmetric matrix.
double symmetric_spectral_norm(const Eigen::MatrixXd& A);

/// ||Sigma_hat - Sigma||_2 / ||Sigma||_2.
double relative_spectral_error(const Eigen::MatrixXd& Sigma_hat,
                               const Eigen::MatrixXd& Sigma);

/// max{f - f_ref, 0} / max{|f_ref|, 1e-12}.
double objective_gap(double f_hat, double f_ref);

struct GapReport {
  double model_gap = 0.0;
  double full_model_gap = 0.0;
};

struct PortfolioStats {
  double annualized_return = 0.0;  // percent
  double annualized_vol = 0.0;     // percent
  int intervals_per_year = kIntervalsPerYear;
};

/// Simple (non-compounded) annualization of per-interval portfolio returns.
PortfolioStats annualize(const std::vector<double>& interval_returns,
                         int intervals_per_year = kIntervalsPerYear);

/// w^T r_t for each column r_t of `returns`.
std::vector<double> portfolio_returns(const Eigen::VectorXd& w,
                                      const Eigen::MatrixXd& returns);

struct ConditioningReport {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double kappa = std::numeric_limits<double>::infinity();
  bool infinite = true;
  bool closed_form = false;
};

/// Extreme eigenvalues and kappa of L_eff L_eff^T + gamma I. STR models use
/// the stored singular values; other kinds fall back to a dense solve.
ConditioningReport conditioning_report(const FactorModel& model);

/// Dense report for an explicit symmetric matrix.
ConditioningReport conditioning_report(const Eigen::MatrixXd& Sigma);

}  // namespace strnpga
