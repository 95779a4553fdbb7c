#include "strnpga/metrics.hpp"

#include <cmath>
#include <numeric>

#include "strnpga/error.hpp"
#include "strnpga/random.hpp"
#include "strnpga/spectrum.hpp"

namespace strnpga {

double symmetric_spectral_norm(const Eigen::MatrixXd& A) {
  require(A.rows() == A.cols(), ErrorKind::Dimension, "spectral norm needs a square matrix");
  if (A.size() == 0) return 0.0;
  if (A.rows() <= kDenseNormLimit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
  }
  Rng rng(0x5eed);
  Eigen::VectorXd u = gaussian_vector(A.rows(), rng);
  u /= u.norm();
  double estimate = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd z = A * u;
    estimate = z.norm();
    if (estimate == 0.0) return 0.0;
    u = z / estimate;
  }
  return estimate;
}

double relative_spectral_error(const Eigen::MatrixXd& Sigma_hat,
                               const Eigen::MatrixXd& Sigma) {
  require(Sigma_hat.rows() == Sigma.rows() && Sigma_hat.cols() == Sigma.cols(),
          ErrorKind::Dimension, "relative_spectral_error: shapes differ");
  const double denom = symmetric_spectral_norm(Sigma);
  require(denom > 0.0, ErrorKind::Degenerate,
          "relative spectral error is undefined for Sigma = 0");
  return symmetric_spectral_norm(Sigma_hat - Sigma) / denom;
}

double objective_gap(double f_hat, double f_ref) {
  return std::max(f_hat - f_ref, 0.0) / std::max(std::abs(f_ref), 1e-12);
}

PortfolioStats annualize(const std::vector<double>& interval_returns,
                         int intervals_per_year) {
  require(interval_returns.size() >= 2, ErrorKind::Dimension,
          "annualized volatility needs at least two intervals");
  require(intervals_per_year > 0, ErrorKind::Argument,
          "intervals_per_year must be positive");
  const double count = static_cast<double>(interval_returns.size());
  const double mean =
      std::accumulate(interval_returns.begin(), interval_returns.end(), 0.0) / count;
  double ss = 0.0;
  for (double r : interval_returns) ss += (r - mean) * (r - mean);
  const double stdev = std::sqrt(ss / (count - 1.0));
  const double periods = static_cast<double>(intervals_per_year);
  PortfolioStats stats;
  stats.intervals_per_year = intervals_per_year;
  stats.annualized_return = mean * periods * 100.0;
  stats.annualized_vol = stdev * std::sqrt(periods) * 100.0;
  return stats;
}

std::vector<double> portfolio_returns(const Eigen::VectorXd& w,
                                      const Eigen::MatrixXd& returns) {
  require(w.size() == returns.rows(), ErrorKind::Dimension,
          "portfolio_returns: weight and panel sizes differ");
  const Eigen::VectorXd r = returns.transpose() * w;
  return to_std(r);
}

ConditioningReport conditioning_report(const Eigen::MatrixXd& Sigma) {
  require(Sigma.rows() == Sigma.cols() && Sigma.rows() > 0, ErrorKind::Dimension,
          "conditioning report needs a nonempty square matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Sigma, Eigen::EigenvaluesOnly);
  ConditioningReport rep;
  rep.lambda_min = eig.eigenvalues()(0);
  rep.lambda_max = eig.eigenvalues()(Sigma.rows() - 1);
  rep.infinite = rep.lambda_min <= 0.0;
  rep.kappa = rep.infinite ? std::numeric_limits<double>::infinity()
                           : rep.lambda_max / rep.lambda_min;
  return rep;
}

ConditioningReport conditioning_report(const FactorModel& model) {
  ConditioningReport rep;
  const double gamma = model.gamma();
  if (model.kind() == ModelKind::str) {
    std::vector<double> sigma;
    const auto& prov = model.provenance();
    if (prov.ell && !prov.sketched_singular_values.empty()) {
      sigma.assign(prov.sketched_singular_values.begin(),
                   prov.sketched_singular_values.begin() + *prov.ell);
    } else {
      sigma = to_std(thin_svd(model.L_eff()).S);
    }
    const double top = sigma.empty() ? 0.0 : sigma.front() * sigma.front();
    rep.lambda_max = top + gamma;
    rep.lambda_min = static_cast<Eigen::Index>(sigma.size()) < model.n()
                         ? gamma
                         : sigma.back() * sigma.back() + gamma;
    rep.kappa = rep.lambda_max / rep.lambda_min;
    rep.infinite = false;
    rep.closed_form = true;
    return rep;
  }
  if (model.columns() < model.n()) {
    const ThinSVD svd = thin_svd(model.L_eff());
    rep.lambda_max = svd.rank() > 0 ? svd.S(0) * svd.S(0) : 0.0;
    rep.lambda_min = 0.0;
    rep.infinite = true;
    return rep;
  }
  return conditioning_report(model.dense_covariance());
}

}  // namespace strnpga
