#pragma once

#include <vector>

#include <Eigen/Dense>

namespace strnpga {

inline constexpr double kDefaultRankTol = 1e-12;

struct ThinSVD {
  Eigen::MatrixXd U;  // rows x r, orthonormal columns
  Eigen::VectorXd S;  // r descending positive values
  Eigen::MatrixXd V;  // cols x r, orthonormal columns

  Eigen::Index rank() const noexcept { return S.size(); }
};

/// Thin SVD keeping singular values >= rank_tol * sigma_1.
ThinSVD thin_svd(const Eigen::MatrixXd& A, double rank_tol = kDefaultRankTol);

struct SpectrumReport {
  std::vector<double> singular_values;  // descending
  std::vector<double> eigenvalues;      // squares of singular_values
  std::vector<double> energy;           // cumulative explained variance
  Eigen::Index numerical_rank = 0;
  bool zero_energy = false;
};

/// Singular values of A (all of them, descending) plus derived diagnostics.
SpectrumReport spectrum_report(const Eigen::MatrixXd& A,
                               double rank_tol = kDefaultRankTol);

/// E(r) = sum_{k<=r} lambda_k / sum_k lambda_k. An all-zero spectrum yields
/// an all-zero array and sets *zero_energy when given.
std::vector<double> cumulative_energy(const std::vector<double>& eigenvalues,
                                      bool* zero_energy = nullptr);

/// Smallest 1-based r with E(r) >= eta.
Eigen::Index energy_rank(const std::vector<double>& energy, double eta);

/// Head (tau) and knee (rho) thresholds, both applied to lambda = sigma^2.
struct TruncationRule {
  double tau = 1e-3;
  double rho = 0.9;

  void validate() const;
};

/// ell = max{ i : lambda_i / lambda_1 >= tau and lambda_{i+1} / lambda_i <= rho }
/// with lambda_{r+1} := 0. When no index qualifies, returns the number of
/// indices passing the head test.
Eigen::Index select_truncation_level(const std::vector<double>& singular_values,
                                     const TruncationRule& rule = {});

/// lambda~_{ell+1} / (1 - epsilon), or 0 once ell covers the whole spectrum.
double truncation_error_bound(const std::vector<double>& sketched_eigenvalues,
                              Eigen::Index ell, double epsilon);

std::vector<double> to_std(const Eigen::VectorXd& v);

}  // namespace strnpga
