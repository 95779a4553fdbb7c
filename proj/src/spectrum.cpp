#include "strnpga/spectrum.hpp"

#include <algorithm>
#include <cmath>

#include "strnpga/error.hpp"

namespace strnpga {

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

ThinSVD thin_svd(const Eigen::MatrixXd& A, double rank_tol) {
  require(A.allFinite(), ErrorKind::Numeric, "thin_svd: matrix has non-finite entries");
  require(rank_tol >= 0.0, ErrorKind::Argument, "rank_tol must be nonnegative");
  ThinSVD out;
  if (A.size() == 0 || A.cwiseAbs().maxCoeff() == 0.0) {
    out.U.resize(A.rows(), 0);
    out.S.resize(0);
    out.V.resize(A.cols(), 0);
    return out;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = rank_tol * s(0);
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > 0.0 && s(r) >= cutoff) ++r;
  out.U = svd.matrixU().leftCols(r);
  out.S = s.head(r);
  out.V = svd.matrixV().leftCols(r);
  return out;
}

SpectrumReport spectrum_report(const Eigen::MatrixXd& A, double rank_tol) {
  require(A.allFinite(), ErrorKind::Numeric, "spectrum: matrix has non-finite entries");
  SpectrumReport report;
  if (A.size() == 0) return report;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
  report.singular_values = to_std(svd.singularValues());
  report.eigenvalues.reserve(report.singular_values.size());
  for (double s : report.singular_values) report.eigenvalues.push_back(s * s);
  report.energy = cumulative_energy(report.eigenvalues, &report.zero_energy);
  const double sigma1 = report.singular_values.front();
  report.numerical_rank = static_cast<Eigen::Index>(std::count_if(
      report.singular_values.begin(), report.singular_values.end(),
      [&](double s) { return sigma1 > 0.0 && s >= rank_tol * sigma1; }));
  return report;
}

std::vector<double> cumulative_energy(const std::vector<double>& eigenvalues,
                                      bool* zero_energy) {
  std::vector<double> partial(eigenvalues.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    require(eigenvalues[i] >= 0.0, ErrorKind::Argument,
            "cumulative_energy: eigenvalues must be nonnegative");
    require(i == 0 || eigenvalues[i] <= eigenvalues[i - 1], ErrorKind::Argument,
            "cumulative_energy: eigenvalues must be sorted descending");
    sum += eigenvalues[i];
    partial[i] = sum;
  }
  const bool zero = sum <= 0.0;
  if (zero_energy) *zero_energy = zero;
  if (zero) return std::vector<double>(eigenvalues.size(), 0.0);
  for (double& e : partial) e /= sum;
  return partial;
}

Eigen::Index energy_rank(const std::vector<double>& energy, double eta) {
  require(eta > 0.0 && eta < 1.0, ErrorKind::Argument, "eta must lie in (0, 1)");
  for (std::size_t r = 0; r < energy.size(); ++r) {
    if (energy[r] >= eta) return static_cast<Eigen::Index>(r + 1);
  }
  throw Error(ErrorKind::Degenerate, "energy never reaches eta");
}

void TruncationRule::validate() const {
  require(tau > 0.0 && tau < 1.0, ErrorKind::Argument, "tau must lie in (0, 1)");
  require(rho > 0.0 && rho < 1.0, ErrorKind::Argument, "rho must lie in (0, 1)");
}

Eigen::Index select_truncation_level(const std::vector<double>& singular_values,
                                     const TruncationRule& rule) {
  rule.validate();
  require(!singular_values.empty() && singular_values.front() > 0.0,
          ErrorKind::Degenerate, "truncation needs sigma_1 > 0");
  const std::size_t r = singular_values.size();
  std::vector<double> lambda(r);
  for (std::size_t i = 0; i < r; ++i)
    lambda[i] = singular_values[i] * singular_values[i];

  Eigen::Index head_count = 0;
  for (std::size_t i = 0; i < r; ++i)
    if (lambda[i] / lambda[0] >= rule.tau) ++head_count;

  for (std::size_t i = r; i-- > 0;) {
    if (lambda[i] / lambda[0] < rule.tau) continue;
    const double next = i + 1 < r ? lambda[i + 1] : 0.0;
    if (next / lambda[i] <= rule.rho) return static_cast<Eigen::Index>(i + 1);
  }
  return head_count;
}

double truncation_error_bound(const std::vector<double>& sketched_eigenvalues,
                              Eigen::Index ell, double epsilon) {
  require(epsilon >= 0.0 && epsilon < 1.0, ErrorKind::Argument,
          "epsilon must lie in [0, 1)");
  require(ell >= 0, ErrorKind::Argument, "ell must be nonnegative");
  if (ell >= static_cast<Eigen::Index>(sketched_eigenvalues.size())) return 0.0;
  return sketched_eigenvalues[static_cast<std::size_t>(ell)] / (1.0 - epsilon);
}

}  // namespace strnpga
