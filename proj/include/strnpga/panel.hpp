#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace strnpga {

/// Balanced asset x time panel of per-period simple returns.
///
/// Rows are assets, columns are time periods. Construction validates the
/// shape (n >= 2, T >= 2, one id per row) and that every entry is finite.
class ReturnPanel {
 public:
  ReturnPanel(std::vector<std::string> asset_ids, Eigen::MatrixXd returns);

  const std::vector<std::string>& asset_ids() const noexcept { return ids_; }
  const Eigen::MatrixXd& returns() const noexcept { return returns_; }
  Eigen::Index n() const noexcept { return returns_.rows(); }
  Eigen::Index T() const noexcept { return returns_.cols(); }

  /// Columns [first, first + count) as a new panel with the same ids.
  ReturnPanel slice_periods(Eigen::Index first, Eigen::Index count) const;

 private:
  std::vector<std::string> ids_;
  Eigen::MatrixXd returns_;
};

/// Centered, scaled return factor: L L^T is the unbiased sample covariance.
struct CovarianceFactor {
  Eigen::MatrixXd L;     // n x T, (R - mean 1^T) / sqrt(T - 1)
  Eigen::VectorXd mean;  // row means of R

  Eigen::Index n() const noexcept { return L.rows(); }
  Eigen::Index T() const noexcept { return L.cols(); }
};

/// Parameters of the controlled-spectrum synthetic panel.
struct SyntheticSpec {
  Eigen::Index n = 600;
  Eigen::Index T = 2400;
  double singular_decay = 0.9;
  double leading_scale = 1.0;
  double noise_floor = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// CSV layout options. Row 1 is a header, column 1 holds the asset id.
struct CsvFormat {
  char delimiter = ',';
};

/// Reads a balanced panel. Empty cells become 0.0; anything else that is not
/// a number is a parse error reported with its 1-based row and column.
ReturnPanel load_panel(const std::filesystem::path& path,
                       const CsvFormat& format = {});

ReturnPanel parse_panel(std::istream& in, const CsvFormat& format = {});

void write_panel(const ReturnPanel& panel, std::ostream& out,
                 const CsvFormat& format = {});

CovarianceFactor center_and_factor(const ReturnPanel& panel);

/// Same as above on a raw matrix; accepts any n >= 1 and requires T >= 2.
CovarianceFactor center_and_factor(const Eigen::MatrixXd& returns);

/// Deterministic panel whose centered factor has singular values
/// max(leading_scale * decay^(i-1), noise_floor), i = 1..min(n, T-1).
ReturnPanel generate_synthetic(const SyntheticSpec& spec);

}  // namespace strnpga
