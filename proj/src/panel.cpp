#include "strnpga/panel.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string_view>

#include "strnpga/error.hpp"
#include "strnpga/random.hpp"

namespace strnpga {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_cell(std::string_view cell, std::size_t row, std::size_t col) {
  cell = trim(cell);
  if (cell.empty()) return 0.0;
  std::string_view digits = cell;
  if (digits.front() == '+') digits.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc() || ptr != digits.data() + digits.size() ||
      !std::isfinite(value)) {
    std::ostringstream msg;
    msg << "cannot parse '" << cell << "' as a number at row " << row
        << ", column " << col;
    throw Error(ErrorKind::Parse, msg.str());
  }
  return value;
}

}  // namespace

ReturnPanel::ReturnPanel(std::vector<std::string> asset_ids,
                         Eigen::MatrixXd returns)
    : ids_(std::move(asset_ids)), returns_(std::move(returns)) {
  require(returns_.rows() >= 2 && returns_.cols() >= 2, ErrorKind::Dimension,
          "return panel needs n >= 2 assets and T >= 2 periods, got n=" +
              std::to_string(returns_.rows()) +
              ", T=" + std::to_string(returns_.cols()));
  require(static_cast<Eigen::Index>(ids_.size()) == returns_.rows(),
          ErrorKind::Dimension, "one asset id per row is required");
  require(returns_.allFinite(), ErrorKind::Numeric,
          "return panel contains non-finite entries");
}

ReturnPanel ReturnPanel::slice_periods(Eigen::Index first,
                                       Eigen::Index count) const {
  require(first >= 0 && count >= 0 && first + count <= T(),
          ErrorKind::Dimension, "period slice out of range");
  return ReturnPanel(ids_, returns_.middleCols(first, count));
}

void SyntheticSpec::validate() const {
  require(n >= 2 && T >= 2, ErrorKind::Dimension,
          "synthetic panel needs n >= 2 and T >= 2");
  require(singular_decay > 0.0 && singular_decay < 1.0, ErrorKind::Argument,
          "singular_decay must lie in (0, 1)");
  require(leading_scale > 0.0, ErrorKind::Argument,
          "leading_scale must be positive");
  require(noise_floor >= 0.0, ErrorKind::Argument,
          "noise_floor must be nonnegative");
}

ReturnPanel parse_panel(std::istream& in, const CsvFormat& format) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!have_header) {
      have_header = true;
      continue;
    }
    const auto cells = split(line, format.delimiter);
    if (rows.empty()) {
      width = cells.size();
    } else if (cells.size() != width) {
      throw Error(ErrorKind::Format,
                  "ragged row at line " + std::to_string(line_no) + ": " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(width));
    }
    ids.emplace_back(trim(cells.front()));
    std::vector<double> values;
    values.reserve(cells.size() - 1);
    for (std::size_t c = 1; c < cells.size(); ++c)
      values.push_back(parse_cell(cells[c], line_no, c + 1));
    rows.push_back(std::move(values));
  }
  require(have_header, ErrorKind::Format, "panel file is empty");

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto T = width == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(width - 1);
  require(n >= 2 && T >= 2, ErrorKind::Dimension,
          "return panel needs n >= 2 assets and T >= 2 periods, got n=" +
              std::to_string(n) + ", T=" + std::to_string(T));
  Eigen::MatrixXd returns(n, T);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index t = 0; t < T; ++t)
      returns(i, t) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
  return ReturnPanel(std::move(ids), std::move(returns));
}

ReturnPanel load_panel(const std::filesystem::path& path,
                       const CsvFormat& format) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Format,
          "cannot open panel file " + path.string());
  return parse_panel(in, format);
}

void write_panel(const ReturnPanel& panel, std::ostream& out,
                 const CsvFormat& format) {
  out << "asset_id";
  for (Eigen::Index t = 0; t < panel.T(); ++t)
    out << format.delimiter << 't' << t;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (Eigen::Index i = 0; i < panel.n(); ++i) {
    out << panel.asset_ids()[static_cast<std::size_t>(i)];
    for (Eigen::Index t = 0; t < panel.T(); ++t)
      out << format.delimiter << panel.returns()(i, t);
    out << '\n';
  }
  out.precision(old_precision);
}

CovarianceFactor center_and_factor(const Eigen::MatrixXd& returns) {
  require(returns.rows() >= 1, ErrorKind::Dimension, "panel has no assets");
  require(returns.cols() >= 2, ErrorKind::Dimension,
          "centering needs T >= 2 periods");
  CovarianceFactor f;
  f.mean = returns.rowwise().mean();
  const double scale = 1.0 / std::sqrt(static_cast<double>(returns.cols() - 1));
  f.L = (returns.colwise() - f.mean) * scale;
  return f;
}

CovarianceFactor center_and_factor(const ReturnPanel& panel) {
  return center_and_factor(panel.returns());
}

ReturnPanel generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const Eigen::Index k = std::min(spec.n, spec.T - 1);

  Rng left_rng(substream_seed(spec.seed, 1));
  Rng right_rng(substream_seed(spec.seed, 2));

  const Eigen::MatrixXd G_left = gaussian_matrix(spec.n, k, left_rng);
  Eigen::MatrixXd G_right = gaussian_matrix(spec.T, k, right_rng);
  // Columns orthogonal to 1 keep the panel's row means at zero, so centering
  // leaves U diag(sigma) V^T untouched.
  G_right.rowwise() -= G_right.colwise().mean();

  const Eigen::MatrixXd U =
      Eigen::HouseholderQR<Eigen::MatrixXd>(G_left).householderQ() *
      Eigen::MatrixXd::Identity(spec.n, k);
  const Eigen::MatrixXd V =
      Eigen::HouseholderQR<Eigen::MatrixXd>(G_right).householderQ() *
      Eigen::MatrixXd::Identity(spec.T, k);

  Eigen::VectorXd sigma(k);
  for (Eigen::Index i = 0; i < k; ++i)
    sigma(i) = std::max(spec.leading_scale *
                            std::pow(spec.singular_decay, static_cast<double>(i)),
                        spec.noise_floor);

  const double scale = std::sqrt(static_cast<double>(spec.T - 1));
  Eigen::MatrixXd returns = (U * (sigma * scale).asDiagonal()) * V.transpose();

  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(spec.n));
  for (Eigen::Index i = 0; i < spec.n; ++i) {
    std::ostringstream id;
    id << "S" << std::setw(5) << std::setfill('0') << i;
    ids.push_back(id.str());
  }
  return ReturnPanel(std::move(ids), std::move(returns));
}

}  // namespace strnpga
