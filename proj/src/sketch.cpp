#include "strnpga/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "strnpga/error.hpp"
#include "strnpga/random.hpp"
#include "strnpga/spectrum.hpp"

namespace strnpga {

namespace {

constexpr std::uint64_t kHashStream = 0xC0;
constexpr std::uint64_t kSignStream = 0x51;

void check_size(Eigen::Index T, Eigen::Index s) {
  require(s >= 1 && s <= T, ErrorKind::Dimension,
          "sketch dimension s=" + std::to_string(s) + " must lie in [1, T=" +
              std::to_string(T) + "]");
}

// Column j of a Gaussian Phi comes from its own substream, so any column
// blocking reproduces the same matrix.
void fill_gaussian_column(Eigen::Ref<Eigen::VectorXd> column,
                          std::uint64_t seed, Eigen::Index j, double stddev) {
  Rng rng(substream_seed(seed, static_cast<std::uint64_t>(j)));
  std::normal_distribution<double> normal(0.0, stddev);
  for (Eigen::Index t = 0; t < column.size(); ++t) column(t) = normal(rng);
}

}  // namespace

const char* to_string(SketchKind kind) noexcept {
  switch (kind) {
    case SketchKind::gaussian_jl: return "gaussian_jl";
    case SketchKind::countsketch: return "countsketch";
    case SketchKind::identity: return "identity";
  }
  return "unknown";
}

SketchKind sketch_kind_from_string(const std::string& name) {
  if (name == "gaussian_jl" || name == "jl" || name == "gaussian")
    return SketchKind::gaussian_jl;
  if (name == "countsketch" || name == "cs") return SketchKind::countsketch;
  if (name == "identity") return SketchKind::identity;
  throw Error(ErrorKind::Argument, "unknown sketch kind '" + name + "'");
}

Eigen::Index countsketch_bucket(std::uint64_t seed, Eigen::Index t,
                                Eigen::Index s) noexcept {
  const std::uint64_t h =
      mix64(substream_seed(seed, kHashStream) + static_cast<std::uint64_t>(t));
  return static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(s));
}

double countsketch_sign(std::uint64_t seed, Eigen::Index t) noexcept {
  const std::uint64_t h =
      mix64(substream_seed(seed, kSignStream) + static_cast<std::uint64_t>(t));
  return (h >> 63) != 0 ? 1.0 : -1.0;
}

SketchedFactor gaussian_jl_sketch(const Eigen::MatrixXd& L, Eigen::Index s,
                                  std::uint64_t seed) {
  SketchConfig cfg;
  cfg.kind = SketchKind::gaussian_jl;
  cfg.s = s;
  cfg.seed = seed;
  return apply_sketch(L, cfg);
}

SketchedFactor countsketch_sketch(const Eigen::MatrixXd& L, Eigen::Index s,
                                  std::uint64_t seed) {
  SketchConfig cfg;
  cfg.kind = SketchKind::countsketch;
  cfg.s = s;
  cfg.seed = seed;
  return apply_sketch(L, cfg);
}

SketchedFactor countsketch_apply(const Eigen::MatrixXd& L,
                                 const std::vector<Eigen::Index>& buckets,
                                 const std::vector<double>& signs,
                                 Eigen::Index s) {
  const Eigen::Index T = L.cols();
  check_size(T, s);
  require(static_cast<Eigen::Index>(buckets.size()) == T &&
              static_cast<Eigen::Index>(signs.size()) == T,
          ErrorKind::Dimension, "countsketch hash needs one entry per period");

  SketchedFactor out;
  out.Ltilde = Eigen::MatrixXd::Zero(L.rows(), s);
  out.config.kind = SketchKind::countsketch;
  out.config.s = s;
  for (Eigen::Index t = 0; t < T; ++t) {
    const Eigen::Index j = buckets[static_cast<std::size_t>(t)];
    const double sign = signs[static_cast<std::size_t>(t)];
    require(j >= 0 && j < s, ErrorKind::Argument, "countsketch bucket out of range");
    require(sign == 1.0 || sign == -1.0, ErrorKind::Argument,
            "countsketch signs must be +1 or -1");
    for (Eigen::Index i = 0; i < L.rows(); ++i) {
      const double value = L(i, t);
      if (value == 0.0) continue;
      out.Ltilde(i, j) += sign * value;
      ++out.apply_ops;
    }
  }
  return out;
}

SketchedFactor apply_sketch(const Eigen::MatrixXd& L, const SketchConfig& cfg) {
  const Eigen::Index T = L.cols();
  check_size(T, cfg.s);
  switch (cfg.kind) {
    case SketchKind::identity: {
      require(cfg.s == T, ErrorKind::Dimension, "identity sketch requires s == T");
      return {L, cfg, 0};
    }
    case SketchKind::countsketch: {
      std::vector<Eigen::Index> buckets(static_cast<std::size_t>(T));
      std::vector<double> signs(static_cast<std::size_t>(T));
      for (Eigen::Index t = 0; t < T; ++t) {
        buckets[static_cast<std::size_t>(t)] = countsketch_bucket(cfg.seed, t, cfg.s);
        signs[static_cast<std::size_t>(t)] = countsketch_sign(cfg.seed, t);
      }
      SketchedFactor out = countsketch_apply(L, buckets, signs, cfg.s);
      out.config = cfg;
      return out;
    }
    case SketchKind::gaussian_jl: {
      SketchedFactor out;
      out.config = cfg;
      out.Ltilde.resize(L.rows(), cfg.s);
      const double stddev = 1.0 / std::sqrt(static_cast<double>(cfg.s));
      const auto per_block = std::max<Eigen::Index>(
          1, static_cast<Eigen::Index>(cfg.dense_memory_cap /
                                       static_cast<std::size_t>(std::max<Eigen::Index>(T, 1))));
      const Eigen::Index width = std::min(per_block, cfg.s);
      Eigen::MatrixXd block(T, width);
      Eigen::VectorXd column(L.rows());
      for (Eigen::Index j0 = 0; j0 < cfg.s; j0 += width) {
        const Eigen::Index w = std::min(width, cfg.s - j0);
        for (Eigen::Index j = 0; j < w; ++j)
          fill_gaussian_column(block.col(j), cfg.seed, j0 + j, stddev);
        for (Eigen::Index j = 0; j < w; ++j) {
          column.noalias() = L * block.col(j);
          out.Ltilde.col(j0 + j) = column;
        }
      }
      out.apply_ops = static_cast<std::size_t>(L.rows()) *
                      static_cast<std::size_t>(T) * static_cast<std::size_t>(cfg.s);
      return out;
    }
  }
  throw Error(ErrorKind::Argument, "unknown sketch kind");
}

Eigen::MatrixXd materialize_sketch(Eigen::Index T, const SketchConfig& cfg) {
  check_size(T, cfg.s);
  require(static_cast<double>(T) * static_cast<double>(cfg.s) <= 1e6,
          ErrorKind::Argument, "refusing to materialize a sketch with T*s > 1e6");
  Eigen::MatrixXd Phi = Eigen::MatrixXd::Zero(T, cfg.s);
  switch (cfg.kind) {
    case SketchKind::identity:
      require(cfg.s == T, ErrorKind::Dimension, "identity sketch requires s == T");
      Phi.setIdentity();
      break;
    case SketchKind::countsketch:
      for (Eigen::Index t = 0; t < T; ++t)
        Phi(t, countsketch_bucket(cfg.seed, t, cfg.s)) = countsketch_sign(cfg.seed, t);
      break;
    case SketchKind::gaussian_jl: {
      const double stddev = 1.0 / std::sqrt(static_cast<double>(cfg.s));
      for (Eigen::Index j = 0; j < cfg.s; ++j)
        fill_gaussian_column(Phi.col(j), cfg.seed, j, stddev);
      break;
    }
  }
  return Phi;
}

void write_sketch_csv(const Eigen::MatrixXd& Phi, std::ostream& out) {
  const auto old_precision = out.precision(17);
  for (Eigen::Index t = 0; t < Phi.rows(); ++t) {
    for (Eigen::Index j = 0; j < Phi.cols(); ++j) {
      if (j > 0) out << ',';
      out << Phi(t, j);
    }
    out << '\n';
  }
  out.precision(old_precision);
}

Eigen::Index recommended_sketch_size(double r_effective, double epsilon,
                                     double delta, double c) {
  require(epsilon > 0.0 && epsilon < 1.0, ErrorKind::Argument,
          "epsilon must lie in (0, 1)");
  require(delta > 0.0 && delta < 1.0, ErrorKind::Argument,
          "delta must lie in (0, 1)");
  require(c > 0.0, ErrorKind::Argument, "sketch constant c must be positive");
  require(r_effective >= 0.0, ErrorKind::Argument,
          "effective rank must be nonnegative");
  const double s = c * (r_effective + std::log(1.0 / delta)) / (epsilon * epsilon);
  return std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(s)));
}

double embedding_distortion(const Eigen::MatrixXd& L,
                            const Eigen::MatrixXd& Ltilde, double rank_tol) {
  require(L.rows() == Ltilde.rows(), ErrorKind::Dimension,
          "factor and sketch must have the same number of rows");
  const ThinSVD svd = thin_svd(L, rank_tol);
  if (svd.rank() == 0) return 0.0;
  // With L = U S V^T, V^T Phi = S^{-1} U^T L~.
  const Eigen::MatrixXd M =
      svd.S.cwiseInverse().asDiagonal() * (svd.U.transpose() * Ltilde);
  Eigen::MatrixXd D = M * M.transpose();
  D.diagonal().array() -= 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(D, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace strnpga
