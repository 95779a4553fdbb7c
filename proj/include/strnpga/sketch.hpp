#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "strnpga/panel.hpp"

namespace strnpga {

enum class SketchKind {
  gaussian_jl,
  countsketch,
  identity,  // debug: Phi = I_T, requires s == T
};

const char* to_string(SketchKind kind) noexcept;
SketchKind sketch_kind_from_string(const std::string& name);

struct SketchConfig {
  SketchKind kind = SketchKind::gaussian_jl;
  Eigen::Index s = 1;
  std::uint64_t seed = 0;
  /// Gaussian only: Phi is generated in column blocks of at most this many
  /// doubles. The result does not depend on the cap.
  std::size_t dense_memory_cap = std::size_t{1} << 24;
};

/// L~ = L Phi together with the configuration that produced it.
struct SketchedFactor {
  Eigen::MatrixXd Ltilde;
  SketchConfig config;
  /// Multiply-adds spent applying Phi.
  std::size_t apply_ops = 0;
};

/// Default constant in the sketch-size rule, see recommended_sketch_size.
inline constexpr double kDefaultSketchConstant = 4.0;

SketchedFactor gaussian_jl_sketch(const Eigen::MatrixXd& L, Eigen::Index s,
                                  std::uint64_t seed);
SketchedFactor countsketch_sketch(const Eigen::MatrixXd& L, Eigen::Index s,
                                  std::uint64_t seed);

/// Dispatches on cfg.kind.
SketchedFactor apply_sketch(const Eigen::MatrixXd& L, const SketchConfig& cfg);

/// Dense T x s sketching matrix, identical to what apply_sketch uses.
/// Only meant for debugging; refuses T * s > 1e6.
Eigen::MatrixXd materialize_sketch(Eigen::Index T, const SketchConfig& cfg);

void write_sketch_csv(const Eigen::MatrixXd& Phi, std::ostream& out);

/// Column of Phi hit by row t of a CountSketch, and its sign.
Eigen::Index countsketch_bucket(std::uint64_t seed, Eigen::Index t,
                                Eigen::Index s) noexcept;
double countsketch_sign(std::uint64_t seed, Eigen::Index t) noexcept;

/// CountSketch with an explicit hash (0-based buckets) and signs, one entry
/// per column of L. Zero entries of L are skipped.
SketchedFactor countsketch_apply(const Eigen::MatrixXd& L,
                                 const std::vector<Eigen::Index>& buckets,
                                 const std::vector<double>& signs,
                                 Eigen::Index s);

/// ceil(c (r + ln(1/delta)) / epsilon^2). Clipping to [1, T] is up to the
/// caller.
Eigen::Index recommended_sketch_size(double r_effective, double epsilon,
                                     double delta,
                                     double c = kDefaultSketchConstant);

/// Largest relative quadratic-form distortion of L~ against L on Im(L^T):
///   max_x | ||L~^T x||^2 / ||L^T x||^2 - 1 |.
/// Computed exactly from a thin SVD of L; directions with singular value
/// below rank_tol * sigma_1 are treated as outside the range.
double embedding_distortion(const Eigen::MatrixXd& L,
                            const Eigen::MatrixXd& Ltilde,
                            double rank_tol = 1e-10);

}  // namespace strnpga
