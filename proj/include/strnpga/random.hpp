#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace strnpga {

/// SplitMix64 finalizer. Used to derive independent stream seeds and hashes.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the `stream`-th substream derived from `seed`.
constexpr std::uint64_t substream_seed(std::uint64_t seed,
                                       std::uint64_t stream) noexcept {
  return mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

/// Fills a rows x cols matrix with i.i.d. N(0, stddev^2), column-major order.
Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                                double stddev = 1.0);

Eigen::VectorXd gaussian_vector(Eigen::Index size, Rng& rng,
                                double stddev = 1.0);

}  // namespace strnpga
