#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "strnpga/projection.hpp"

namespace strnpga {

inline constexpr Eigen::Index kOracleMaxAssets = 14;

/// min 1/2 x^T Q x + c^T x over F.
struct QPInstance {
  Eigen::MatrixXd Q;
  Eigen::VectorXd c;
  FeasibleSet F;

  void validate() const;
};

/// Bounds held at zero plus whether the return constraint is binding.
struct ActiveSet {
  std::vector<bool> at_zero;
  bool return_active = false;

  std::string describe() const;
  /// Lexicographic order on (at_zero..., return_active).
  bool operator<(const ActiveSet& other) const;
};

struct ExactSolution {
  Eigen::VectorXd x;
  double value = 0.0;
  ActiveSet active;
  std::size_t subsets_visited = 0;
  std::size_t singular_subsets = 0;  // KKT systems that had no exact solution
};

/// Exhaustive active-set enumeration over all 2^n * 2 faces of F.
ExactSolution solve_exact(const QPInstance& inst);

/// Pi_F(v) computed as min ||x||^2 - 2 v^T x over F.
Eigen::VectorXd project_exact(const Eigen::VectorXd& v, const FeasibleSet& F);

/// QP for min x^T Sigma x over F (Q = 2 Sigma, c = 0).
QPInstance mean_variance_qp(const Eigen::MatrixXd& Sigma, const FeasibleSet& F);

}  // namespace strnpga
