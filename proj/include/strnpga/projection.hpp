#pragma once

#include <Eigen/Dense>

namespace strnpga {

/// F = { x : mu^T x >= R_target, 1^T x = 1, x >= 0 }.
class FeasibleSet {
 public:
  FeasibleSet(Eigen::VectorXd mu, double R_target);

  const Eigen::VectorXd& mu() const noexcept { return mu_; }
  double R_target() const noexcept { return R_target_; }
  Eigen::Index n() const noexcept { return mu_.size(); }
  /// R_target <= max_i mu_i, i.e. the simplex meets the halfspace.
  bool nonempty() const noexcept;
  bool contains(const Eigen::VectorXd& x, double tol = 1e-10) const;

 private:
  Eigen::VectorXd mu_;
  double R_target_;
};

struct ProjectionConfig {
  double tol_scalar = 1e-10;
  int max_bracket_doublings = 60;
  int max_bisection_iters = 200;
  int dykstra_max_iters = 10000;
  double dykstra_tol = 1e-10;

  void validate() const;
};

struct ProjectionDiagnostics {
  bool halfspace_active = false;
  double nu = 0.0;               // multiplier of the return constraint
  int bracket_doublings = 0;
  int bisection_iters = 0;
  double return_residual = 0.0;  // |phi(nu) - R_target| on the active path
  bool used_fallback = false;
  int dykstra_iters = 0;
};

/// Euclidean projection onto the probability simplex (sort and threshold).
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v);

/// Threshold tau with sum_i max(v_i - tau, 0) = 1.
double simplex_threshold(const Eigen::VectorXd& v);

/// Projection onto { y : mu^T y >= R_target }.
Eigen::VectorXd project_halfspace(const Eigen::VectorXd& y,
                                  const FeasibleSet& F);

/// Exact projection onto F via the scalar dual search on nu; Dykstra takes
/// over when bracketing runs out of budget. A positive nu_hint (typically the
/// multiplier of the previous projection in an iterative solver) is tried
/// before the doubling bracket.
Eigen::VectorXd project_feasible(const Eigen::VectorXd& v,
                                 const FeasibleSet& F,
                                 const ProjectionConfig& cfg = {},
                                 ProjectionDiagnostics* diag = nullptr,
                                 double nu_hint = 0.0);

/// Dykstra alternating projections between the simplex and the halfspace.
Eigen::VectorXd dykstra_project(const Eigen::VectorXd& v, const FeasibleSet& F,
                                const ProjectionConfig& cfg = {},
                                int* iterations = nullptr);

/// mu^T Pi_simplex(v + nu mu).
double dual_path_return(const Eigen::VectorXd& v, const FeasibleSet& F,
                        double nu);

}  // namespace strnpga
