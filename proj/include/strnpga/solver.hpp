#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "strnpga/projection.hpp"
#include "strnpga/str.hpp"

namespace strnpga {

enum class StepMode { fixed_auto, fixed_explicit, backtracking };
enum class MomentumMode { fista, strongly_convex };
enum class Termination { tolerance, max_iters };

const char* to_string(StepMode mode) noexcept;
const char* to_string(MomentumMode mode) noexcept;
const char* to_string(Termination t) noexcept;
StepMode step_mode_from_string(const std::string& name);
MomentumMode momentum_mode_from_string(const std::string& name);

/// Inflation applied to the power-method estimate of L_f in fixed_auto mode.
inline constexpr double kStepSafety = 1.05;

struct SolverConfig {
  StepMode step_mode = StepMode::fixed_auto;
  double step = 0.0;               // fixed_explicit: alpha; backtracking: alpha_0
  double backtrack_shrink = 0.5;   // rho in (0, 1)
  MomentumMode momentum_mode = MomentumMode::fista;
  double tol = 1e-8;
  int max_iters = 10000;
  int residual_check_stride = 1;
  int power_iters = 10;
  std::uint64_t seed = 0;
  /// Overrides the curvature lower bound m_f (strongly_convex mode).
  std::optional<double> m_f;
  /// Record f(x^k) for every iterate (rate diagnostics).
  bool record_objective = false;

  void validate() const;
};

struct CurvatureConstants {
  double L_f = 0.0;  // 2 (||L_eff||^2 + gamma), as used for the step
  double m_f = 0.0;  // 2 (lambda_min(L_eff L_eff^T) + gamma)
  bool degenerate = false;
};

struct SolveResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
  std::vector<double> residual_trace;
  std::vector<int> residual_iterations;  // k at which each residual was taken
  std::vector<double> objective_trace;   // f(x^k), k = 0.. (when recorded)
  double step_used = 0.0;
  double L_f_estimate = 0.0;
  double m_f = 0.0;
  double wall_time = 0.0;
  Termination termination = Termination::max_iters;
  int projection_fallbacks = 0;
};

/// 2 L_eff (L_eff^T x) + 2 gamma x.
Eigen::VectorXd gradient(const FactorModel& model, const Eigen::VectorXd& x);

struct NormEstimate {
  double value = 0.0;
  std::vector<double> rayleigh;  // ||L_eff^T u_t|| per iteration
  bool degenerate = false;
};

/// Power method on L_eff L_eff^T from a seeded Gaussian start.
NormEstimate estimate_spectral_norm(const FactorModel& model, int iters,
                                    std::uint64_t seed);
NormEstimate estimate_spectral_norm(const Eigen::MatrixXd& A, int iters,
                                    std::uint64_t seed);

/// L_f from the (safety-inflated) power estimate; m_f = 2 gamma unless a
/// hint on sigma_min(L_eff) is supplied.
CurvatureConstants curvature_constants(
    const FactorModel& model, std::optional<double> sigma_min_hint = {},
    int power_iters = 10, std::uint64_t seed = 0);

/// Exact constants from a dense eigen-decomposition (test scale).
CurvatureConstants exact_curvature_constants(const FactorModel& model);

/// ||Pi_F(x - alpha grad f(x)) - x||.
double projected_gradient_residual(const FactorModel& model,
                                   const FeasibleSet& F,
                                   const Eigen::VectorXd& x, double alpha,
                                   const ProjectionConfig& pcfg = {});

/// Nesterov-accelerated projected gradient over a factor model.
SolveResult solve(const FactorModel& model, const FeasibleSet& F,
                  const std::optional<Eigen::VectorXd>& x0 = {},
                  const SolverConfig& cfg = {},
                  const ProjectionConfig& pcfg = {});

/// Same iteration with an explicit covariance, grad f = 2 Sigma x.
SolveResult solve_dense(const Eigen::MatrixXd& Sigma, const FeasibleSet& F,
                        const std::optional<Eigen::VectorXd>& x0 = {},
                        const SolverConfig& cfg = {},
                        const ProjectionConfig& pcfg = {});

/// Uniform weights projected onto F.
Eigen::VectorXd default_start(const FeasibleSet& F,
                              const ProjectionConfig& pcfg = {});

}  // namespace strnpga
