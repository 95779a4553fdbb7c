#include "strnpga/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include "strnpga/error.hpp"
#include "strnpga/random.hpp"

namespace strnpga {

const char* to_string(StepMode mode) noexcept {
  switch (mode) {
    case StepMode::fixed_auto: return "fixed_auto";
    case StepMode::fixed_explicit: return "fixed_explicit";
    case StepMode::backtracking: return "backtracking";
  }
  return "unknown";
}

const char* to_string(MomentumMode mode) noexcept {
  switch (mode) {
    case MomentumMode::fista: return "fista";
    case MomentumMode::strongly_convex: return "strongly_convex";
  }
  return "unknown";
}

const char* to_string(Termination t) noexcept {
  switch (t) {
    case Termination::tolerance: return "tolerance";
    case Termination::max_iters: return "max_iters";
  }
  return "unknown";
}

StepMode step_mode_from_string(const std::string& name) {
  if (name == "fixed_auto" || name == "auto") return StepMode::fixed_auto;
  if (name == "fixed_explicit" || name == "fixed") return StepMode::fixed_explicit;
  if (name == "backtracking") return StepMode::backtracking;
  throw Error(ErrorKind::Argument, "unknown step mode '" + name + "'");
}

MomentumMode momentum_mode_from_string(const std::string& name) {
  if (name == "fista") return MomentumMode::fista;
  if (name == "strongly_convex") return MomentumMode::strongly_convex;
  throw Error(ErrorKind::Argument, "unknown momentum mode '" + name + "'");
}

void SolverConfig::validate() const {
  require(tol > 0.0, ErrorKind::Argument, "solver tolerance must be positive");
  require(max_iters >= 0, ErrorKind::Argument, "max_iters must be nonnegative");
  require(residual_check_stride >= 1, ErrorKind::Argument,
          "residual_check_stride must be >= 1");
  require(power_iters >= 1, ErrorKind::Argument, "power_iters must be >= 1");
  if (step_mode == StepMode::fixed_explicit)
    require(step > 0.0, ErrorKind::Argument, "explicit step must be positive");
  if (step_mode == StepMode::backtracking) {
    require(step >= 0.0, ErrorKind::Argument, "initial backtracking step must be >= 0");
    require(backtrack_shrink > 0.0 && backtrack_shrink < 1.0, ErrorKind::Argument,
            "backtracking shrink factor must lie in (0, 1)");
  }
  if (momentum_mode == MomentumMode::strongly_convex)
    require(step_mode != StepMode::backtracking, ErrorKind::Argument,
            "constant momentum needs a fixed step");
  if (m_f) require(*m_f >= 0.0, ErrorKind::Argument, "m_f must be nonnegative");
}

Eigen::VectorXd gradient(const FactorModel& model, const Eigen::VectorXd& x) {
  return model.gradient(x);
}

namespace {

using Apply = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Power iteration on a PSD operator M = A A^T given as a callback; reports
// sqrt of the Rayleigh quotient u^T M u = ||A^T u||^2.
NormEstimate power_method(Eigen::Index n, const Apply& apply_M,
                          const std::function<double(const Eigen::VectorXd&)>& rayleigh,
                          int iters, std::uint64_t seed) {
  require(iters >= 1, ErrorKind::Argument, "power method needs iters >= 1");
  NormEstimate est;
  Rng rng(substream_seed(seed, 0x9041));
  Eigen::VectorXd u = gaussian_vector(n, rng);
  u /= u.norm();
  Eigen::VectorXd z(n);
  for (int t = 0; t < iters; ++t) {
    est.rayleigh.push_back(rayleigh(u));
    apply_M(u, z);
    const double norm = z.norm();
    if (norm == 0.0) {
      est.degenerate = true;
      est.value = 0.0;
      return est;
    }
    u = z / norm;
  }
  est.value = rayleigh(u);
  est.rayleigh.push_back(est.value);
  return est;
}

struct Problem {
  Eigen::Index n = 0;
  Apply gradient;
  std::function<double(const Eigen::VectorXd&)> objective;
};

struct StepPlan {
  double alpha = 0.0;
  double alpha_cap = 0.0;
  double L_f = 0.0;
  double m_f = 0.0;
};

SolveResult run_npga(const Problem& prob, const FeasibleSet& F,
                     const std::optional<Eigen::VectorXd>& x0_in,
                     const SolverConfig& cfg, const ProjectionConfig& pcfg,
                     const StepPlan& plan) {
  const auto start = std::chrono::steady_clock::now();
  require(F.n() == prob.n, ErrorKind::Dimension, "solve: model and feasible set sizes differ");
  require(F.nonempty(), ErrorKind::Infeasible,
          "feasible set is empty: R_target exceeds max mu");

  SolveResult res;
  res.L_f_estimate = plan.L_f;
  res.m_f = plan.m_f;

  // Successive projections have nearby multipliers; warm-start from the last.
  ProjectionDiagnostics diag;
  double nu_prev = 0.0;
  auto project = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd p = project_feasible(v, F, pcfg, &diag, nu_prev);
    if (diag.used_fallback) ++res.projection_fallbacks;
    if (diag.halfspace_active && !diag.used_fallback) nu_prev = diag.nu;
    return p;
  };

  Eigen::VectorXd x;
  if (x0_in) {
    require(x0_in->size() == prob.n, ErrorKind::Dimension, "x0 has the wrong size");
    x = F.contains(*x0_in, 1e-14) ? *x0_in : project(*x0_in);
  } else {
    x = default_start(F, pcfg);
  }

  double alpha = plan.alpha;
  double beta_const = 0.0;
  if (cfg.momentum_mode == MomentumMode::strongly_convex) {
    require(plan.m_f > 0.0, ErrorKind::Argument,
            "strongly convex momentum needs m_f > 0 (gamma > 0 or an explicit m_f)");
    const double q = std::sqrt(std::min(1.0, alpha * plan.m_f));
    beta_const = (1.0 - q) / (1.0 + q);
  }

  Eigen::VectorXd y = x;
  Eigen::VectorXd x_new(prob.n);
  Eigen::VectorXd g(prob.n);
  double t = 1.0;
  int k = 0;
  int last_checked = -1;

  auto residual_at = [&](const Eigen::VectorXd& point) {
    Eigen::VectorXd grad(prob.n);
    prob.gradient(point, grad);
    return (project(point - alpha * grad) - point).norm();
  };
  auto check = [&]() {
    const double r = residual_at(x);
    res.residual_trace.push_back(r);
    res.residual_iterations.push_back(k);
    last_checked = k;
    return r <= cfg.tol;
  };

  if (cfg.record_objective) res.objective_trace.push_back(prob.objective(x));
  res.termination = Termination::max_iters;

  while (true) {
    if (k % cfg.residual_check_stride == 0 && check()) {
      res.termination = Termination::tolerance;
      break;
    }
    if (k >= cfg.max_iters) break;

    prob.gradient(y, g);
    if (cfg.step_mode == StepMode::backtracking) {
      // Reuse the last accepted step, doubled, but never above the first
      // trial step: near a fixed point every step passes the test.
      if (k > 0) alpha = std::min(2.0 * alpha, plan.alpha_cap);
      const double f_y = prob.objective(y);
      while (true) {
        x_new = project(y - alpha * g);
        const Eigen::VectorXd d = x_new - y;
        const double model_value = f_y + g.dot(d) + d.squaredNorm() / (2.0 * alpha);
        const double slack = 1e-12 * std::max(1.0, std::abs(f_y));
        if (prob.objective(x_new) <= model_value + slack) break;
        alpha *= cfg.backtrack_shrink;
        require(alpha >= 1e-18, ErrorKind::Numeric, "backtracking step underflow");
      }
    } else {
      x_new = project(y - alpha * g);
    }

    double beta = beta_const;
    if (cfg.momentum_mode == MomentumMode::fista) {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      beta = (t - 1.0) / t_next;
      t = t_next;
    }
    y = x_new + beta * (x_new - x);
    x.swap(x_new);
    ++k;
    if (cfg.record_objective) res.objective_trace.push_back(prob.objective(x));
  }
  if (last_checked != k) {
    res.residual_trace.push_back(residual_at(x));
    res.residual_iterations.push_back(k);
  }

  res.x = std::move(x);
  res.objective = prob.objective(res.x);
  res.iterations = k;
  res.step_used = alpha;
  res.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

StepPlan plan_steps(const SolverConfig& cfg, double L_f_hat, double m_f) {
  StepPlan plan;
  plan.m_f = m_f;
  switch (cfg.step_mode) {
    case StepMode::fixed_explicit:
      plan.alpha = cfg.step;
      plan.L_f = L_f_hat;
      break;
    case StepMode::fixed_auto:
      plan.L_f = kStepSafety * L_f_hat;
      plan.alpha = plan.L_f > 0.0 ? 1.0 / plan.L_f : 1.0;
      break;
    case StepMode::backtracking:
      plan.L_f = L_f_hat;
      plan.alpha = cfg.step > 0.0 ? cfg.step : (L_f_hat > 0.0 ? 1.0 / L_f_hat : 1.0);
      plan.alpha_cap = std::max(plan.alpha, L_f_hat > 0.0 ? 1.0 / L_f_hat : plan.alpha);
      break;
  }
  return plan;
}

}  // namespace

NormEstimate estimate_spectral_norm(const Eigen::MatrixXd& A, int iters,
                                    std::uint64_t seed) {
  Eigen::VectorXd work(A.cols());
  const Apply apply = [&](const Eigen::VectorXd& u, Eigen::VectorXd& out) {
    work.noalias() = A.transpose() * u;
    out.noalias() = A * work;
  };
  const auto rayleigh = [&](const Eigen::VectorXd& u) {
    return (A.transpose() * u).norm();
  };
  return power_method(A.rows(), apply, rayleigh, iters, seed);
}

NormEstimate estimate_spectral_norm(const FactorModel& model, int iters,
                                    std::uint64_t seed) {
  return estimate_spectral_norm(model.L_eff(), iters, seed);
}

CurvatureConstants curvature_constants(const FactorModel& model,
                                       std::optional<double> sigma_min_hint,
                                       int power_iters, std::uint64_t seed) {
  const NormEstimate est = estimate_spectral_norm(model, power_iters, seed);
  CurvatureConstants c;
  c.degenerate = est.degenerate;
  c.L_f = kStepSafety * 2.0 * (est.value * est.value + model.gamma());
  const double lambda_min = sigma_min_hint ? (*sigma_min_hint) * (*sigma_min_hint) : 0.0;
  c.m_f = 2.0 * (lambda_min + model.gamma());
  return c;
}

CurvatureConstants exact_curvature_constants(const FactorModel& model) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      model.L_eff() * model.L_eff().transpose(), Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  CurvatureConstants c;
  c.L_f = 2.0 * (std::max(ev(ev.size() - 1), 0.0) + model.gamma());
  c.m_f = 2.0 * (std::max(ev(0), 0.0) + model.gamma());
  c.degenerate = ev(ev.size() - 1) <= 0.0;
  return c;
}

double projected_gradient_residual(const FactorModel& model, const FeasibleSet& F,
                                   const Eigen::VectorXd& x, double alpha,
                                   const ProjectionConfig& pcfg) {
  const Eigen::VectorXd g = model.gradient(x);
  return (project_feasible(x - alpha * g, F, pcfg) - x).norm();
}

Eigen::VectorXd default_start(const FeasibleSet& F, const ProjectionConfig& pcfg) {
  const Eigen::VectorXd uniform =
      Eigen::VectorXd::Constant(F.n(), 1.0 / static_cast<double>(F.n()));
  return project_feasible(uniform, F, pcfg);
}

SolveResult solve(const FactorModel& model, const FeasibleSet& F,
                  const std::optional<Eigen::VectorXd>& x0, const SolverConfig& cfg,
                  const ProjectionConfig& pcfg) {
  cfg.validate();
  pcfg.validate();
  require(F.n() == model.n(), ErrorKind::Dimension,
          "solve: model and feasible set sizes differ");
  require(F.nonempty(), ErrorKind::Infeasible,
          "feasible set is empty: R_target exceeds max mu");

  double L_f_hat = 0.0;
  if (cfg.step_mode != StepMode::fixed_explicit || !cfg.m_f) {
    const NormEstimate est = estimate_spectral_norm(model, cfg.power_iters, cfg.seed);
    L_f_hat = 2.0 * (est.value * est.value + model.gamma());
  }
  const double m_f = cfg.m_f ? *cfg.m_f : 2.0 * model.gamma();

  Eigen::VectorXd work(model.columns());
  Problem prob;
  prob.n = model.n();
  prob.gradient = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
    model.gradient_into(x, work, out);
  };
  prob.objective = [&](const Eigen::VectorXd& x) { return model.objective(x); };
  return run_npga(prob, F, x0, cfg, pcfg, plan_steps(cfg, L_f_hat, m_f));
}

SolveResult solve_dense(const Eigen::MatrixXd& Sigma, const FeasibleSet& F,
                        const std::optional<Eigen::VectorXd>& x0,
                        const SolverConfig& cfg, const ProjectionConfig& pcfg) {
  cfg.validate();
  pcfg.validate();
  require(Sigma.rows() == Sigma.cols(), ErrorKind::Dimension, "Sigma must be square");
  require(Sigma.allFinite(), ErrorKind::Numeric, "Sigma has non-finite entries");
  const double scale = std::max(1.0, Sigma.cwiseAbs().maxCoeff());
  require((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale,
          ErrorKind::Argument, "Sigma is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Sigma, Eigen::EigenvaluesOnly);
  require(Sigma.size() == 0 || eig.eigenvalues()(0) >= -1e-8 * scale,
          ErrorKind::Argument, "Sigma is not positive semidefinite");

  double L_f_hat = 0.0;
  if (cfg.step_mode != StepMode::fixed_explicit) {
    const Apply apply = [&](const Eigen::VectorXd& u, Eigen::VectorXd& out) {
      out.noalias() = Sigma * u;
    };
    // For PSD Sigma, sqrt(u^T Sigma u) plays the role of ||A^T u||.
    const auto rayleigh = [&](const Eigen::VectorXd& u) {
      return std::sqrt(std::max(0.0, u.dot(Sigma * u)));
    };
    const NormEstimate est = power_method(Sigma.rows(), apply, rayleigh,
                                          cfg.power_iters, cfg.seed);
    L_f_hat = 2.0 * est.value * est.value;
  }
  const double m_f = cfg.m_f ? *cfg.m_f : 0.0;

  Problem prob;
  prob.n = Sigma.rows();
  prob.gradient = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
    out.noalias() = Sigma * x;
    out *= 2.0;
  };
  prob.objective = [&](const Eigen::VectorXd& x) { return x.dot(Sigma * x); };
  return run_npga(prob, F, x0, cfg, pcfg, plan_steps(cfg, L_f_hat, m_f));
}

}  // namespace strnpga
