#include "strnpga/projection.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "strnpga/error.hpp"

namespace strnpga {

FeasibleSet::FeasibleSet(Eigen::VectorXd mu, double R_target)
    : mu_(std::move(mu)), R_target_(R_target) {
  require(mu_.size() >= 2, ErrorKind::Dimension, "feasible set needs n >= 2");
  require(mu_.allFinite() && std::isfinite(R_target_), ErrorKind::Numeric,
          "feasible set has non-finite data");
}

bool FeasibleSet::nonempty() const noexcept { return R_target_ <= mu_.maxCoeff(); }

bool FeasibleSet::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != n()) return false;
  return x.minCoeff() >= -tol && std::abs(x.sum() - 1.0) <= tol * static_cast<double>(n()) &&
         mu_.dot(x) >= R_target_ - tol * std::max(1.0, std::abs(R_target_));
}

void ProjectionConfig::validate() const {
  require(tol_scalar > 0.0 && dykstra_tol > 0.0, ErrorKind::Argument,
          "projection tolerances must be positive");
  require(max_bracket_doublings > 0 && max_bisection_iters > 0 &&
              dykstra_max_iters > 0,
          ErrorKind::Argument, "projection iteration budgets must be positive");
}

double simplex_threshold(const Eigen::VectorXd& v) {
  require(v.size() >= 1, ErrorKind::Dimension, "simplex projection of an empty vector");
  require(v.allFinite(), ErrorKind::Numeric, "simplex projection: non-finite input");
  // The threshold depends only on the sorted values, so ties need no rule.
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumsum += sorted[j];
    const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) tau = candidate;
  }
  return tau;
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  const double tau = simplex_threshold(v);
  return (v.array() - tau).cwiseMax(0.0).matrix();
}

Eigen::VectorXd project_halfspace(const Eigen::VectorXd& y, const FeasibleSet& F) {
  require(y.size() == F.n(), ErrorKind::Dimension, "halfspace projection: dimension mismatch");
  const Eigen::VectorXd& mu = F.mu();
  const double mu_sq = mu.squaredNorm();
  if (mu_sq == 0.0) {
    require(F.R_target() <= 0.0, ErrorKind::Infeasible,
            "mu = 0 with a positive return target has an empty halfspace");
    return y;
  }
  const double ret = mu.dot(y);
  if (ret >= F.R_target()) return y;
  return y + ((F.R_target() - ret) / mu_sq) * mu;
}

namespace {

// On the linear piece of phi containing nu (fixed simplex support), solve
// phi(nu') = R exactly. Returns false when the piece is flat.
bool linear_piece_root(const Eigen::VectorXd& v, const Eigen::VectorXd& mu,
                       const Eigen::VectorXd& x, double R, double* nu_out) {
  double count = 0.0, sum_mu = 0.0, sum_v = 0.0, sum_mu2 = 0.0, sum_muv = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) <= 0.0) continue;
    count += 1.0;
    sum_mu += mu(i);
    sum_v += v(i);
    sum_mu2 += mu(i) * mu(i);
    sum_muv += mu(i) * v(i);
  }
  if (count == 0.0) return false;
  const double slope = sum_mu2 - sum_mu * sum_mu / count;
  if (!(slope > 0.0)) return false;
  const double intercept = sum_muv - sum_mu * (sum_v - 1.0) / count;
  *nu_out = (R - intercept) / slope;
  return std::isfinite(*nu_out);
}

}  // namespace

double dual_path_return(const Eigen::VectorXd& v, const FeasibleSet& F, double nu) {
  return F.mu().dot(project_simplex(v + nu * F.mu()));
}

Eigen::VectorXd dykstra_project(const Eigen::VectorXd& v, const FeasibleSet& F,
                                const ProjectionConfig& cfg, int* iterations) {
  cfg.validate();
  require(v.size() == F.n(), ErrorKind::Dimension, "projection: dimension mismatch");
  require(F.nonempty(), ErrorKind::Infeasible,
          "feasible set is empty: R_target exceeds max mu");
  const Eigen::Index n = v.size();
  Eigen::VectorXd x = v;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  for (int k = 1; k <= cfg.dykstra_max_iters; ++k) {
    const Eigen::VectorXd y_next = project_simplex(x + p);
    p += x - y_next;
    const Eigen::VectorXd x_next = project_halfspace(y_next + q, F);
    q += y_next - x_next;
    const double change = std::max((y_next - y).norm(), (x_next - x).norm());
    y = y_next;
    x = x_next;
    // Iterates can stall while the correction terms still move, so also
    // require the two sequences to meet.
    if (k > 1 && change <= cfg.dykstra_tol && (x - y).norm() <= cfg.dykstra_tol) {
      if (iterations) *iterations = k;
      return y;
    }
  }
  if (iterations) *iterations = cfg.dykstra_max_iters;
  throw Error(ErrorKind::ProjectionFailure,
              "Dykstra projection did not converge within " +
                  std::to_string(cfg.dykstra_max_iters) + " iterations");
}

Eigen::VectorXd project_feasible(const Eigen::VectorXd& v, const FeasibleSet& F,
                                 const ProjectionConfig& cfg,
                                 ProjectionDiagnostics* diag, double nu_hint) {
  cfg.validate();
  require(v.size() == F.n(), ErrorKind::Dimension, "projection: dimension mismatch");
  require(v.allFinite(), ErrorKind::Numeric, "projection: non-finite input");
  require(F.nonempty(), ErrorKind::Infeasible,
          "return target exceeds max mu; feasible set is empty");

  ProjectionDiagnostics local;
  ProjectionDiagnostics& d = diag ? *diag : local;
  d = {};

  Eigen::VectorXd x = project_simplex(v);
  const double R = F.R_target();
  if (F.mu().dot(x) >= R) return x;

  d.halfspace_active = true;
  const double tol = cfg.tol_scalar * std::max(1.0, std::abs(R));
  auto phi = [&](double nu, Eigen::VectorXd& out) {
    out = project_simplex(v + nu * F.mu());
    return F.mu().dot(out);
  };

  auto fallback = [&]() {
    d.used_fallback = true;
    Eigen::VectorXd result = dykstra_project(v, F, cfg, &d.dykstra_iters);
    d.return_residual = std::abs(F.mu().dot(result) - R);
    return result;
  };

  // Once within tolerance, a few exact solves on the current linear piece
  // remove the residual left by the search.
  auto polish = [&](double nu, Eigen::VectorXd point, double resid) {
    Eigen::VectorXd trial;
    for (int step = 0; step < 3 && resid > 0.0; ++step) {
      double nu_next = 0.0;
      if (!linear_piece_root(v, F.mu(), point, R, &nu_next)) break;
      nu_next = std::max(nu_next, 0.0);
      const double r_next = std::abs(phi(nu_next, trial) - R);
      if (r_next >= resid) break;
      nu = nu_next;
      point = trial;
      resid = r_next;
    }
    d.nu = nu;
    d.return_residual = resid;
    return point;
  };

  // Invariant: phi(lo) < R <= phi(hi) once has_hi is set; x_last is the
  // simplex point of the most recent evaluation.
  double lo = 0.0;
  double hi = 0.0;
  bool has_hi = false;
  Eigen::VectorXd x_last = x;
  Eigen::VectorXd x_eval;
  auto record = [&](double nu, double value) {
    if (value < R) {
      lo = std::max(lo, nu);
    } else if (!has_hi || nu < hi) {
      hi = nu;
      has_hi = true;
    }
    x_last = x_eval;
  };

  if (nu_hint > 0.0 && std::isfinite(nu_hint)) {
    double value = phi(nu_hint, x_eval);
    if (std::abs(value - R) <= tol) return polish(nu_hint, x_eval, std::abs(value - R));
    record(nu_hint, value);
    double piece = 0.0;
    if (linear_piece_root(v, F.mu(), x_last, R, &piece) && piece > lo &&
        (!has_hi || piece < hi)) {
      value = phi(piece, x_eval);
      if (std::abs(value - R) <= tol) return polish(piece, x_eval, std::abs(value - R));
      record(piece, value);
    }
  }

  if (!has_hi) {
    hi = std::max(1.0, 2.0 * lo);
    double phi_hi = phi(hi, x_eval);
    while (phi_hi < R) {
      if (d.bracket_doublings >= cfg.max_bracket_doublings) return fallback();
      lo = hi;
      hi *= 2.0;
      ++d.bracket_doublings;
      phi_hi = phi(hi, x_eval);
    }
    if (std::abs(phi_hi - R) <= tol) return polish(hi, x_eval, std::abs(phi_hi - R));
    x_last = x_eval;
  }

  // Inside the bracket, step to the root of the linear piece through the
  // most recent point; bisect when that root leaves the bracket or two piece
  // steps in a row move the same end.
  int same_side = 0;
  bool last_low = false;
  while (d.bisection_iters < cfg.max_bisection_iters) {
    double trial = 0.5 * (lo + hi);
    if (trial <= lo || trial >= hi) break;
    double piece = 0.0;
    if (same_side < 2 && linear_piece_root(v, F.mu(), x_last, R, &piece) && piece > lo &&
        piece < hi)
      trial = piece;
    else
      same_side = 0;
    ++d.bisection_iters;
    const double value = phi(trial, x_eval);
    if (std::abs(value - R) <= tol) return polish(trial, x_eval, std::abs(value - R));
    const bool low = value < R;
    same_side = (low == last_low) ? same_side + 1 : 1;
    last_low = low;
    if (low) {
      lo = trial;
    } else {
      hi = trial;
    }
    x_last = x_eval;
  }
  return fallback();
}

}  // namespace strnpga
