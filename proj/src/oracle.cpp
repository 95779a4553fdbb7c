#include "strnpga/oracle.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "strnpga/error.hpp"

namespace strnpga {

namespace {

constexpr double kPrimalTol = 1e-10;
constexpr double kDualTol = 1e-9;
constexpr double kSolveTol = 1e-9;
constexpr double kTieTol = 1e-12;

}  // namespace

void QPInstance::validate() const {
  const Eigen::Index n = F.n();
  require(n <= kOracleMaxAssets, ErrorKind::Dimension,
          "exact oracle is limited to n <= " + std::to_string(kOracleMaxAssets));
  require(Q.rows() == n && Q.cols() == n && c.size() == n, ErrorKind::Dimension,
          "QP instance dimensions disagree");
  require(Q.allFinite() && c.allFinite(), ErrorKind::Numeric, "QP instance is not finite");
  const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  require((Q - Q.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
          ErrorKind::Argument, "Q must be symmetric");
}

std::string ActiveSet::describe() const {
  std::ostringstream out;
  out << "zero={";
  bool first = true;
  for (std::size_t i = 0; i < at_zero.size(); ++i) {
    if (!at_zero[i]) continue;
    out << (first ? "" : ",") << i;
    first = false;
  }
  out << "} return=" << (return_active ? "active" : "inactive");
  return out.str();
}

bool ActiveSet::operator<(const ActiveSet& other) const {
  if (at_zero != other.at_zero) return at_zero < other.at_zero;
  return return_active < other.return_active;
}

ExactSolution solve_exact(const QPInstance& inst) {
  inst.validate();
  const FeasibleSet& F = inst.F;
  require(F.nonempty(), ErrorKind::Infeasible,
          "no feasible point: R_target exceeds max mu");
  const Eigen::Index n = F.n();
  const Eigen::VectorXd& mu = F.mu();
  const double R = F.R_target();
  const double dual_scale =
      std::max({1.0, inst.Q.cwiseAbs().maxCoeff(), inst.c.cwiseAbs().maxCoeff(),
                mu.cwiseAbs().maxCoeff()});

  ExactSolution best;
  bool found = false;
  best.value = std::numeric_limits<double>::infinity();

  const std::size_t masks = std::size_t{1} << n;
  std::vector<Eigen::Index> free_idx;
  free_idx.reserve(static_cast<std::size_t>(n));

  for (std::size_t mask = 0; mask < masks; ++mask) {
    free_idx.clear();
    for (Eigen::Index i = 0; i < n; ++i)
      if (!(mask >> i & 1U)) free_idx.push_back(i);
    const auto k = static_cast<Eigen::Index>(free_idx.size());

    for (int ret = 0; ret < 2; ++ret) {
      ++best.subsets_visited;
      if (k == 0) continue;
      const Eigen::Index m = k + 1 + ret;
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
      Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
      for (Eigen::Index a = 0; a < k; ++a) {
        const Eigen::Index i = free_idx[static_cast<std::size_t>(a)];
        for (Eigen::Index c = 0; c < k; ++c)
          A(a, c) = inst.Q(i, free_idx[static_cast<std::size_t>(c)]);
        A(a, k) = -1.0;
        A(k, a) = 1.0;
        b(a) = -inst.c(i);
        if (ret) {
          A(a, k + 1) = -mu(i);
          A(k + 1, a) = mu(i);
        }
      }
      b(k) = 1.0;
      if (ret) b(k + 1) = R;

      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
      const Eigen::VectorXd sol = cod.solve(b);
      const double resid = (A * sol - b).norm();
      if (!sol.allFinite() ||
          resid > kSolveTol * (A.norm() * sol.norm() + b.norm() + 1.0)) {
        ++best.singular_subsets;
        continue;
      }

      Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
      bool ok = true;
      for (Eigen::Index a = 0; a < k; ++a) {
        const double xi = sol(a);
        if (xi < -kPrimalTol) ok = false;
        x(free_idx[static_cast<std::size_t>(a)]) = xi;
      }
      if (!ok) continue;
      const double lambda = sol(k);
      const double nu = ret ? sol(k + 1) : 0.0;
      if (ret && nu < -kDualTol * dual_scale) continue;
      if (!ret && mu.dot(x) < R - kPrimalTol * std::max(1.0, std::abs(R))) continue;

      const Eigen::VectorXd grad = inst.Q * x + inst.c;
      for (Eigen::Index i = 0; i < n && ok; ++i) {
        if (!(mask >> i & 1U)) continue;
        if (grad(i) - lambda - nu * mu(i) < -kDualTol * dual_scale) ok = false;
      }
      if (!ok) continue;

      const double value = 0.5 * x.dot(inst.Q * x) + inst.c.dot(x);
      ActiveSet active;
      active.at_zero.resize(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i)
        active.at_zero[static_cast<std::size_t>(i)] = (mask >> i & 1U) != 0;
      active.return_active = ret != 0;

      const double tie = kTieTol * std::max(1.0, std::abs(best.value));
      const bool better = !found || value < best.value - tie ||
                          (std::abs(value - best.value) <= tie && active < best.active);
      if (better) {
        found = true;
        best.x = std::move(x);
        best.value = value;
        best.active = std::move(active);
      }
    }
  }
  require(found, ErrorKind::Infeasible, "exact oracle found no feasible KKT point");
  return best;
}

Eigen::VectorXd project_exact(const Eigen::VectorXd& v, const FeasibleSet& F) {
  require(v.size() == F.n(), ErrorKind::Dimension, "project_exact: dimension mismatch");
  const Eigen::Index n = F.n();
  QPInstance inst{2.0 * Eigen::MatrixXd::Identity(n, n), -2.0 * v, F};
  return solve_exact(inst).x;
}

QPInstance mean_variance_qp(const Eigen::MatrixXd& Sigma, const FeasibleSet& F) {
  return QPInstance{2.0 * Sigma, Eigen::VectorXd::Zero(F.n()), F};
}

}  // namespace strnpga
