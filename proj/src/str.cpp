#include "strnpga/str.hpp"

#include <algorithm>
#include <cmath>

#include "strnpga/error.hpp"

namespace strnpga {

const char* to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::baseline: return "baseline";
    case ModelKind::sketch: return "sketch";
    case ModelKind::str: return "str";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "baseline") return ModelKind::baseline;
  if (name == "sketch") return ModelKind::sketch;
  if (name == "str") return ModelKind::str;
  throw Error(ErrorKind::Argument, "unknown model kind '" + name + "'");
}

FactorModel::FactorModel(ModelKind kind, Eigen::MatrixXd L_eff, double gamma,
                         ModelProvenance provenance)
    : kind_(kind),
      L_eff_(std::move(L_eff)),
      gamma_(gamma),
      provenance_(std::move(provenance)) {
  require(L_eff_.allFinite() && std::isfinite(gamma_), ErrorKind::Numeric,
          "factor model has non-finite entries");
  require(L_eff_.rows() >= 1, ErrorKind::Dimension, "factor model has no assets");
  if (kind_ == ModelKind::str) {
    require(gamma_ > 0.0, ErrorKind::Argument, "STR model requires gamma > 0");
  } else {
    require(gamma_ == 0.0, ErrorKind::Argument,
            std::string(to_string(kind_)) + " model requires gamma = 0");
  }
}

double FactorModel::objective(const Eigen::VectorXd& x) const {
  require(x.size() == n(), ErrorKind::Dimension, "objective: dimension mismatch");
  return (L_eff_.transpose() * x).squaredNorm() + gamma_ * x.squaredNorm();
}

double FactorModel::objective_quadratic(const Eigen::VectorXd& x) const {
  require(x.size() == n(), ErrorKind::Dimension, "objective: dimension mismatch");
  const Eigen::VectorXd z = L_eff_.transpose() * x;
  const Eigen::VectorXd Sx = L_eff_ * z;
  return x.dot(Sx) + gamma_ * x.dot(x);
}

void FactorModel::gradient_into(const Eigen::VectorXd& x, Eigen::VectorXd& work,
                                Eigen::VectorXd& out) const {
  require(x.size() == n(), ErrorKind::Dimension, "gradient: dimension mismatch");
  work.noalias() = L_eff_.transpose() * x;
  out.noalias() = L_eff_ * work;
  out = 2.0 * out + (2.0 * gamma_) * x;
}

Eigen::VectorXd FactorModel::gradient(const Eigen::VectorXd& x) const {
  Eigen::VectorXd work(columns());
  Eigen::VectorXd out(n());
  gradient_into(x, work, out);
  return out;
}

Eigen::MatrixXd FactorModel::dense_covariance() const {
  Eigen::MatrixXd Sigma = L_eff_ * L_eff_.transpose();
  Sigma.diagonal().array() += gamma_;
  return Sigma;
}

void RidgePolicy::validate() const {
  if (mode == RidgeMode::target_kappa) {
    require(kappa_target > 1.0, ErrorKind::Argument, "kappa_target must exceed 1");
  } else {
    require(gamma_explicit > 0.0, ErrorKind::Argument,
            "explicit ridge must be positive");
  }
}

FactorModel build_baseline(const CovarianceFactor& factor) {
  return FactorModel(ModelKind::baseline, factor.L, 0.0);
}

FactorModel build_sketch(const CovarianceFactor& factor, const SketchConfig& cfg) {
  SketchedFactor sk = apply_sketch(factor.L, cfg);
  ModelProvenance prov;
  prov.sketch = sk.config;
  return FactorModel(ModelKind::sketch, std::move(sk.Ltilde), 0.0, std::move(prov));
}

double ridge_for_target_kappa(double sigma1, double kappa_target) {
  require(kappa_target > 1.0, ErrorKind::Argument, "kappa_target must exceed 1");
  require(sigma1 > 0.0, ErrorKind::Degenerate,
          "ridge for a target kappa needs sigma_1 > 0");
  return sigma1 * sigma1 / (kappa_target - 1.0);
}

double kappa_improvement_threshold(double lambda_min, double lambda_max,
                                   double epsilon) {
  require(lambda_min > 0.0, ErrorKind::Argument, "lambda_min must be positive");
  require(epsilon >= 0.0, ErrorKind::Argument, "epsilon must be nonnegative");
  const double lifted = (1.0 + epsilon) * lambda_min;
  const double denom = lambda_max - lifted;
  require(denom > 0.0, ErrorKind::Argument,
          "kappa improvement condition inapplicable: lambda_max <= (1+eps) lambda_min");
  return lifted * lambda_max / denom;
}

FactorModel str_from_sketch(const SketchedFactor& sketched,
                            std::optional<Eigen::Index> ell,
                            const TruncationRule& rule, const RidgePolicy& ridge) {
  ridge.validate();
  const ThinSVD svd = thin_svd(sketched.Ltilde);
  require(svd.rank() > 0, ErrorKind::Degenerate,
          "STR: sketched factor has a zero spectrum");
  const std::vector<double> sigma = to_std(svd.S);
  Eigen::Index level = 0;
  if (ell) {
    require(*ell >= 1, ErrorKind::Argument, "truncation level must be >= 1");
    level = std::min(*ell, svd.rank());
  } else {
    level = select_truncation_level(sigma, rule);
  }

  const double sigma1 = svd.S(0);
  const double gamma = ridge.mode == RidgeMode::target_kappa
                           ? ridge_for_target_kappa(sigma1, ridge.kappa_target)
                           : ridge.gamma_explicit;
  require(gamma > 0.0, ErrorKind::Argument, "STR ridge must be positive");

  ModelProvenance prov;
  prov.sketch = sketched.config;
  prov.ell = level;
  prov.sigma1 = sigma1;
  prov.sketched_singular_values = sigma;
  prov.ridge_rule =
      ridge.mode == RidgeMode::target_kappa ? "target_kappa" : "explicit";
  if (ridge.mode == RidgeMode::target_kappa) prov.kappa_target = ridge.kappa_target;

  Eigen::MatrixXd L_eff = svd.U.leftCols(level) * svd.S.head(level).asDiagonal();
  return FactorModel(ModelKind::str, std::move(L_eff), gamma, std::move(prov));
}

FactorModel build_str(const CovarianceFactor& factor, const SketchConfig& cfg,
                      const TruncationRule& rule, const RidgePolicy& ridge) {
  return str_from_sketch(apply_sketch(factor.L, cfg), std::nullopt, rule, ridge);
}

FactorModel build_str_at_level(const CovarianceFactor& factor,
                               const SketchConfig& cfg, Eigen::Index ell,
                               const RidgePolicy& ridge) {
  return str_from_sketch(apply_sketch(factor.L, cfg), ell, TruncationRule{}, ridge);
}

}  // namespace strnpga
