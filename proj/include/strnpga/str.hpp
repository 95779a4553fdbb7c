#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "strnpga/panel.hpp"
#include "strnpga/sketch.hpp"
#include "strnpga/spectrum.hpp"

namespace strnpga {

enum class ModelKind { baseline, sketch, str };

const char* to_string(ModelKind kind) noexcept;
ModelKind model_kind_from_string(const std::string& name);

/// How a model was built. Fields that do not apply stay empty.
struct ModelProvenance {
  std::optional<SketchConfig> sketch;
  std::optional<Eigen::Index> ell;
  std::optional<double> sigma1;                 // leading sketched singular value
  std::vector<double> sketched_singular_values;  // full spectrum of L~ (str)
  std::string ridge_rule;                        // "target_kappa" / "explicit"
  std::optional<double> kappa_target;
};

/// Effective factor plus ridge: f(x) = ||L_eff^T x||^2 + gamma ||x||^2.
class FactorModel {
 public:
  FactorModel(ModelKind kind, Eigen::MatrixXd L_eff, double gamma,
              ModelProvenance provenance = {});

  ModelKind kind() const noexcept { return kind_; }
  const Eigen::MatrixXd& L_eff() const noexcept { return L_eff_; }
  double gamma() const noexcept { return gamma_; }
  const ModelProvenance& provenance() const noexcept { return provenance_; }
  Eigen::Index n() const noexcept { return L_eff_.rows(); }
  Eigen::Index columns() const noexcept { return L_eff_.cols(); }

  double objective(const Eigen::VectorXd& x) const;
  /// x^T (L (L^T x)) + gamma x^T x; agrees with objective() up to roundoff.
  double objective_quadratic(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  /// Writes the gradient into `out`, reusing `work` (size columns()).
  void gradient_into(const Eigen::VectorXd& x, Eigen::VectorXd& work,
                     Eigen::VectorXd& out) const;

  /// L_eff L_eff^T + gamma I. For tests and small-scale diagnostics.
  Eigen::MatrixXd dense_covariance() const;

 private:
  ModelKind kind_;
  Eigen::MatrixXd L_eff_;
  double gamma_;
  ModelProvenance provenance_;
};

enum class RidgeMode { target_kappa, explicit_gamma };

struct RidgePolicy {
  RidgeMode mode = RidgeMode::target_kappa;
  double kappa_target = 1e3;
  double gamma_explicit = 0.0;

  static RidgePolicy target(double kappa) {
    return {RidgeMode::target_kappa, kappa, 0.0};
  }
  static RidgePolicy fixed(double gamma) {
    return {RidgeMode::explicit_gamma, 0.0, gamma};
  }
  void validate() const;
};

FactorModel build_baseline(const CovarianceFactor& factor);
FactorModel build_sketch(const CovarianceFactor& factor,
                         const SketchConfig& cfg);

/// gamma = sigma1^2 / (kappa_target - 1), so that (sigma1^2 + gamma)/gamma
/// equals kappa_target.
double ridge_for_target_kappa(double sigma1, double kappa_target);

/// Smallest ridge for which STR is guaranteed to improve kappa(Sigma):
///   (1+eps) lmin lmax / (lmax - (1+eps) lmin).
double kappa_improvement_threshold(double lambda_min, double lambda_max,
                                   double epsilon);

/// Sketch, truncate at the rule's level, ridge. L_eff = U_ell S_ell.
FactorModel build_str(const CovarianceFactor& factor, const SketchConfig& cfg,
                      const TruncationRule& rule, const RidgePolicy& ridge);

/// Same pipeline with a caller-chosen truncation level (clamped to the
/// numerical rank of the sketch).
FactorModel build_str_at_level(const CovarianceFactor& factor,
                               const SketchConfig& cfg, Eigen::Index ell,
                               const RidgePolicy& ridge);

/// STR stages applied to an already sketched factor.
FactorModel str_from_sketch(const SketchedFactor& sketched,
                            std::optional<Eigen::Index> ell,
                            const TruncationRule& rule,
                            const RidgePolicy& ridge);

}  // namespace strnpga
