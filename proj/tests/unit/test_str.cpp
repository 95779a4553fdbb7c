#include <gtest/gtest.h>

#include <cmath>

#include "strnpga/error.hpp"
#include "strnpga/sketch.hpp"
#include "strnpga/str.hpp"
#include "test_support.hpp"

using namespace strnpga;

namespace {

CovarianceFactor factor_of(Eigen::MatrixXd L) {
  CovarianceFactor f;
  f.mean = Eigen::VectorXd::Zero(L.rows());
  f.L = std::move(L);
  return f;
}

Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& A) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A, Eigen::EigenvaluesOnly)
      .eigenvalues();
}

}  // namespace

TEST(Baseline, WrapsFactor) {
  std::mt19937_64 rng(1);
  const CovarianceFactor f = factor_of(testutil::random_matrix(4, 9, rng));
  const FactorModel m = build_baseline(f);
  EXPECT_EQ(m.kind(), ModelKind::baseline);
  EXPECT_EQ(m.gamma(), 0.0);
  const Eigen::VectorXd x = testutil::random_vector(4, rng);
  EXPECT_NEAR(m.objective(x), x.dot(f.L * f.L.transpose() * x), 1e-12 * m.objective(x));
}

TEST(Baseline, ZeroFactorIsZeroModel) {
  const FactorModel m = build_baseline(factor_of(Eigen::MatrixXd::Zero(3, 5)));
  EXPECT_EQ(m.objective(Eigen::VectorXd::Ones(3)), 0.0);
}

TEST(Baseline, SingleAssetMatchesSampleVariance) {
  Eigen::MatrixXd L(1, 2);
  L << -1, 1;
  const FactorModel m = build_baseline(factor_of(L));
  Eigen::VectorXd x(1);
  x << 0.7;
  EXPECT_DOUBLE_EQ(m.objective(x), 2.0 * 0.49);
}

TEST(FactorModelInvariants, GammaMustMatchKind) {
  const Eigen::MatrixXd L = Eigen::MatrixXd::Ones(2, 2);
  EXPECT_THROW(FactorModel(ModelKind::baseline, L, 0.1), Error);
  EXPECT_THROW(FactorModel(ModelKind::sketch, L, 0.1), Error);
  EXPECT_THROW(FactorModel(ModelKind::str, L, 0.0), Error);
  EXPECT_NO_THROW(FactorModel(ModelKind::str, L, 0.1));
}

TEST(FactorModelInvariants, TwoObjectiveFormsAgree) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const FactorModel m(ModelKind::str, testutil::random_matrix(7, 3, rng), 0.3);
    const Eigen::VectorXd x = testutil::random_vector(7, rng);
    const double a = m.objective(x);
    EXPECT_NEAR(m.objective_quadratic(x), a, 1e-12 * a);
  }
}

TEST(SketchModel, IdentitySketchReproducesBaseline) {
  std::mt19937_64 rng(3);
  const CovarianceFactor f = factor_of(testutil::random_matrix(5, 8, rng));
  const FactorModel m = build_sketch(f, {SketchKind::identity, 8, 0});
  const FactorModel b = build_baseline(f);
  const Eigen::VectorXd x = testutil::random_vector(5, rng);
  EXPECT_EQ(m.objective(x), b.objective(x));
}

TEST(SketchModel, ZeroFactorGivesZeroModel) {
  const FactorModel m =
      build_sketch(factor_of(Eigen::MatrixXd::Zero(3, 10)), {SketchKind::gaussian_jl, 4, 1});
  EXPECT_EQ(m.objective(Eigen::VectorXd::Ones(3)), 0.0);
}

TEST(SketchModel, QuadraticFormSandwich) {
  std::mt19937_64 rng(4);
  for (SketchKind kind : {SketchKind::gaussian_jl, SketchKind::countsketch}) {
    const CovarianceFactor f = factor_of(testutil::random_matrix(6, 300, rng));
    const FactorModel m = build_sketch(f, {kind, 120, 9});
    const double eps = embedding_distortion(f.L, m.L_eff());
    for (int k = 0; k < 200; ++k) {
      const Eigen::VectorXd x = testutil::random_vector(6, rng);
      const double exact = (f.L.transpose() * x).squaredNorm();
      EXPECT_LE(std::abs(m.objective(x) - exact), (eps + 1e-12) * exact);
    }
  }
}

TEST(Ridge, Examples) {
  EXPECT_DOUBLE_EQ(ridge_for_target_kappa(2.0, 5.0), 1.0);
  Eigen::MatrixXd Sigma_hat = Eigen::MatrixXd::Zero(3, 3);
  Sigma_hat(0, 0) = 4.0;
  Sigma_hat.diagonal().array() += 1.0;
  const Eigen::VectorXd ev = sym_eigenvalues(Sigma_hat);
  EXPECT_DOUBLE_EQ(ev.maxCoeff() / ev.minCoeff(), 5.0);
  EXPECT_THROW(ridge_for_target_kappa(2.0, 1.0), Error);
  try {
    ridge_for_target_kappa(0.0, 10.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Degenerate);
  }
}

TEST(Ridge, DecreasesWithTargetKappa) {
  double prev = ridge_for_target_kappa(1.5, 1.01);
  for (double kappa = 2.0; kappa < 1e9; kappa *= 3.0) {
    const double g = ridge_for_target_kappa(1.5, kappa);
    EXPECT_LT(g, prev);
    EXPECT_GT(g, 0.0);
    prev = g;
  }
}

TEST(KappaThreshold, Examples) {
  EXPECT_NEAR(kappa_improvement_threshold(1, 100, 0.0), 100.0 / 99.0, 1e-15);
  EXPECT_NEAR(kappa_improvement_threshold(1, 100, 0.1), 110.0 / 98.9, 1e-13);
  EXPECT_THROW(kappa_improvement_threshold(1.0, 1.1, 0.1), Error);
  EXPECT_THROW(kappa_improvement_threshold(1.0, 1.0, 0.0), Error);
}

TEST(Str, ExactRankRecovery) {
  std::mt19937_64 rng(5);
  const CovarianceFactor f = factor_of(testutil::low_rank_matrix(6, 20, 2, rng));
  const FactorModel m = build_str(f, {SketchKind::gaussian_jl, 20, 3}, {}, RidgePolicy::fixed(0.1));
  ASSERT_TRUE(m.provenance().ell.has_value());
  EXPECT_EQ(*m.provenance().ell, 2);
  EXPECT_EQ(m.columns(), 2);
  const Eigen::MatrixXd Sigma = f.L * f.L.transpose();
  const double s1sq = testutil::dense_sym_norm(Sigma);
  // s = T Gaussian sketch is not an isometry; use the identity sketch for exact recovery.
  const FactorModel exact =
      build_str(f, {SketchKind::identity, 20, 0}, {}, RidgePolicy::fixed(0.1));
  EXPECT_EQ(*exact.provenance().ell, 2);
  EXPECT_LE(testutil::dense_sym_norm(exact.L_eff() * exact.L_eff().transpose() - Sigma),
            1e-8 * s1sq);
}

TEST(Str, EigenvaluesAreShiftedSquares) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const CovarianceFactor f = factor_of(testutil::random_matrix(8, 40, rng));
    const FactorModel m = build_str_at_level(f, {SketchKind::countsketch, 12, std::uint64_t(trial)}, 3,
                                             RidgePolicy::fixed(0.05));
    const auto& sv = m.provenance().sketched_singular_values;
    std::vector<double> expected;
    for (int i = 0; i < 3; ++i) expected.push_back(sv[std::size_t(i)] * sv[std::size_t(i)] + 0.05);
    for (int i = 3; i < 8; ++i) expected.push_back(0.05);
    std::sort(expected.begin(), expected.end());
    const Eigen::VectorXd ev = sym_eigenvalues(m.dense_covariance());
    for (int i = 0; i < 8; ++i)
      EXPECT_NEAR(ev(i), expected[std::size_t(i)], 1e-10 * expected.back());
  }
}

TEST(Str, KappaIdentity) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const CovarianceFactor f = factor_of(testutil::random_matrix(10, 50, rng));
    // The identity needs ell < n so that gamma is an eigenvalue.
    const FactorModel m = build_str_at_level(f, {SketchKind::gaussian_jl, 25, std::uint64_t(trial)},
                                             1 + trial % 8, RidgePolicy::target(100.0));
    const Eigen::VectorXd ev = sym_eigenvalues(m.dense_covariance());
    const double s1 = *m.provenance().sigma1;
    const double expected = (s1 * s1 + m.gamma()) / m.gamma();
    EXPECT_NEAR(expected, 100.0, 1e-10 * 100.0);
    EXPECT_NEAR(ev.maxCoeff() / ev.minCoeff(), expected, 1e-10 * expected);
  }
}

TEST(Str, RightFactorDoesNotChangeObjective) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd Lt = testutil::random_matrix(7, 15, rng);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Lt, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::Index ell = 4;
    const Eigen::MatrixXd US = svd.matrixU().leftCols(ell) * svd.singularValues().head(ell).asDiagonal();
    const Eigen::MatrixXd USV = US * svd.matrixV().leftCols(ell).transpose();
    const FactorModel narrow(ModelKind::str, US, 0.2);
    const FactorModel wide(ModelKind::str, USV, 0.2);
    const Eigen::VectorXd x = testutil::random_vector(7, rng);
    EXPECT_NEAR(narrow.objective(x), wide.objective(x), 1e-10 * wide.objective(x));
    EXPECT_LE((narrow.gradient(x) - wide.gradient(x)).norm(), 1e-10 * wide.gradient(x).norm());
  }
}

TEST(Str, ConcatenatedFactorIdentity) {
  std::mt19937_64 rng(9);
  const CovarianceFactor f = factor_of(testutil::random_matrix(6, 30, rng));
  const FactorModel m = build_str_at_level(f, {SketchKind::gaussian_jl, 10, 1}, 3, RidgePolicy::fixed(0.3));
  Eigen::MatrixXd Lhat(6, 3 + 6);
  Lhat << m.L_eff(), std::sqrt(0.3) * Eigen::MatrixXd::Identity(6, 6);
  EXPECT_LE((Lhat * Lhat.transpose() - m.dense_covariance()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Str, ExplicitLevelIsClampedToRank) {
  std::mt19937_64 rng(10);
  const CovarianceFactor f = factor_of(testutil::low_rank_matrix(5, 20, 2, rng));
  const FactorModel m = build_str_at_level(f, {SketchKind::identity, 20, 0}, 4, RidgePolicy::fixed(1.0));
  EXPECT_EQ(m.columns(), 2);
}

TEST(Str, DegenerateSpectrumIsError) {
  const CovarianceFactor f = factor_of(Eigen::MatrixXd::Zero(3, 6));
  try {
    build_str(f, {SketchKind::gaussian_jl, 3, 0}, {}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Degenerate);
  }
  std::mt19937_64 rng(11);
  const CovarianceFactor g = factor_of(testutil::random_matrix(3, 6, rng));
  EXPECT_THROW(build_str(g, {SketchKind::gaussian_jl, 3, 0}, {}, RidgePolicy::fixed(0.0)), Error);
}

TEST(StrBounds, StabilityAndSpectralApproximation) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 5 + trial % 10;
    const CovarianceFactor f = factor_of(testutil::random_matrix(n, 80, rng) / std::sqrt(79.0));
    const SketchConfig cfg{trial % 2 ? SketchKind::countsketch : SketchKind::gaussian_jl, 40,
                           std::uint64_t(100 + trial)};
    const SketchedFactor sk = apply_sketch(f.L, cfg);
    const double eps = embedding_distortion(f.L, sk.Ltilde);
    if (eps >= 1.0) continue;
    const Eigen::Index ell = 1 + trial % 4;
    const FactorModel m = str_from_sketch(sk, ell, {}, RidgePolicy::fixed(0.01));
    const Eigen::MatrixXd Sigma = f.L * f.L.transpose();
    const double err = testutil::dense_sym_norm(m.dense_covariance() - Sigma);
    const double norm = testutil::dense_sym_norm(Sigma);
    const auto& sv = m.provenance().sketched_singular_values;
    const double lam_next = std::size_t(ell) < sv.size() ? sv[std::size_t(ell)] * sv[std::size_t(ell)] : 0.0;
    EXPECT_LE(err, 2 * eps * norm + lam_next / (1 - eps) + m.gamma() + 1e-12 * norm);

    Eigen::VectorXd lam = sym_eigenvalues(Sigma).reverse();
    const double lam_true_next = ell < n ? lam(ell) : 0.0;
    EXPECT_LE(err, lam_true_next + 2 * eps * norm + m.gamma() + 1e-12 * norm);
  }
}

TEST(StrBounds, ConditioningImprovesAboveThreshold) {
  std::mt19937_64 rng(13);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const CovarianceFactor f = factor_of(testutil::random_matrix(6, 60, rng));
    const Eigen::MatrixXd Sigma = f.L * f.L.transpose();
    const Eigen::VectorXd ev = sym_eigenvalues(Sigma);
    const SketchedFactor sk = apply_sketch(f.L, {SketchKind::gaussian_jl, 30, std::uint64_t(trial)});
    const double eps = embedding_distortion(f.L, sk.Ltilde);
    if (ev.maxCoeff() <= (1 + eps) * ev.minCoeff()) continue;
    const double thr = kappa_improvement_threshold(ev.minCoeff(), ev.maxCoeff(), eps);
    const FactorModel m = str_from_sketch(sk, Eigen::Index{6}, {}, RidgePolicy::fixed(1.01 * thr));
    const Eigen::VectorXd evh = sym_eigenvalues(m.dense_covariance());
    EXPECT_LT(evh.maxCoeff() / evh.minCoeff(), ev.maxCoeff() / ev.minCoeff());
    ++checked;
  }
  EXPECT_GT(checked, 20);
}
