#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "strnpga/error.hpp"
#include "strnpga/sketch.hpp"
#include "test_support.hpp"

using namespace strnpga;

namespace {

// Sampled max relative distortion of ||Lt^T x||^2 against ||L^T x||^2.
double sampled_distortion(const Eigen::MatrixXd& L, const Eigen::MatrixXd& Lt,
                          int samples, std::mt19937_64& rng) {
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const Eigen::VectorXd x = testutil::random_vector(L.rows(), rng);
    const double exact = (L.transpose() * x).squaredNorm();
    const double approx = (Lt.transpose() * x).squaredNorm();
    worst = std::max(worst, std::abs(approx / exact - 1.0));
  }
  return worst;
}

}  // namespace

TEST(Sketch, ZeroFactorStaysZero) {
  const Eigen::MatrixXd L = Eigen::MatrixXd::Zero(3, 10);
  EXPECT_EQ(gaussian_jl_sketch(L, 4, 1).Ltilde, Eigen::MatrixXd::Zero(3, 4));
  const SketchedFactor cs = countsketch_sketch(L, 4, 1);
  EXPECT_EQ(cs.Ltilde, Eigen::MatrixXd::Zero(3, 4));
  EXPECT_EQ(cs.apply_ops, 0U);
}

TEST(Sketch, ShapeAndDeterminism) {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd L = testutil::random_matrix(2, 8, rng);
  const SketchedFactor a = gaussian_jl_sketch(L, 4, 1);
  const SketchedFactor b = gaussian_jl_sketch(L, 4, 1);
  EXPECT_EQ(a.Ltilde.rows(), 2);
  EXPECT_EQ(a.Ltilde.cols(), 4);
  EXPECT_EQ(a.Ltilde, b.Ltilde);
  EXPECT_NE(gaussian_jl_sketch(L, 4, 2).Ltilde, a.Ltilde);
  EXPECT_EQ(countsketch_sketch(L, 4, 1).Ltilde, countsketch_sketch(L, 4, 1).Ltilde);
}

TEST(Sketch, OutOfRangeSizeIsDimensionError) {
  const Eigen::MatrixXd L = Eigen::MatrixXd::Ones(2, 5);
  for (Eigen::Index s : {Eigen::Index{0}, Eigen::Index{6}}) {
    try {
      gaussian_jl_sketch(L, s, 0);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Dimension);
    }
    EXPECT_THROW(countsketch_sketch(L, s, 0), Error);
  }
}

TEST(Sketch, GaussianIndependentOfMemoryCap) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd L = testutil::random_matrix(7, 50, rng);
  SketchConfig cfg{SketchKind::gaussian_jl, 13, 99};
  const Eigen::MatrixXd reference = apply_sketch(L, cfg).Ltilde;
  for (std::size_t cap : {std::size_t{1}, std::size_t{60}, std::size_t{50 * 5}, std::size_t{1} << 30}) {
    cfg.dense_memory_cap = cap;
    EXPECT_EQ(apply_sketch(L, cfg).Ltilde, reference) << "cap " << cap;
  }
  // And agrees with the materialized matrix.
  const Eigen::MatrixXd Phi = materialize_sketch(50, cfg);
  EXPECT_LE((L * Phi - reference).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Sketch, GaussianEntryVariance) {
  const SketchConfig cfg{SketchKind::gaussian_jl, 50, 3};
  const Eigen::MatrixXd Phi = materialize_sketch(4000, cfg);
  const double mean = Phi.mean();
  const double var = (Phi.array() - mean).square().sum() / double(Phi.size() - 1);
  EXPECT_NEAR(mean, 0.0, 3e-3);
  EXPECT_NEAR(var * 50.0, 1.0, 0.02);
}

TEST(Sketch, CountSketchHandExample) {
  Eigen::MatrixXd L(2, 4);
  L << 1, 0, 0, 0, 0, 1, 0, 0;
  const SketchedFactor out = countsketch_apply(L, {0, 1, 0, 1}, {1.0, -1.0, 1.0, -1.0}, 2);
  Eigen::MatrixXd expected(2, 2);
  expected << 1, 0, 0, -1;
  EXPECT_EQ(out.Ltilde, expected);
}

TEST(Sketch, CountSketchRowsHaveSingleSignedEntry) {
  const SketchConfig cfg{SketchKind::countsketch, 7, 42};
  const Eigen::MatrixXd Phi = materialize_sketch(200, cfg);
  for (Eigen::Index t = 0; t < Phi.rows(); ++t) {
    int nonzeros = 0;
    for (Eigen::Index j = 0; j < Phi.cols(); ++j) {
      if (Phi(t, j) == 0.0) continue;
      ++nonzeros;
      EXPECT_EQ(std::abs(Phi(t, j)), 1.0);
    }
    EXPECT_EQ(nonzeros, 1) << "row " << t;
  }
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd L = testutil::random_matrix(5, 200, rng);
  EXPECT_LE((L * Phi - apply_sketch(L, cfg).Ltilde).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Sketch, CountSketchBucketsAreRoughlyUniform) {
  const Eigen::Index s = 8;
  std::vector<int> counts(s, 0);
  int positive = 0;
  const int T = 80000;
  for (int t = 0; t < T; ++t) {
    ++counts[static_cast<std::size_t>(countsketch_bucket(17, t, s))];
    positive += countsketch_sign(17, t) > 0;
  }
  for (int c : counts) EXPECT_NEAR(c, T / s, 5 * std::sqrt(T / s));
  EXPECT_NEAR(positive, T / 2, 5 * std::sqrt(T / 4));
}

TEST(Sketch, CountSketchCostIsLinearInNonzeros) {
  std::mt19937_64 rng(8);
  std::bernoulli_distribution keep(0.1);
  for (Eigen::Index T : {100, 400, 1600}) {
    Eigen::MatrixXd L = testutil::random_matrix(20, T, rng);
    for (Eigen::Index i = 0; i < L.size(); ++i)
      if (!keep(rng)) L.data()[i] = 0.0;
    const auto nnz = static_cast<std::size_t>((L.array() != 0.0).count());
    EXPECT_EQ(countsketch_sketch(L, 16, 3).apply_ops, nnz);
  }
}

TEST(Sketch, IdentityKindReturnsFactor) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd L = testutil::random_matrix(3, 6, rng);
  EXPECT_EQ(apply_sketch(L, {SketchKind::identity, 6, 0}).Ltilde, L);
  EXPECT_THROW(apply_sketch(L, {SketchKind::identity, 5, 0}), Error);
}

TEST(Sketch, MaterializeRefusesLargeMatrices) {
  EXPECT_THROW(materialize_sketch(2000000, {SketchKind::countsketch, 2, 0}), Error);
}

TEST(Sketch, CsvDump) {
  Eigen::MatrixXd Phi(2, 2);
  Phi << 1, 0, 0, -1;
  std::ostringstream out;
  write_sketch_csv(Phi, out);
  EXPECT_EQ(out.str(), "1,0\n0,-1\n");
}

TEST(SketchSize, FormulaExamples) {
  EXPECT_EQ(recommended_sketch_size(1, 0.5, 0.3679, 1.0), 8);
  EXPECT_EQ(recommended_sketch_size(10, 0.5, 0.01, 1.0), 59);
  // Default constant scales linearly.
  EXPECT_EQ(recommended_sketch_size(10, 0.5, 0.01), 234);
}

TEST(SketchSize, RejectsBadParameters) {
  EXPECT_THROW(recommended_sketch_size(5, 0.5, 0.1, 0.0), Error);
  EXPECT_THROW(recommended_sketch_size(5, 1.0, 0.1, 1.0), Error);
  EXPECT_THROW(recommended_sketch_size(5, 0.5, 1.0, 1.0), Error);
  EXPECT_THROW(recommended_sketch_size(5, 0.0, 0.1, 1.0), Error);
}

TEST(Distortion, MatchesGeneralizedEigenproblem) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd L = testutil::random_matrix(6, 60, rng);
    const Eigen::MatrixXd Lt = gaussian_jl_sketch(L, 30, trial).Ltilde;
    // Full-rank L: eigenvalues of Sigma~ v = lambda Sigma v.
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(
        Lt * Lt.transpose(), L * L.transpose(), Eigen::EigenvaluesOnly);
    const double expected =
        std::max(std::abs(ges.eigenvalues().maxCoeff() - 1.0),
                 std::abs(ges.eigenvalues().minCoeff() - 1.0));
    EXPECT_NEAR(embedding_distortion(L, Lt), expected, 1e-9);
    EXPECT_GE(embedding_distortion(L, Lt) + 1e-12, sampled_distortion(L, Lt, 200, rng));
  }
}

TEST(Distortion, JlMonteCarloRankFive) {
  // rank-5 L, s = 800: sampled distortion over 1000 directions <= 0.25 in at
  // least 95 of 100 trials.
  std::mt19937_64 rng(2024);
  int successes = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd L = testutil::low_rank_matrix(20, 800, 5, rng);
    const Eigen::MatrixXd Lt = gaussian_jl_sketch(L, 800, 1000 + trial).Ltilde;
    successes += sampled_distortion(L, Lt, 1000, rng) <= 0.25;
  }
  EXPECT_GE(successes, 95);
}
