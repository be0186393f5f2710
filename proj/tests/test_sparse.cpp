#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "optspace/sparse.hpp"
#include "oracles.hpp"

using namespace optspace;

namespace {

Matrix random_dense(Index m, Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return oracle::gaussian(m, n, rng);
}

/// Entries with a heavy-tailed row/column preference so trimming has work to do.
ObservedMatrix skewed_instance(Index m, Index n, Index count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::set<std::pair<Index, Index>> seen;
  std::vector<Entry> entries;
  while (static_cast<Index>(entries.size()) < count) {
    const auto i = static_cast<Index>(std::pow(u(rng), 3.0) * static_cast<double>(m));
    const auto j = static_cast<Index>(std::pow(u(rng), 2.0) * static_cast<double>(n));
    if (seen.insert({i, j}).second) entries.push_back({i, j, u(rng) - 0.5});
  }
  return ObservedMatrix(m, n, std::move(entries));
}

}  // namespace

TEST(ObservedMatrix, RejectsOutOfRangeAndDuplicates) {
  EXPECT_THROW(ObservedMatrix(3, 3, {{3, 0, 1.0}}), InvalidArgument);
  EXPECT_THROW(ObservedMatrix(3, 3, {{0, -1, 1.0}}), InvalidArgument);
  EXPECT_THROW(ObservedMatrix(3, 3, {{1, 1, 1.0}, {1, 1, 2.0}}), InvalidArgument);
}

TEST(ObservedMatrix, KeepsObservedZerosAndDerivesEpsilon) {
  ObservedMatrix obs(4, 9, {{0, 0, 0.0}, {3, 8, 2.5}, {1, 2, 0.0}});
  EXPECT_EQ(obs.size(), 3);
  EXPECT_DOUBLE_EQ(obs.epsilon(), 3.0 / 6.0);
  EXPECT_DOUBLE_EQ(obs.aspect_ratio(), 4.0 / 9.0);
  // sorted row-major
  EXPECT_EQ(obs.entries()[0].row, 0);
  EXPECT_EQ(obs.entries()[1].row, 1);
  EXPECT_EQ(obs.entries()[2].row, 3);
}

TEST(ObservedMatrix, ProductsMatchDense) {
  const Matrix dense = random_dense(7, 5, 3);
  const auto obs = oracle::random_observed(dense, 17, 11);
  const Matrix d = obs.to_dense();
  std::mt19937_64 rng(5);
  const Matrix b = oracle::gaussian(5, 3, rng);
  const Matrix c = oracle::gaussian(7, 3, rng);
  EXPECT_LT((obs.multiply(b) - d * b).norm(), 1e-12);
  EXPECT_LT((obs.multiply_transpose(c) - d.transpose() * c).norm(), 1e-12);
}

TEST(SampleMask, FullAndEmpty) {
  const auto all = sample_mask(4, 4, 16, 123);
  ASSERT_EQ(all.size(), 16u);
  std::set<Coord> distinct(all.begin(), all.end());
  EXPECT_EQ(distinct.size(), 16u);
  EXPECT_TRUE(sample_mask(4, 4, 0, 123).empty());
}

TEST(SampleMask, RejectsOversizedTarget) { EXPECT_THROW(sample_mask(4, 4, 17, 0), InvalidArgument); }

TEST(SampleMask, DeterministicAndDistinct) {
  const auto a = sample_mask(50, 40, 300, 99);
  const auto b = sample_mask(50, 40, 300, 99);
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::set<Coord>(a.begin(), a.end()).size(), 300u);
  EXPECT_NE(a, sample_mask(50, 40, 300, 100));
}

TEST(SampleMask, EachCoupleEquallyLikely) {
  // |E| / mn = 0.1; binomial sd over 1e4 draws is 0.003.
  const std::vector<Coord> probes = {{0, 0}, {57, 13}, {99, 99}, {42, 0}};
  std::map<Coord, int> hits;
  constexpr int kSeeds = 10000;
  for (int s = 0; s < kSeeds; ++s) {
    const auto mask = sample_mask(100, 100, 1000, static_cast<std::uint64_t>(s));
    for (const auto& p : probes)
      if (std::binary_search(mask.begin(), mask.end(), p)) ++hits[p];
  }
  for (const auto& p : probes) {
    EXPECT_NEAR(hits[p] / static_cast<double>(kSeeds), 0.1, 0.01) << p.row << "," << p.col;
  }
}

TEST(Trim, NothingOverRepresented) {
  const auto obs = oracle::random_observed(random_dense(10, 10, 1), 30, 2);
  // Make sure the instance qualifies.
  for (auto c : obs.row_counts()) ASSERT_LE(c, 6);
  for (auto c : obs.col_counts()) ASSERT_LE(c, 6);
  const auto t = trim(obs);
  EXPECT_EQ(t.matrix, obs);
  for (bool k : t.info.kept_rows) EXPECT_TRUE(k);
  for (bool k : t.info.kept_cols) EXPECT_TRUE(k);
}

TEST(Trim, DropsOverRepresentedRow) {
  // 4 x 8, |E| = 8: row threshold 4, column threshold 2; row 0 holds 5.
  std::vector<Entry> e;
  for (Index j = 0; j < 5; ++j) e.push_back({0, j, 1.0});
  e.push_back({1, 5, 2.0});
  e.push_back({2, 6, 3.0});
  e.push_back({3, 7, 4.0});
  const auto t = trim(ObservedMatrix(4, 8, e));
  EXPECT_DOUBLE_EQ(t.info.row_threshold, 4.0);
  EXPECT_DOUBLE_EQ(t.info.col_threshold, 2.0);
  EXPECT_FALSE(t.info.kept_rows[0]);
  EXPECT_EQ(t.matrix.size(), 3);
  for (const auto& en : t.matrix.entries()) EXPECT_NE(en.row, 0);
}

TEST(Trim, TieIsKept) {
  // 4 x 4, |E| = 8, row 0 holds exactly 4 = threshold.
  std::vector<Entry> e;
  for (Index j = 0; j < 4; ++j) e.push_back({0, j, 1.0});
  e.push_back({1, 0, 1.0});
  e.push_back({2, 1, 1.0});
  e.push_back({3, 2, 1.0});
  e.push_back({3, 3, 1.0});
  const auto t = trim(ObservedMatrix(4, 4, e));
  EXPECT_TRUE(t.info.kept_rows[0]);
  EXPECT_EQ(t.matrix.size(), 8);
}

TEST(Trim, DropsOverRepresentedColumn) {
  // 8 x 4, |E| = 8 all in column 0: column threshold 4.
  std::vector<Entry> e;
  for (Index i = 0; i < 8; ++i) e.push_back({i, 0, 1.0});
  const auto t = trim(ObservedMatrix(8, 4, e));
  EXPECT_FALSE(t.info.kept_cols[0]);
  EXPECT_TRUE(t.matrix.empty());
}

TEST(Trim, SinglePassUsesInputThresholds) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto obs = skewed_instance(40, 30, 200, seed);
    const auto t = trim(obs);
    const auto rc = obs.row_counts();
    const auto cc = obs.col_counts();
    const double rt = 2.0 * 200 / 40;
    const double ct = 2.0 * 200 / 30;
    std::vector<Entry> expected;
    for (const auto& e : obs.entries()) {
      if (rc[e.row] <= rt && cc[e.col] <= ct) expected.push_back(e);
    }
    EXPECT_EQ(t.matrix.entries(), expected);

    for (auto c : t.matrix.row_counts()) EXPECT_LE(c, rt);
    for (auto c : t.matrix.col_counts()) EXPECT_LE(c, ct);
  }
}

TEST(SpectralNorm, Diagonal) {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = 1.0;
  EXPECT_NEAR(spectral_norm(ObservedMatrix::full(d)), 3.0, 1e-9);
}

TEST(SpectralNorm, RankOne) {
  std::mt19937_64 rng(4);
  const Vector x = oracle::gaussian(6, 1, rng);
  const Vector y = oracle::gaussian(9, 1, rng);
  const Matrix a = x * y.transpose();
  EXPECT_NEAR(spectral_norm(ObservedMatrix::full(a)), x.norm() * y.norm(), 1e-9 * x.norm() * y.norm());
}

TEST(SpectralNorm, EmptyIsZero) { EXPECT_EQ(spectral_norm(ObservedMatrix(5, 5, {})), 0.0); }

TEST(SpectralNorm, MatchesDenseOracleAndFrobeniusBound) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto obs = oracle::random_observed(random_dense(20, 15, seed), 90, seed + 100);
    const double expect = oracle::singular_values(obs.to_dense())(0);
    const double got = spectral_norm(obs, 1e-12);
    EXPECT_NEAR(got, expect, 1e-10 * expect);
    EXPECT_LE(got, obs.frobenius_norm() * (1 + 1e-12));
  }
}

TEST(TopKSvd, Identity) {
  const auto svd = top_k_svd(ObservedMatrix::full(Matrix::Identity(5, 5)), 2);
  EXPECT_NEAR(svd.sigmas(0), 1.0, 1e-12);
  EXPECT_NEAR(svd.sigmas(1), 1.0, 1e-12);
}

TEST(TopKSvd, RecoversRankTwoMatrix) {
  std::mt19937_64 rng(8);
  const Matrix m = oracle::gaussian(12, 2, rng) * oracle::gaussian(9, 2, rng).transpose();
  const auto svd = top_k_svd(ObservedMatrix::full(m), 2);
  EXPECT_LT((svd.reconstruct() - m).norm(), 1e-8);
}

TEST(TopKSvd, MatchesDenseOracleOnSparseInstances) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto obs = oracle::random_observed(random_dense(30, 20, seed), 250, seed + 7);
    const auto svd = top_k_svd(obs, 3, 1e-12);
    const Vector expect = oracle::singular_values(obs.to_dense()).head(3);
    for (Index i = 0; i < 3; ++i) EXPECT_NEAR(svd.sigmas(i), expect(i), 1e-10 * expect(0));
    EXPECT_LT((svd.reconstruct() - oracle::truncated_svd(obs.to_dense(), 3)).norm(), 1e-8);

    EXPECT_LT((svd.left_vectors.transpose() * svd.left_vectors - Matrix::Identity(3, 3)).norm(), 1e-10);
    EXPECT_LT((svd.right_vectors.transpose() * svd.right_vectors - Matrix::Identity(3, 3)).norm(), 1e-10);
    for (Index i = 1; i < 3; ++i) EXPECT_GE(svd.sigmas(i - 1), svd.sigmas(i));
  }
}

TEST(TopKSvd, RejectsBadK) {
  const auto obs = ObservedMatrix::full(Matrix::Identity(4, 3));
  EXPECT_THROW(top_k_svd(obs, 0), InvalidArgument);
  EXPECT_THROW(top_k_svd(obs, 4), InvalidArgument);
}

TEST(TopKSvd, NonConvergenceCarriesPartialResult) {
  const auto obs = oracle::random_observed(random_dense(60, 50, 3), 600, 4);
  SubspaceIterationOptions opts;
  opts.tol = 1e-15;
  opts.max_sweeps = 2;
  opts.oversampling = 0;
  try {
    top_k_svd(obs, 5, opts);
    FAIL() << "expected SvdNotConverged";
  } catch (const SvdNotConverged& e) {
    EXPECT_FALSE(e.partial().converged);
    EXPECT_EQ(e.partial().k(), 5);
    EXPECT_GT(e.best_estimate(), 0.0);
  }
}

TEST(Trim, TrimmedPatternNormBoundedByTwoEpsilon) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto obs = oracle::random_observed(Matrix::Ones(80, 60), 400, seed);
    const auto trimmed = support_pattern(trim(obs).matrix);
    EXPECT_LE(spectral_norm(trimmed, 1e-12), 2.0 * obs.epsilon() * (1 + 1e-6));
  }
}
