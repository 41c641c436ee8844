// SPDX-License-Identifier: Apache-2.0

#include "romdb/manifold.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace romdb;
using namespace romdb::testing;

namespace {

constexpr ManifoldKind kKinds[] = {ManifoldKind::Real, ManifoldKind::Nonsingular, ManifoldKind::Spd};

Matrix point_on(ManifoldKind kind, Rng& rng, Index k) {
  switch (kind) {
    case ManifoldKind::Real: return random_matrix(rng, k, k);
    case ManifoldKind::Nonsingular: return random_nonsingular(rng, k);
    case ManifoldKind::Spd: return random_spd(rng, k);
  }
  return {};
}

/// A second point whose log at x exists.
Matrix neighbor(ManifoldKind kind, Rng& rng, const Matrix& x) {
  switch (kind) {
    case ManifoldKind::Real: return random_matrix(rng, x.rows(), x.cols());
    case ManifoldKind::Nonsingular: return perturb_left(rng, x);
    case ManifoldKind::Spd: return random_spd(rng, x.rows());
  }
  return {};
}

Matrix tangent(ManifoldKind kind, Rng& rng, Index k, double scale = 0.5) {
  Matrix g = random_matrix(rng, k, k, scale);
  return kind == ManifoldKind::Spd ? symmetrize(g) : g;
}

}  // namespace

TEST(MatrixExp, DiagonalAndRotation) {
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 1.0, -2.0;
  const Matrix e = matrix_exp(d);
  EXPECT_NEAR(e(0, 0), std::exp(1.0), 1e-15);
  EXPECT_NEAR(e(1, 1), std::exp(-2.0), 1e-16);
  EXPECT_EQ(e(0, 1), 0.0);

  const double t = 0.7;
  Matrix g(2, 2);
  g << 0, -t, t, 0;
  Matrix rot(2, 2);
  rot << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  EXPECT_LT((matrix_exp(g) - rot).norm(), 1e-15);
  EXPECT_LT((matrix_log(rot) - g).norm(), 1e-14);
}

TEST(MatrixLog, InvertsExpForSmallArguments) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix g = random_matrix(rng, 5, 5, 0.3);
    EXPECT_LT((matrix_log(matrix_exp(g)) - g).norm(), 1e-12);
  }
}

TEST(MatrixLog, RejectsNegativeRealSpectrumAndSingularMatrices) {
  EXPECT_THROW(matrix_log(-Matrix::Identity(3, 3)), DomainError);
  Matrix s = Matrix::Identity(3, 3);
  s(2, 2) = 0.0;
  EXPECT_THROW(matrix_log(s), DomainError);
}

TEST(MatrixExpDerivative, MatchesFiniteDifferences) {
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix g = random_matrix(rng, 4, 4, 0.5);
    const Matrix dg = random_matrix(rng, 4, 4);
    const double h = 1e-6;
    const Matrix fd = (matrix_exp(g + h * dg) - matrix_exp(g - h * dg)) / (2 * h);
    EXPECT_LT((matrix_exp_derivative(g, dg) - fd).norm(), 1e-7 * fd.norm());
  }
}

TEST(ManifoldMaps, LogOfTheReferenceIsZeroAndExpOfZeroIsTheReference) {
  Rng rng(3);
  for (auto kind : kKinds) {
    const Matrix x = point_on(kind, rng, 5);
    const ManifoldChart chart(kind, x);
    EXPECT_LT(chart.log(x).norm(), 1e-12) << to_string(kind);
    EXPECT_LT((chart.exp(Matrix::Zero(5, 5)) - x).norm(), 1e-13 * x.norm()) << to_string(kind);
  }
}

TEST(ManifoldMaps, ExpInvertsLog) {
  Rng rng(4);
  for (auto kind : kKinds) {
    for (int trial = 0; trial < 20; ++trial) {
      const Index k = 1 + trial % 8;
      const Matrix x = point_on(kind, rng, k);
      const Matrix y = neighbor(kind, rng, x);
      const ManifoldChart chart(kind, x);
      EXPECT_LE(rel_diff(chart.exp(chart.log(y)), y), 1e-10) << to_string(kind) << " k=" << k;
    }
  }
}

TEST(ManifoldMaps, LogInvertsExp) {
  Rng rng(5);
  for (auto kind : kKinds) {
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix x = point_on(kind, rng, 4);
      const Matrix g = tangent(kind, rng, 4);
      const ManifoldChart chart(kind, x);
      EXPECT_LE(rel_diff(chart.log(chart.exp(g)), g), 1e-10) << to_string(kind);
    }
  }
}

TEST(ManifoldMaps, ExpStaysOnTheManifold) {
  Rng rng(6);
  for (auto kind : kKinds) {
    const Matrix x = point_on(kind, rng, 6);
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix y = exp_map(kind, x, tangent(kind, rng, 6, 1.0));
      EXPECT_TRUE(on_manifold(kind, y)) << to_string(kind);
    }
  }
}

TEST(ManifoldMaps, RealMapsAreDifferences) {
  Rng rng(7);
  const Matrix x = random_matrix(rng, 3, 2), y = random_matrix(rng, 3, 2);
  EXPECT_EQ(log_map(ManifoldKind::Real, x, y), y - x);
  EXPECT_EQ(exp_map(ManifoldKind::Real, x, y), x + y);
}

TEST(ManifoldMaps, SpdLogAtIdentityIsTheMatrixLog) {
  Matrix y = Matrix::Zero(2, 2);
  y.diagonal() << 4.0, 0.25;
  const Matrix l = log_map(ManifoldKind::Spd, Matrix::Identity(2, 2), y);
  EXPECT_NEAR(l(0, 0), std::log(4.0), 1e-15);
  EXPECT_NEAR(l(1, 1), std::log(0.25), 1e-15);
  EXPECT_NEAR(l(0, 1), 0.0, 1e-15);
}

TEST(ManifoldMaps, ExpDerivativeMatchesFiniteDifferences) {
  Rng rng(8);
  for (auto kind : kKinds) {
    const Matrix x = point_on(kind, rng, 4);
    const ManifoldChart chart(kind, x);
    const Matrix g = tangent(kind, rng, 4);
    const Matrix dg = tangent(kind, rng, 4, 1.0);
    const double h = 1e-6;
    const Matrix fd = (chart.exp(g + h * dg) - chart.exp(g - h * dg)) / (2 * h);
    EXPECT_LT((chart.exp_derivative(g, dg) - fd).norm(), 1e-7 * std::max(1.0, fd.norm())) << to_string(kind);
  }
}

TEST(ManifoldMaps, InvalidPointsRaiseDomainErrors) {
  Matrix indefinite = Matrix::Identity(3, 3);
  indefinite(2, 2) = -1.0;
  EXPECT_THROW(ManifoldChart(ManifoldKind::Spd, indefinite), DomainError);
  EXPECT_THROW(ManifoldChart(ManifoldKind::Nonsingular, Matrix::Zero(3, 3)), DomainError);
  EXPECT_THROW(log_map(ManifoldKind::Spd, Matrix::Identity(3, 3), indefinite), DomainError);
  // Y X^{-1} = -I has no principal logarithm.
  EXPECT_THROW(log_map(ManifoldKind::Nonsingular, Matrix::Identity(3, 3), -Matrix::Identity(3, 3)), DomainError);
}

TEST(ManifoldKindNames, RoundTrip) {
  for (auto kind : kKinds) EXPECT_EQ(parse_manifold_kind(to_string(kind)), kind);
  EXPECT_THROW(parse_manifold_kind("grassmann"), ConfigError);
}
