// SPDX-License-Identifier: Apache-2.0

#include "romdb/reduction.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace romdb;
using namespace romdb::testing;

TEST(Pod, OrthogonalSnapshotsComeBackInOrderOfEnergy) {
  Matrix s = Matrix::Zero(4, 3);
  s(1, 0) = 2.0;
  s(0, 1) = -3.0;
  s(3, 2) = 0.5;
  const PodResult r = pod(s, 2);
  EXPECT_LT((r.basis.col(0) - Vector::Unit(4, 0)).norm(), 1e-14);
  EXPECT_LT((r.basis.col(1) - Vector::Unit(4, 1)).norm(), 1e-14);
  EXPECT_NEAR(r.singular_values(0), 3.0, 1e-14);
  EXPECT_NEAR(r.singular_values(1), 2.0, 1e-14);
  EXPECT_NEAR(r.singular_values(2), 0.5, 1e-14);
}

TEST(Pod, BasisIsOrthonormalInTheWeightedInnerProduct) {
  Rng rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix s = random_matrix(rng, 30, 10);
    const Matrix theta = random_spd(rng, 30, 0.5, 5.0);
    const Matrix v = pod_basis(s, 6, theta);
    EXPECT_LT((v.transpose() * theta * v - Matrix::Identity(6, 6)).norm(), 1e-12);
    const Matrix u = pod_basis(s, 6);
    EXPECT_LT((u.transpose() * u - Matrix::Identity(6, 6)).norm(), 1e-12);
  }
}

TEST(Pod, FullRankBasisSpansTheSnapshots) {
  Rng rng(2);
  const Matrix s = random_matrix(rng, 12, 4);
  const Matrix v = pod_basis(s, 4);
  EXPECT_LT((s - v * (v.transpose() * s)).norm(), 1e-12 * s.norm());
}

TEST(Pod, SignsAreCanonical) {
  Rng rng(3);
  const Matrix v = pod_basis(random_matrix(rng, 10, 5), 5);
  for (Index j = 0; j < v.cols(); ++j) {
    Index i = 0;
    v.col(j).cwiseAbs().maxCoeff(&i);
    EXPECT_GT(v(i, j), 0.0);
  }
}

TEST(Pod, RankDeficientRequestIsRejected) {
  Matrix s(3, 2);
  s << 1, 2, 1, 2, 1, 2;
  EXPECT_THROW(pod(s, 2), RankError);
  EXPECT_THROW(pod(Matrix::Zero(3, 2), 1), RankError);
  EXPECT_THROW(pod(s, 3), RankError);
  EXPECT_NO_THROW(pod(s, 1));
}

TEST(EnergyRank, Examples) {
  Vector sigma(4);
  sigma << 10, 1, 0.1, 0.01;
  EXPECT_EQ(energy_rank(sigma, 0.99), 1);
  EXPECT_EQ(energy_rank(sigma, 0.9999), 2);
  EXPECT_EQ(energy_rank(sigma, 1.0), 4);
  EXPECT_EQ(energy_rank(Vector::Zero(3)), 0);
}

TEST(Reduce, IdentityBasisGivesTheFullSystem) {
  Rng rng(4);
  const auto sys = random_system(rng, 8, 2);
  const Vector mu = random_point(rng, sys.bounds());
  const ReducedSystem rs = reduce(sys, mu, ReducedBasisPair::galerkin(Matrix::Identity(8, 8)));
  const auto [a, b] = assemble(sys, mu);
  EXPECT_EQ(rs.matrix, a);
  EXPECT_EQ(rs.rhs, b);
  EXPECT_LT((solve_reduced(rs) - solve_full(sys, mu)).norm(), 1e-13);
}

TEST(Reduce, BasisContainingTheSolutionReproducesIt) {
  Rng rng(5);
  const auto sys = random_system(rng, 25, 3);
  const Vector mu = random_point(rng, sys.bounds());
  const Vector w = solve_full(sys, mu);
  Matrix snaps(25, 3);
  snaps << w, random_vector(rng, 25), random_vector(rng, 25);
  const Matrix v = pod_basis(snaps, 3);
  for (const auto& basis : {ReducedBasisPair::galerkin(v), ReducedBasisPair{v, random_matrix(rng, 25, 3)}}) {
    const Vector w_r = solve_reduced(reduce(sys, mu, basis));
    EXPECT_LT((v * w_r - w).norm(), 1e-11 * w.norm());
  }
}

TEST(Reduce, ResidualIsOrthogonalToTheTestBasis) {
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const auto sys = random_system(rng, 20, 2);
    const Vector mu = random_point(rng, sys.bounds());
    const Matrix v = pod_basis(random_matrix(rng, 20, 5), 5);
    const Matrix w = random_matrix(rng, 20, 5);
    const Vector w_r = solve_reduced(reduce(sys, mu, {v, w}));
    EXPECT_LT((w.transpose() * residual(sys, mu, v, w_r)).norm(), 1e-11);
  }
}

TEST(Reduce, DimensionMismatchesAreConfigErrors) {
  Rng rng(7);
  const auto sys = random_system(rng, 6, 1);
  const Vector mu = Vector::Zero(1);
  EXPECT_THROW(reduce(sys, mu, ReducedBasisPair::galerkin(Matrix::Identity(5, 5))), ConfigError);
  EXPECT_THROW(reduce(sys, mu, {Matrix::Identity(6, 3), Matrix::Identity(6, 2)}), ConfigError);
}

TEST(ReducedQoiGradient, MatchesFiniteDifferencesOfTheReducedSolve) {
  Rng rng(8);
  const auto sys = random_system(rng, 15, 3);
  const Matrix v = pod_basis(random_matrix(rng, 15, 4), 4);
  const auto basis = ReducedBasisPair::galerkin(v);
  const Vector l = random_vector(rng, 4);
  ReducedQoi q;
  q.eval = [&](const Vector& w_r, const Vector& mu) { return l.dot(w_r) + w_r.squaredNorm() * mu(2); };
  q.partial_w = [&](const Vector& w_r, const Vector& mu) { return Vector(l + 2.0 * mu(2) * w_r); };
  q.partial_mu = [](const Vector& w_r, const Vector& mu) {
    Vector g = Vector::Zero(mu.size());
    g(2) = w_r.squaredNorm();
    return g;
  };
  auto value = [&](const Vector& mu) {
    const Vector w_r = solve_reduced(reduce(sys, mu, basis));
    return Vector::Constant(1, q.eval(w_r, mu)).eval();
  };
  for (int trial = 0; trial < 5; ++trial) {
    const Vector mu = random_point(rng, sys.bounds());
    const ReducedSystem rs = reduce(sys, mu, basis);
    std::vector<Matrix> d_a;
    std::vector<Vector> d_b;
    for (Index i = 0; i < 3; ++i) {
      d_a.push_back(v.transpose() * sys.matrix().derivative(mu, i) * v);
      d_b.push_back(v.transpose() * sys.rhs().derivative(mu, i));
    }
    const Vector grad = reduced_qoi_gradient(rs, d_a, d_b, q, solve_reduced(rs), mu);
    for (Index i = 0; i < 3; ++i) {
      const double fd = central_difference(value, mu, i)(0);
      EXPECT_NEAR(grad(i), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(SpdRoots, SquareRootSquaresBack) {
  Rng rng(9);
  const Matrix theta = random_spd(rng, 6);
  const SpdRoots r = spd_roots(theta);
  EXPECT_LT((r.sqrt * r.sqrt - theta).norm(), 1e-12 * theta.norm());
  EXPECT_LT((r.sqrt * r.inv_sqrt - Matrix::Identity(6, 6)).norm(), 1e-12);
}
