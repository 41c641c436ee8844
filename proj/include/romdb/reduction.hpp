// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "romdb/parametric_model.hpp"

#include <optional>

namespace romdb {

/// Symmetric square root and inverse square root of an SPD matrix.
struct SpdRoots {
  Matrix sqrt;
  Matrix inv_sqrt;
};

/// Eigenvalues are clamped at 1e-14 (with a warning) for degenerate inputs.
inline SpdRoots spd_roots(const Matrix& theta) {
  require(theta.rows() == theta.cols(), "SPD weight must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (theta + theta.transpose()));
  if (eig.info() != Eigen::Success) throw SolverError("symmetric eigendecomposition failed", kInf);
  Vector ev = eig.eigenvalues();
  if (ev.minCoeff() <= 0.0 && ev.maxCoeff() <= 0.0) throw DomainError("weight matrix is not positive definite");
  if (ev.minCoeff() < 1e-14) {
    log().warn("SPD matrix has eigenvalue {:.3e}; clamped to 1e-14", ev.minCoeff());
    ev = ev.cwiseMax(1e-14);
  }
  const Matrix& q = eig.eigenvectors();
  return {q * ev.cwiseSqrt().asDiagonal() * q.transpose(),
          q * ev.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose()};
}

/// Flip each column so that its largest-magnitude entry is positive.
inline void canonicalize_signs(Matrix& u) {
  for (Index j = 0; j < u.cols(); ++j) {
    Index imax = 0;
    u.col(j).cwiseAbs().maxCoeff(&imax);
    if (u(imax, j) < 0) u.col(j) *= -1.0;
  }
}

struct PodResult {
  Matrix basis;
  Vector singular_values;  ///< all singular values of the (weighted) snapshot matrix
};

/// Leading k left singular vectors of Theta^{1/2} S mapped back by Theta^{-1/2};
/// the result is Theta-orthonormal. Without a weight Theta = I.
inline PodResult pod(const Matrix& snapshots, Index k, const std::optional<Matrix>& weight = std::nullopt) {
  require(k >= 1, "POD dimension must be positive");
  require(snapshots.cols() >= 1, "POD needs at least one snapshot");
  std::optional<SpdRoots> roots;
  Matrix weighted = snapshots;
  if (weight) {
    require(weight->rows() == snapshots.rows(), "weight dimension must match snapshot length");
    roots = spd_roots(*weight);
    weighted = roots->sqrt * snapshots;
  }
  Eigen::JacobiSVD<Matrix> svd(weighted, Eigen::ComputeThinU);
  const Vector& sigma = svd.singularValues();
  if (k > sigma.size() || sigma(0) == 0.0 || sigma(k - 1) < 1e-12 * sigma(0))
    throw RankError("requested " + std::to_string(k) + " POD modes but the snapshot matrix has numerical rank " +
                    std::to_string((sigma.array() >= 1e-12 * sigma(0)).count()));
  Matrix u = svd.matrixU().leftCols(k);
  canonicalize_signs(u);
  if (roots) u = roots->inv_sqrt * u;
  return {std::move(u), sigma};
}

inline Matrix pod_basis(const Matrix& snapshots, Index k, const std::optional<Matrix>& weight = std::nullopt) {
  return pod(snapshots, k, weight).basis;
}

/// Smallest k whose leading singular values capture `fraction` of the energy sum sigma_i^2.
inline Index energy_rank(const Vector& singular_values, double fraction = 0.9999) {
  const double total = singular_values.squaredNorm();
  if (total == 0.0) return 0;
  double acc = 0.0;
  for (Index i = 0; i < singular_values.size(); ++i) {
    acc += singular_values(i) * singular_values(i);
    if (acc >= fraction * total) return i + 1;
  }
  return singular_values.size();
}

/// Trial basis V and test basis W (W = V for Galerkin).
struct ReducedBasisPair {
  Matrix trial;
  Matrix test;

  static ReducedBasisPair galerkin(Matrix v) {
    ReducedBasisPair p{std::move(v), Matrix()};
    p.test = p.trial;
    return p;
  }
  Index dimension() const { return trial.cols(); }
};

struct ReducedSystem {
  Matrix matrix;  ///< A_r
  Vector rhs;     ///< b_r
  Index dimension() const { return matrix.rows(); }
};

/// A_r = W^T A(mu) V, b_r = W^T b(mu).
inline ReducedSystem reduce(const AffineParametricSystem& sys, const Vector& mu, const ReducedBasisPair& basis) {
  require(basis.trial.rows() == sys.size() && basis.test.rows() == sys.size(),
          "basis row count must equal the system dimension");
  require(basis.trial.cols() == basis.test.cols() && basis.trial.cols() >= 1,
          "trial and test bases need the same positive column count");
  const auto [a, b] = assemble(sys, mu);
  ReducedSystem rs{basis.test.transpose() * a * basis.trial, basis.test.transpose() * b};
  DenseLu check(rs.matrix, "reduced operator");
  return rs;
}

inline Vector solve_reduced(const ReducedSystem& rs) {
  require(rs.matrix.rows() == rs.matrix.cols() && rs.matrix.rows() == rs.rhs.size(),
          "reduced system dimensions disagree");
  return DenseLu(rs.matrix, "reduced system").solve(rs.rhs);
}

/// Output expressed in reduced coordinates q(w_r, mu).
struct ReducedQoi {
  std::function<double(const Vector& w_r, const Vector& mu)> eval;
  std::function<Vector(const Vector& w_r, const Vector& mu)> partial_w;
  std::function<Vector(const Vector& w_r, const Vector& mu)> partial_mu;
};

/// dq/dmu_i = dq/dmu_i + dq/dw_r A_r^{-1} (db_r/dmu_i - dA_r/dmu_i w_r),
/// evaluated with a single transposed reduced solve.
inline Vector reduced_qoi_gradient(const ReducedSystem& rs, std::span<const Matrix> d_matrix,
                                   std::span<const Vector> d_rhs, const ReducedQoi& q, const Vector& w_r,
                                   const Vector& mu) {
  require(d_matrix.size() == d_rhs.size() && static_cast<Index>(d_matrix.size()) == mu.size(),
          "one reduced-operator derivative per parameter is required");
  DenseLu lu(rs.matrix, "reduced system");
  const Vector adjoint = lu.solve_transposed(q.partial_w(w_r, mu));
  Vector grad = q.partial_mu(w_r, mu);
  for (Index i = 0; i < mu.size(); ++i) grad(i) += adjoint.dot(d_rhs[i] - d_matrix[i] * w_r);
  return grad;
}

}  // namespace romdb
