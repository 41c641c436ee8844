// SPDX-License-Identifier: Apache-2.0
// Random instance generators and finite-difference helpers shared by the test
// suites and the acceptance binary.

#pragma once

#include "romdb/parametric_model.hpp"

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>

#include <unistd.h>

namespace romdb::testing {

using Rng = std::mt19937_64;

inline Matrix random_matrix(Rng& rng, Index rows, Index cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

inline Vector random_vector(Rng& rng, Index n, double scale = 1.0) { return random_matrix(rng, n, 1, scale); }

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

/// Orthogonal factor of a Gaussian matrix (Householder QR).
inline Matrix random_orthogonal(Rng& rng, Index k) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, k, k));
  Matrix q = qr.householderQ();
  return q;
}

/// Q diag(lambda) Q^T with eigenvalues drawn uniformly in [lo, hi].
inline Matrix random_spd(Rng& rng, Index k, double lo = 0.1, double hi = 10.0) {
  const Matrix q = random_orthogonal(rng, k);
  Vector ev(k);
  for (auto& e : ev) e = uniform(rng, lo, hi);
  Matrix s = q * ev.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

/// Well-conditioned nonsingular matrix: orthogonal times SPD.
inline Matrix random_nonsingular(Rng& rng, Index k) { return random_orthogonal(rng, k) * random_spd(rng, k, 0.5, 2.0); }

/// (I + E) X with ||E||_2 = radius < 1, so Y X^{-1} has its spectrum in the
/// open right half plane and the principal logarithm exists.
inline Matrix perturb_left(Rng& rng, const Matrix& x, double radius = 0.5) {
  Matrix e = random_matrix(rng, x.rows(), x.cols());
  e *= radius / Eigen::JacobiSVD<Matrix>(e).singularValues()(0);
  return (Matrix::Identity(x.rows(), x.cols()) + e) * x;
}

inline Vector random_point(Rng& rng, const ParamBounds& b) {
  Vector mu(b.size());
  for (Index i = 0; i < b.size(); ++i) mu(i) = uniform(rng, b.lower(i), b.upper(i));
  return mu;
}

/// Random affine system with a diagonally dominant base and polynomial terms
/// small enough to keep A(mu) well conditioned on [-1, 1]^n_params.
inline AffineParametricSystem random_system(Rng& rng, Index n, Index n_params, bool symmetric = false) {
  Matrix base = random_matrix(rng, n, n, 0.3);
  if (symmetric) base = 0.5 * (base + base.transpose());
  base.diagonal().array() += 4.0 + std::sqrt(static_cast<double>(n));
  AffineMatrix a(base);
  AffineVector b(random_vector(rng, n));
  std::uniform_int_distribution<int> pick(0, static_cast<int>(n_params) - 1);
  for (Index i = 0; i < n_params; ++i) {
    Matrix t = random_matrix(rng, n, n, 0.2);
    if (symmetric) t = 0.5 * (t + t.transpose());
    std::vector<int> e(static_cast<std::size_t>(n_params), 0);
    e[static_cast<std::size_t>(i)] = 1;
    std::vector<int> e2(static_cast<std::size_t>(n_params), 0);
    e2[static_cast<std::size_t>(pick(rng))] += 1;
    e2[static_cast<std::size_t>(i)] += 1;
    a.add_term(Polynomial({Monomial{1.0, e}, Monomial{0.3, e2}}), t);
    b.add_term(Polynomial({Monomial{0.5, e}}), random_vector(rng, n));
  }
  return AffineParametricSystem(std::move(a), std::move(b), ParamBounds::uniform(n_params, -1.0, 1.0));
}

/// Central difference of a matrix-valued function along axis i.
template <typename F>
Matrix central_difference(F&& f, const Vector& mu, Index i, double h = 1e-5) {
  Vector p = mu, m = mu;
  p(i) += h;
  m(i) -= h;
  return (Matrix(f(p)) - Matrix(f(m))) / (2.0 * h);
}

inline double rel_diff(const Matrix& a, const Matrix& b, double floor = 1e-14) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("romdb_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace romdb::testing
