// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "romdb/reduction.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <string_view>

namespace romdb {

enum class ManifoldKind : std::uint8_t { Real = 0, Nonsingular = 1, Spd = 2 };

inline std::string_view to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Real: return "real";
    case ManifoldKind::Nonsingular: return "nonsingular";
    case ManifoldKind::Spd: return "spd";
  }
  return "?";
}

inline ManifoldKind parse_manifold_kind(std::string_view s) {
  if (s == "real") return ManifoldKind::Real;
  if (s == "nonsingular") return ManifoldKind::Nonsingular;
  if (s == "spd") return ManifoldKind::Spd;
  throw ConfigError("unknown manifold kind '" + std::string(s) + "' (expected real, nonsingular or spd)");
}

// ---------------------------------------------------------------------------
// Matrix exponential and principal logarithm
// ---------------------------------------------------------------------------

/// Scaling and squaring with a degree-13 Pade approximant.
inline Matrix matrix_exp(const Matrix& gamma) {
  require(gamma.rows() == gamma.cols(), "matrix exponential needs a square matrix");
  if (!gamma.allFinite()) throw DomainError("matrix exponential of a non-finite matrix");
  Matrix e = gamma.exp();
  if (!e.allFinite()) throw DomainError("matrix exponential overflowed");
  return e;
}

/// Principal logarithm. Spectra touching the closed negative real axis have no
/// principal logarithm and raise DomainError.
inline Matrix matrix_log(const Matrix& y) {
  require(y.rows() == y.cols(), "matrix logarithm needs a square matrix");
  if (!y.allFinite()) throw DomainError("matrix logarithm of a non-finite matrix");
  if (y.size() == 0) return y;
  Eigen::EigenSolver<Matrix> es(y, false);
  if (es.info() != Eigen::Success) throw DomainError("eigenvalue computation failed inside matrix logarithm");
  const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  for (Index i = 0; i < es.eigenvalues().size(); ++i) {
    const Complex lambda = es.eigenvalues()(i);
    if (std::abs(lambda) <= 1e-14 * scale)
      throw DomainError("matrix logarithm: matrix is singular");
    if (lambda.real() < 0 && std::abs(lambda.imag()) <= 1e-12 * std::abs(lambda))
      throw DomainError("matrix logarithm: eigenvalue on the negative real axis, argument is outside the "
                        "neighborhood of the reference point");
  }
  Matrix l = y.log();
  if (!l.allFinite()) throw DomainError("matrix logarithm produced non-finite entries");
  return l;
}

/// d exp(Gamma) along dGamma: the (1,2) block of exp([[Gamma, dGamma], [0, Gamma]]).
inline Matrix matrix_exp_derivative(const Matrix& gamma, const Matrix& d_gamma) {
  require(gamma.rows() == gamma.cols() && d_gamma.rows() == gamma.rows() && d_gamma.cols() == gamma.cols(),
          "exponential derivative needs square matrices of equal size");
  const Index k = gamma.rows();
  Matrix block = Matrix::Zero(2 * k, 2 * k);
  block.topLeftCorner(k, k) = gamma;
  block.topRightCorner(k, k) = d_gamma;
  block.bottomRightCorner(k, k) = gamma;
  return matrix_exp(block).topRightCorner(k, k);
}

// ---------------------------------------------------------------------------
// Manifold membership
// ---------------------------------------------------------------------------

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline bool is_symmetric(const Matrix& m, double tol = 1e-12) {
  return m.rows() == m.cols() && (m - m.transpose()).norm() <= tol * std::max(1.0, m.norm());
}

inline bool is_spd(const Matrix& m) {
  if (!is_symmetric(m)) return false;
  Eigen::LLT<Matrix> llt(symmetrize(m));
  return llt.info() == Eigen::Success;
}

inline bool is_nonsingular(const Matrix& m) {
  if (m.rows() != m.cols() || !m.allFinite()) return false;
  Eigen::PartialPivLU<Matrix> lu(m);
  return lu.rcond() > 1e3 * std::numeric_limits<double>::epsilon();
}

inline bool on_manifold(ManifoldKind kind, const Matrix& m) {
  switch (kind) {
    case ManifoldKind::Real: return m.allFinite();
    case ManifoldKind::Nonsingular: return is_nonsingular(m);
    case ManifoldKind::Spd: return is_spd(m);
  }
  return false;
}

// ---------------------------------------------------------------------------
// Log / Exp maps at a fixed reference point
// ---------------------------------------------------------------------------

/// Logarithm and exponential maps of one matrix manifold around a reference
/// point X, with the reference-dependent factors (X^{-1}, X^{+-1/2}) cached.
///
///   kind         Log_X(Y)                 Exp_X(G)              d Exp_X(G)
///   Real         Y - X                    X + G                 dG
///   Nonsingular  log(Y X^{-1})            exp(G) X              dexp(G) X
///   Spd          log(X^-1/2 Y X^-1/2)     X^1/2 exp(G) X^1/2    X^1/2 dexp(G) X^1/2
class ManifoldChart {
 public:
  ManifoldChart(ManifoldKind kind, Matrix reference) : kind_(kind), x_(std::move(reference)) {
    switch (kind_) {
      case ManifoldKind::Real:
        break;
      case ManifoldKind::Nonsingular:
        if (!is_nonsingular(x_)) throw DomainError("reference point is not a nonsingular matrix");
        x_inv_ = x_.inverse();
        break;
      case ManifoldKind::Spd: {
        if (!is_spd(x_)) throw DomainError("reference point is not symmetric positive definite");
        auto roots = spd_roots(x_);
        x_sqrt_ = std::move(roots.sqrt);
        x_inv_sqrt_ = std::move(roots.inv_sqrt);
        break;
      }
    }
  }

  ManifoldKind kind() const { return kind_; }
  const Matrix& reference() const { return x_; }

  Matrix log(const Matrix& y) const {
    require(y.rows() == x_.rows() && y.cols() == x_.cols(), "log map arguments differ in shape");
    switch (kind_) {
      case ManifoldKind::Real:
        return y - x_;
      case ManifoldKind::Nonsingular:
        return matrix_log(y * x_inv_);
      case ManifoldKind::Spd: {
        if (!is_spd(y)) throw DomainError("log map argument is not symmetric positive definite");
        // The similarity is SPD, so its principal log comes from its eigendecomposition.
        Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(x_inv_sqrt_ * y * x_inv_sqrt_));
        if (eig.eigenvalues().minCoeff() <= 0) throw DomainError("log map argument lost definiteness");
        const Matrix& q = eig.eigenvectors();
        return symmetrize(q * eig.eigenvalues().array().log().matrix().asDiagonal() * q.transpose());
      }
    }
    return {};
  }

  Matrix exp(const Matrix& gamma) const {
    require(gamma.rows() == x_.rows() && gamma.cols() == x_.cols(), "exp map tangent vector has the wrong shape");
    switch (kind_) {
      case ManifoldKind::Real:
        return x_ + gamma;
      case ManifoldKind::Nonsingular:
        return matrix_exp(gamma) * x_;
      case ManifoldKind::Spd:
        return symmetrize(x_sqrt_ * matrix_exp(gamma) * x_sqrt_);
    }
    return {};
  }

  Matrix exp_derivative(const Matrix& gamma, const Matrix& d_gamma) const {
    switch (kind_) {
      case ManifoldKind::Real:
        return d_gamma;
      case ManifoldKind::Nonsingular:
        return matrix_exp_derivative(gamma, d_gamma) * x_;
      case ManifoldKind::Spd:
        return symmetrize(x_sqrt_ * matrix_exp_derivative(gamma, d_gamma) * x_sqrt_);
    }
    return {};
  }

 private:
  ManifoldKind kind_;
  Matrix x_;
  Matrix x_inv_;
  Matrix x_sqrt_;
  Matrix x_inv_sqrt_;
};

inline Matrix log_map(ManifoldKind kind, const Matrix& x, const Matrix& y) { return ManifoldChart(kind, x).log(y); }

inline Matrix exp_map(ManifoldKind kind, const Matrix& x, const Matrix& gamma) {
  return ManifoldChart(kind, x).exp(gamma);
}

inline Matrix exp_map_derivative(ManifoldKind kind, const Matrix& x, const Matrix& gamma, const Matrix& d_gamma) {
  return ManifoldChart(kind, x).exp_derivative(gamma, d_gamma);
}

}  // namespace romdb
