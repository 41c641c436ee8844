// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "romdb/core.hpp"

#include <optional>
#include <span>

namespace romdb {

enum class RbfTail { Auto, Linear, Constant, None };

/// Multiquadric kernel sqrt(r^2 + theta^2).
inline double multiquadric(double r, double theta) { return std::sqrt(r * r + theta * theta); }

/// Shape parameter used when none is configured: a tenth of the normalized
/// domain diagonal.
inline double default_shape_parameter(const ParamBounds& bounds) { return 0.1 * bounds.normalized_diagonal(); }

/// Values and parameter gradients of the cardinal functions at one query
/// point. Any data d_c attached to the centers interpolates to sum_c w_c d_c,
/// with gradient sum_c dw_c/dmu d_c.
struct CardinalWeights {
  Vector values;    ///< N_p
  Matrix gradient;  ///< N_p x N_mu, derivatives with respect to the physical parameters
};

/// Multiquadric RBF interpolation over a fixed set of centers, expressed
/// through cardinal functions so that the interpolant is linear in the data.
///
/// Distances are measured in the normalized parameter box [-0.1, 0.1]^N_mu.
/// A polynomial tail (linear when [1, X] has full column rank, constant
/// otherwise) is appended with the usual orthogonality side conditions.
class RbfInterpolator {
 public:
  RbfInterpolator(std::vector<Vector> centers, ParamBounds bounds, double theta = 0.0,
                  RbfTail tail = RbfTail::Auto)
      : bounds_(std::move(bounds)), centers_(std::move(centers)) {
    require(!centers_.empty(), "RBF interpolation needs at least one center");
    theta_ = theta > 0 ? theta : default_shape_parameter(bounds_);
    const Index n = n_centers();
    const Index dim = bounds_.size();
    normalized_.resize(n, dim);
    for (Index c = 0; c < n; ++c) {
      require(centers_[c].size() == dim, "RBF center has the wrong dimension");
      normalized_.row(c) = bounds_.normalize(centers_[c]).transpose();
    }
    for (Index a = 0; a < n; ++a)
      for (Index b = a + 1; b < n; ++b)
        if ((normalized_.row(a) - normalized_.row(b)).norm() <= 1e-14)
          throw ConfigError("RBF centers " + std::to_string(a) + " and " + std::to_string(b) + " coincide");

    tail_ = resolve_tail(tail);
    const Index m = tail_columns();
    Matrix system = Matrix::Zero(n + m, n + m);
    for (Index a = 0; a < n; ++a)
      for (Index b = 0; b < n; ++b)
        system(a, b) = multiquadric((normalized_.row(a) - normalized_.row(b)).norm(), theta_);
    if (m > 0) {
      const Matrix p = tail_matrix();
      system.topRightCorner(n, m) = p;
      system.bottomLeftCorner(m, n) = p.transpose();
    }
    Eigen::JacobiSVD<Matrix> svd(system);
    const Vector& s = svd.singularValues();
    condition_ = s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : kInf;
    if (!(condition_ <= 1e14))
      throw ConditioningError("RBF interpolation matrix is ill-conditioned (condition " + std::to_string(condition_) +
                              "); increase the shape parameter or remove clustered centers");
    inverse_ = Eigen::PartialPivLU<Matrix>(system).inverse();
  }

  Index n_centers() const { return static_cast<Index>(centers_.size()); }
  Index n_params() const { return bounds_.size(); }
  double theta() const { return theta_; }
  RbfTail tail() const { return tail_; }
  double condition() const { return condition_; }
  const ParamBounds& bounds() const { return bounds_; }
  const std::vector<Vector>& centers() const { return centers_; }

  CardinalWeights weights(const Vector& mu, bool with_gradient = true) const {
    require(mu.size() == n_params(), "RBF query point has the wrong dimension");
    const Index n = n_centers();
    const Index m = tail_columns();
    const Vector x = bounds_.normalize(mu);
    Vector basis(n + m);
    Matrix d_basis = with_gradient ? Matrix::Zero(n + m, n_params()) : Matrix();
    for (Index c = 0; c < n; ++c) {
      const Vector diff = x - normalized_.row(c).transpose();
      const double phi = multiquadric(diff.norm(), theta_);
      basis(c) = phi;
      if (with_gradient) d_basis.row(c) = (diff / phi).transpose();
    }
    if (m > 0) {
      basis(n) = 1.0;
      if (tail_ == RbfTail::Linear) {
        basis.tail(n_params()) = x;
        if (with_gradient) d_basis.bottomRows(n_params()).setIdentity();
      }
    }
    // The saddle matrix is symmetric, so the cardinal values are the first
    // N_p entries of its inverse applied to the query basis.
    CardinalWeights out;
    out.values = inverse_.topRows(n) * basis;
    if (with_gradient)
      out.gradient = (inverse_.topRows(n) * d_basis) * bounds_.normalization_scale().asDiagonal();
    return out;
  }

 private:
  Index tail_columns() const {
    switch (tail_) {
      case RbfTail::Linear: return 1 + n_params();
      case RbfTail::Constant: return 1;
      default: return 0;
    }
  }

  Matrix tail_matrix() const {
    Matrix p(n_centers(), tail_columns());
    p.col(0).setOnes();
    if (tail_ == RbfTail::Linear) p.rightCols(n_params()) = normalized_;
    return p;
  }

  RbfTail resolve_tail(RbfTail requested) const {
    if (requested == RbfTail::None || requested == RbfTail::Constant) return requested;
    Matrix p(n_centers(), 1 + n_params());
    p.col(0).setOnes();
    p.rightCols(n_params()) = normalized_;
    Eigen::ColPivHouseholderQR<Matrix> qr(p);
    qr.setThreshold(1e-10);
    if (qr.rank() == p.cols()) return RbfTail::Linear;
    if (requested == RbfTail::Linear)
      log().debug("linear RBF tail needs affinely independent centers; using a constant tail");
    return RbfTail::Constant;
  }

  ParamBounds bounds_;
  std::vector<Vector> centers_;
  Matrix normalized_;
  double theta_ = 0.0;
  RbfTail tail_ = RbfTail::Auto;
  double condition_ = 1.0;
  Matrix inverse_;
};

/// Scalar interpolant: a fixed interpolator together with one value per center.
struct RbfInterpolant {
  RbfInterpolator basis;
  Vector values;

  double eval(const Vector& mu) const { return basis.weights(mu, false).values.dot(values); }
};

inline RbfInterpolant rbf_fit(std::vector<Vector> centers, const Vector& values, ParamBounds bounds,
                              double theta = 0.0, RbfTail tail = RbfTail::Auto) {
  require(values.size() == static_cast<Index>(centers.size()), "one value per RBF center is required");
  return RbfInterpolant{RbfInterpolator(std::move(centers), std::move(bounds), theta, tail), values};
}

struct ValueAndGradient {
  double value = 0.0;
  Vector gradient;
};

inline ValueAndGradient rbf_eval_grad(const RbfInterpolant& interp, const Vector& mu) {
  const auto w = interp.basis.weights(mu, true);
  return {w.values.dot(interp.values), w.gradient.transpose() * interp.values};
}

}  // namespace romdb
