// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "romdb/database.hpp"

namespace romdb {

// ---------------------------------------------------------------------------
// Congruence alignment
// ---------------------------------------------------------------------------

struct ProcrustesResult {
  Matrix rotation;          ///< Q* minimizing ||V_c Q - V_ref||_F over orthogonal Q
  double gram_condition;    ///< sigma_max / sigma_min of V_c^T V_ref
};

inline ProcrustesResult procrustes(const Matrix& v_c, const Matrix& v_ref) {
  require(v_c.rows() == v_ref.rows() && v_c.cols() == v_ref.cols(), "bases to align must have the same shape");
  Eigen::JacobiSVD<Matrix> svd(v_c.transpose() * v_ref, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double cond = s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : kInf;
  if (!(cond < 1e8))
    log().warn("Procrustes alignment: cross-Gram matrix is nearly rank deficient (condition {:.3e}); the two "
               "subspaces are almost orthogonal and the rotation is poorly determined",
               cond);
  return {svd.matrixU() * svd.matrixV().transpose(), cond};
}

inline Matrix procrustes_align(const Matrix& v_c, const Matrix& v_ref) { return procrustes(v_c, v_ref).rotation; }

inline void check_orthogonal(const Matrix& q) {
  require(q.rows() == q.cols(), "rotation must be square");
  if ((q.transpose() * q - Matrix::Identity(q.rows(), q.cols())).norm() > 1e-8)
    throw ConfigError("rotation matrix is not orthogonal");
}

/// (Q^T A_r Q, Q^T b_r)
inline std::pair<Matrix, Vector> rotate_rom(const Matrix& a_r, const Vector& b_r, const Matrix& q) {
  check_orthogonal(q);
  require(a_r.rows() == q.rows() && a_r.cols() == q.rows() && b_r.size() == q.rows(),
          "reduced operator and rotation sizes differ");
  return {q.transpose() * a_r * q, q.transpose() * b_r};
}

/// Local models expressed in mutually consistent reduced coordinates.
struct AlignedDatabase {
  ParamBounds bounds;
  double theta = 0.0;
  ManifoldKind matrix_kind = ManifoldKind::Real;
  Index reference = 0;
  std::vector<Vector> parameters;
  std::vector<Matrix> rotations;
  std::vector<Matrix> matrices;
  std::vector<Vector> rhs;

  Index size() const { return static_cast<Index>(parameters.size()); }
  Index dimension() const { return matrices.empty() ? 0 : matrices.front().rows(); }
};

/// Rotate every entry onto the basis of entry `reference`. Databases without
/// stored bases are taken as already consistent (identity rotations).
inline AlignedDatabase align_database(const RomDatabase& db, Index reference = 0) {
  require(!db.empty(), "cannot align an empty database");
  require(reference >= 0 && reference < db.size(), "reference entry index out of range");
  AlignedDatabase out;
  out.bounds = db.bounds();
  out.theta = db.theta();
  out.matrix_kind = db.matrix_kind();
  out.reference = reference;
  const Index k = db.dimension();
  if (!db.stores_bases())
    log().debug("database has no stored bases; local models are interpolated without alignment");
  for (Index c = 0; c < db.size(); ++c) {
    const auto& e = db[c];
    Matrix q = Matrix::Identity(k, k);
    if (db.stores_bases() && c != reference) q = procrustes_align(e.basis, db[reference].basis);
    out.parameters.push_back(e.mu);
    if (c == reference) {
      out.matrices.push_back(e.matrix);
      out.rhs.push_back(e.rhs);
    } else {
      auto [a, b] = rotate_rom(e.matrix, e.rhs, q);
      out.matrices.push_back(std::move(a));
      out.rhs.push_back(std::move(b));
    }
    out.rotations.push_back(std::move(q));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tangent-space interpolation
// ---------------------------------------------------------------------------

struct MatrixWithSensitivity {
  Matrix value;
  std::vector<Matrix> gradient;  ///< d value / d mu_i, one per parameter
};

/// Interpolation of matrices Y_c living on one manifold: map the samples to
/// the tangent space at Y_ref, combine them with the RBF cardinal weights,
/// and map the result back.
class ManifoldInterpolator {
 public:
  ManifoldInterpolator(ManifoldKind kind, const std::vector<Matrix>& samples, Index reference = 0)
      : chart_(kind, checked_reference(samples, reference)) {
    tangents_.reserve(samples.size());
    for (std::size_t c = 0; c < samples.size(); ++c) {
      require(samples[c].rows() == samples[reference].rows() && samples[c].cols() == samples[reference].cols(),
              "interpolation samples differ in shape");
      tangents_.push_back(static_cast<Index>(c) == reference ? Matrix::Zero(samples[c].rows(), samples[c].cols())
                                                             : chart_.log(samples[c]));
    }
  }

  ManifoldKind kind() const { return chart_.kind(); }
  Index size() const { return static_cast<Index>(tangents_.size()); }
  const std::vector<Matrix>& tangents() const { return tangents_; }

  Matrix tangent(const Vector& weights) const {
    require(weights.size() == size(), "one cardinal weight per sample is required");
    Matrix gamma = Matrix::Zero(tangents_.front().rows(), tangents_.front().cols());
    for (Index c = 0; c < size(); ++c) gamma += weights(c) * tangents_[c];
    return gamma;
  }

  Matrix value(const CardinalWeights& w) const { return chart_.exp(tangent(w.values)); }

  MatrixWithSensitivity value_and_sensitivity(const CardinalWeights& w) const {
    const Matrix gamma = tangent(w.values);
    MatrixWithSensitivity out{chart_.exp(gamma), {}};
    out.gradient.reserve(w.gradient.cols());
    for (Index i = 0; i < w.gradient.cols(); ++i)
      out.gradient.push_back(chart_.exp_derivative(gamma, tangent(w.gradient.col(i))));
    return out;
  }

 private:
  static Matrix checked_reference(const std::vector<Matrix>& samples, Index reference) {
    require(!samples.empty(), "interpolation needs at least one sample");
    require(reference >= 0 && reference < static_cast<Index>(samples.size()), "reference index out of range");
    return samples[reference];
  }

  ManifoldChart chart_;
  std::vector<Matrix> tangents_;
};

/// Y* = Exp_X( sum_c w_c(mu) Log_X(Y_c) ) with X = Y_ref.
inline Matrix manifold_interpolate(const std::vector<Vector>& centers, const std::vector<Matrix>& samples,
                                   ManifoldKind kind, const ParamBounds& bounds, const Vector& mu,
                                   double theta = 0.0, Index reference = 0) {
  RbfInterpolator rbf(centers, bounds, theta);
  return ManifoldInterpolator(kind, samples, reference).value(rbf.weights(mu, false));
}

inline MatrixWithSensitivity manifold_interpolate_with_sensitivity(const std::vector<Vector>& centers,
                                                                   const std::vector<Matrix>& samples,
                                                                   ManifoldKind kind, const ParamBounds& bounds,
                                                                   const Vector& mu, double theta = 0.0,
                                                                   Index reference = 0) {
  RbfInterpolator rbf(centers, bounds, theta);
  return ManifoldInterpolator(kind, samples, reference).value_and_sensitivity(rbf.weights(mu, true));
}

// ---------------------------------------------------------------------------
// Interpolated reduced system
// ---------------------------------------------------------------------------

struct InterpolatedRom {
  ReducedSystem system;
  std::vector<Matrix> d_matrix;  ///< dA_r/dmu_i
  std::vector<Vector> d_rhs;     ///< db_r/dmu_i
  CardinalWeights weights;
};

/// Online model: A_r on the database's manifold kind, b_r on the Real
/// manifold, both through one shared set of cardinal weights.
class RomInterpolator {
 public:
  explicit RomInterpolator(AlignedDatabase aligned, RbfTail tail = RbfTail::Auto)
      : aligned_(std::move(aligned)),
        rbf_(aligned_.parameters, aligned_.bounds, aligned_.theta, tail),
        matrix_(aligned_.matrix_kind, aligned_.matrices, aligned_.reference),
        rhs_(ManifoldKind::Real, as_columns(aligned_.rhs), aligned_.reference) {}

  explicit RomInterpolator(const RomDatabase& db, Index reference = 0, RbfTail tail = RbfTail::Auto)
      : RomInterpolator(align_database(db, reference), tail) {}

  const AlignedDatabase& aligned() const { return aligned_; }
  const RbfInterpolator& rbf() const { return rbf_; }
  Index n_params() const { return aligned_.bounds.size(); }
  Index dimension() const { return aligned_.dimension(); }

  InterpolatedRom evaluate(const Vector& mu, bool with_sensitivity = true) const {
    InterpolatedRom out;
    out.weights = rbf_.weights(mu, with_sensitivity);
    if (!with_sensitivity) {
      out.system = {matrix_.value(out.weights), rhs_.value(out.weights).col(0)};
      return out;
    }
    auto a = matrix_.value_and_sensitivity(out.weights);
    auto b = rhs_.value_and_sensitivity(out.weights);
    out.system = {std::move(a.value), b.value.col(0)};
    out.d_matrix = std::move(a.gradient);
    for (const auto& g : b.gradient) out.d_rhs.push_back(g.col(0));
    return out;
  }

  /// Interpolate any other per-entry vector (already in aligned coordinates)
  /// linearly with the same weights. Returns value and d/dmu as columns.
  std::pair<Vector, Matrix> interpolate_vector(const std::vector<Vector>& data, const CardinalWeights& w) const {
    require(static_cast<Index>(data.size()) == aligned_.size(), "one vector per database entry is required");
    Matrix stacked(data.front().size(), data.size());
    for (std::size_t c = 0; c < data.size(); ++c) stacked.col(c) = data[c];
    Vector value = stacked * w.values;
    Matrix grad = w.gradient.size() ? Matrix(stacked * w.gradient) : Matrix();
    return {std::move(value), std::move(grad)};
  }

 private:
  static std::vector<Matrix> as_columns(const std::vector<Vector>& v) { return {v.begin(), v.end()}; }

  AlignedDatabase aligned_;
  RbfInterpolator rbf_;
  ManifoldInterpolator matrix_;
  ManifoldInterpolator rhs_;
};

}  // namespace romdb
