// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "romdb/core.hpp"

#include <atomic>
#include <functional>
#include <span>
#include <utility>

namespace romdb {

// ---------------------------------------------------------------------------
// Polynomial coefficient functions
// ---------------------------------------------------------------------------

struct Monomial {
  double coefficient = 0.0;
  std::vector<int> exponents;  ///< one exponent per parameter; total degree <= 3
};

/// Multivariate polynomial in mu with an exact gradient.
class Polynomial {
 public:
  static constexpr int kMaxDegree = 3;

  Polynomial() = default;
  explicit Polynomial(std::vector<Monomial> terms) : terms_(std::move(terms)) { validate(); }

  static Polynomial constant(Index n_params, double value) {
    return Polynomial({Monomial{value, std::vector<int>(n_params, 0)}});
  }
  /// c * mu_i
  static Polynomial linear(Index n_params, Index i, double c = 1.0) {
    std::vector<int> e(n_params, 0);
    e[i] = 1;
    return Polynomial({Monomial{c, e}});
  }

  const std::vector<Monomial>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  Index n_params() const {
    return terms_.empty() ? 0 : static_cast<Index>(terms_.front().exponents.size());
  }

  double value(const Vector& mu) const {
    double sum = 0.0;
    for (const auto& t : terms_) {
      double p = t.coefficient;
      for (std::size_t j = 0; j < t.exponents.size(); ++j) p *= ipow(mu(j), t.exponents[j]);
      sum += p;
    }
    return sum;
  }

  Vector gradient(const Vector& mu) const {
    Vector g = Vector::Zero(mu.size());
    for (const auto& t : terms_) {
      for (std::size_t i = 0; i < t.exponents.size(); ++i) {
        if (t.exponents[i] == 0) continue;
        double p = t.coefficient * t.exponents[i];
        for (std::size_t j = 0; j < t.exponents.size(); ++j) {
          const int e = (j == i) ? t.exponents[j] - 1 : t.exponents[j];
          p *= ipow(mu(j), e);
        }
        g(static_cast<Index>(i)) += p;
      }
    }
    return g;
  }

  /// Same polynomial with every coefficient multiplied by s.
  Polynomial scaled(double s) const {
    Polynomial out = *this;
    for (auto& t : out.terms_) t.coefficient *= s;
    return out;
  }

 private:
  static double ipow(double x, int e) {
    double r = 1.0;
    for (int k = 0; k < e; ++k) r *= x;
    return r;
  }

  void validate() const {
    if (terms_.empty()) return;
    const std::size_t n = terms_.front().exponents.size();
    for (const auto& t : terms_) {
      if (t.exponents.size() != n) throw ConfigError("monomials disagree on parameter count");
      int degree = 0;
      for (int e : t.exponents) {
        if (e < 0) throw ConfigError("negative monomial exponent");
        degree += e;
      }
      if (degree > kMaxDegree) throw ConfigError("coefficient polynomials are limited to degree 3");
    }
  }

  std::vector<Monomial> terms_;
};

// ---------------------------------------------------------------------------
// Affine expansions  X(mu) = X_0 + sum_i p_i(mu) X_i
// ---------------------------------------------------------------------------

template <typename Operand>
class AffineExpansion {
 public:
  struct Term {
    Polynomial coefficient;
    Operand operand;
  };

  AffineExpansion() = default;
  explicit AffineExpansion(Operand base) : base_(std::move(base)) {}

  void add_term(Polynomial coefficient, Operand operand) {
    if (operand.rows() != base_.rows() || operand.cols() != base_.cols())
      throw ConfigError("affine term dimension does not match the base operand");
    terms_.push_back({std::move(coefficient), std::move(operand)});
  }

  const Operand& base() const { return base_; }
  const std::vector<Term>& terms() const { return terms_; }
  Index rows() const { return base_.rows(); }
  Index cols() const { return base_.cols(); }

  Operand evaluate(const Vector& mu) const {
    Operand out = base_;
    for (const auto& t : terms_) {
      const double c = t.coefficient.value(mu);
      if (c != 0.0) out += c * t.operand;
    }
    return out;
  }

  /// d/dmu_i of the expansion (the base drops out).
  Operand derivative(const Vector& mu, Index i) const {
    Operand out = Operand::Zero(base_.rows(), base_.cols());
    for (const auto& t : terms_) {
      const double c = t.coefficient.gradient(mu)(i);
      if (c != 0.0) out += c * t.operand;
    }
    return out;
  }

  bool depends_on_parameters() const { return !terms_.empty(); }

  AffineExpansion scaled(double s) const {
    AffineExpansion out(s * base_);
    for (const auto& t : terms_) out.terms_.push_back({t.coefficient, s * t.operand});
    return out;
  }

 private:
  Operand base_;
  std::vector<Term> terms_;
};

using AffineMatrix = AffineExpansion<Matrix>;
using AffineVector = AffineExpansion<Vector>;

// ---------------------------------------------------------------------------
// Solve accounting
// ---------------------------------------------------------------------------

/// Process-wide counters of full-order linear solves. The online ROM path must
/// leave all three untouched.
struct SolveCounters {
  std::atomic<long> state{0};
  std::atomic<long> sensitivity{0};
  std::atomic<long> adjoint{0};

  long total() const { return state + sensitivity + adjoint; }
  void reset() {
    state = 0;
    sensitivity = 0;
    adjoint = 0;
  }
};

inline SolveCounters& hdm_solve_counters() {
  static SolveCounters counters;
  return counters;
}

// ---------------------------------------------------------------------------
// Dense LU with a conditioning guard
// ---------------------------------------------------------------------------

inline constexpr double kWarnCondition = 1e12;

/// LU with partial pivoting. Refuses matrices that are singular to working
/// precision and warns past kWarnCondition. Reused for transposed solves.
class DenseLu {
 public:
  explicit DenseLu(const Matrix& a, const char* what = "linear system") : lu_(a) {
    if (a.rows() != a.cols()) throw ConfigError(std::string(what) + ": matrix is not square");
    const auto& u = lu_.matrixLU();
    double max_pivot = 0.0;
    double min_pivot = kInf;
    for (Index i = 0; i < u.rows(); ++i) {
      max_pivot = std::max(max_pivot, std::abs(u(i, i)));
      min_pivot = std::min(min_pivot, std::abs(u(i, i)));
    }
    rcond_ = a.size() == 0 ? 1.0 : lu_.rcond();
    if (!std::isfinite(max_pivot) || min_pivot == 0.0 || !(rcond_ > std::numeric_limits<double>::epsilon()))
      throw SolverError(std::string(what) + ": matrix is singular to working precision (condition estimate " +
                            std::to_string(rcond_ > 0 ? 1.0 / rcond_ : kInf) + ")",
                        rcond_ > 0 ? 1.0 / rcond_ : kInf);
    if (1.0 / rcond_ > kWarnCondition)
      log().warn("{}: condition estimate {:.3e} exceeds {:.0e}", what, 1.0 / rcond_, kWarnCondition);
  }

  double condition_estimate() const { return 1.0 / rcond_; }

  template <typename Rhs>
  auto solve(const Rhs& b) const {
    return lu_.solve(b).eval();
  }
  template <typename Rhs>
  auto solve_transposed(const Rhs& b) const {
    return lu_.transpose().solve(b).eval();
  }

 private:
  Eigen::PartialPivLU<Matrix> lu_;
  double rcond_ = 1.0;
};

// ---------------------------------------------------------------------------
// The full-order affine-parametric linear system  A(mu) w = b(mu)
// ---------------------------------------------------------------------------

class AffineParametricSystem {
 public:
  AffineParametricSystem(AffineMatrix matrix, AffineVector rhs, ParamBounds bounds)
      : matrix_(std::move(matrix)), rhs_(std::move(rhs)), bounds_(std::move(bounds)) {
    require(matrix_.rows() == matrix_.cols(), "system matrix must be square");
    require(matrix_.rows() >= 1, "system dimension must be positive");
    require(rhs_.rows() == matrix_.rows() && rhs_.cols() == 1, "rhs length must equal the system dimension");
    for (const auto& t : matrix_.terms())
      require(t.coefficient.empty() || t.coefficient.n_params() == n_params(),
              "matrix term polynomial has the wrong parameter count");
    for (const auto& t : rhs_.terms())
      require(t.coefficient.empty() || t.coefficient.n_params() == n_params(),
              "rhs term polynomial has the wrong parameter count");
  }

  Index size() const { return matrix_.rows(); }
  Index n_params() const { return bounds_.size(); }
  const ParamBounds& bounds() const { return bounds_; }
  const AffineMatrix& matrix() const { return matrix_; }
  const AffineVector& rhs() const { return rhs_; }

  /// Same system with A and b multiplied by s.
  AffineParametricSystem scaled(double s) const {
    return AffineParametricSystem(matrix_.scaled(s), rhs_.scaled(s), bounds_);
  }

 private:
  AffineMatrix matrix_;
  AffineVector rhs_;
  ParamBounds bounds_;
};

struct AssembledSystem {
  Matrix matrix;
  Vector rhs;
};

inline void check_parameter(const AffineParametricSystem& sys, const Vector& mu) {
  require(mu.size() == sys.n_params(), "parameter vector has the wrong length");
  if (!sys.bounds().contains(mu)) log().warn("parameter point lies outside the design bounds");
}

inline AssembledSystem assemble(const AffineParametricSystem& sys, const Vector& mu) {
  check_parameter(sys, mu);
  return {sys.matrix().evaluate(mu), sys.rhs().evaluate(mu)};
}

inline Vector solve_full(const AffineParametricSystem& sys, const Vector& mu) {
  const auto [a, b] = assemble(sys, mu);
  DenseLu lu(a, "full-order system");
  ++hdm_solve_counters().state;
  return lu.solve(b);
}

/// dw/dmu, one column per parameter: A dw/dmu_i = db/dmu_i - dA/dmu_i w.
inline Matrix state_sensitivity_direct(const AffineParametricSystem& sys, const Vector& mu, const Vector& w,
                                       const DenseLu& lu) {
  Matrix dw(sys.size(), sys.n_params());
  for (Index i = 0; i < sys.n_params(); ++i) {
    dw.col(i) = lu.solve(sys.rhs().derivative(mu, i) - sys.matrix().derivative(mu, i) * w);
    ++hdm_solve_counters().sensitivity;
  }
  return dw;
}

inline Matrix state_sensitivity_direct(const AffineParametricSystem& sys, const Vector& mu, const Vector& w) {
  const auto [a, b] = assemble(sys, mu);
  DenseLu lu(a, "full-order system");
  return state_sensitivity_direct(sys, mu, w, lu);
}

/// A scalar output q(w, mu) with its partial derivatives.
struct QuantityOfInterest {
  std::function<double(const Vector& w, const Vector& mu)> eval;
  std::function<Vector(const Vector& w, const Vector& mu)> partial_w;
  std::function<Vector(const Vector& w, const Vector& mu)> partial_mu;
};

/// q(w, mu) = l^T w + g(mu) with g given as value and gradient callbacks.
inline QuantityOfInterest linear_qoi(Vector weights, std::function<double(const Vector&)> g = nullptr,
                                     std::function<Vector(const Vector&)> dg = nullptr) {
  QuantityOfInterest q;
  q.eval = [weights, g](const Vector& w, const Vector& mu) { return weights.dot(w) + (g ? g(mu) : 0.0); };
  q.partial_w = [weights](const Vector&, const Vector&) { return weights; };
  q.partial_mu = [dg](const Vector&, const Vector& mu) { return dg ? dg(mu) : Vector(Vector::Zero(mu.size())); };
  return q;
}

struct QoiValues {
  Vector values;     ///< one entry per QoI
  Matrix gradients;  ///< row j = dq_j/dmu
};

/// Direct approach: N_mu sensitivity solves shared by every QoI.
inline QoiValues qoi_gradients_direct(const AffineParametricSystem& sys, std::span<const QuantityOfInterest> qois,
                                      const Vector& mu) {
  const auto [a, b] = assemble(sys, mu);
  DenseLu lu(a, "full-order system");
  const Vector w = lu.solve(b);
  ++hdm_solve_counters().state;
  const Matrix dw = state_sensitivity_direct(sys, mu, w, lu);
  QoiValues out{Vector(qois.size()), Matrix(qois.size(), sys.n_params())};
  for (std::size_t j = 0; j < qois.size(); ++j) {
    out.values(j) = qois[j].eval(w, mu);
    out.gradients.row(j) = (qois[j].partial_mu(w, mu) + dw.transpose() * qois[j].partial_w(w, mu)).transpose();
  }
  return out;
}

/// Adjoint approach: one transposed solve per QoI, reusing the factorization of A(mu).
inline QoiValues qoi_gradients_adjoint(const AffineParametricSystem& sys, std::span<const QuantityOfInterest> qois,
                                       const Vector& mu) {
  const auto [a, b] = assemble(sys, mu);
  DenseLu lu(a, "full-order system");
  const Vector w = lu.solve(b);
  ++hdm_solve_counters().state;

  // Columns r_i = db/dmu_i - dA/dmu_i w are shared by all QoIs.
  Matrix pseudo_rhs(sys.size(), sys.n_params());
  for (Index i = 0; i < sys.n_params(); ++i)
    pseudo_rhs.col(i) = sys.rhs().derivative(mu, i) - sys.matrix().derivative(mu, i) * w;

  QoiValues out{Vector(qois.size()), Matrix(qois.size(), sys.n_params())};
  for (std::size_t j = 0; j < qois.size(); ++j) {
    const Vector adjoint = lu.solve_transposed(qois[j].partial_w(w, mu));
    ++hdm_solve_counters().adjoint;
    out.values(j) = qois[j].eval(w, mu);
    out.gradients.row(j) = (qois[j].partial_mu(w, mu) + pseudo_rhs.transpose() * adjoint).transpose();
  }
  return out;
}

inline Vector qoi_gradient_direct(const AffineParametricSystem& sys, const QuantityOfInterest& q, const Vector& mu) {
  return qoi_gradients_direct(sys, std::span(&q, 1), mu).gradients.row(0).transpose();
}

inline Vector qoi_gradient_adjoint(const AffineParametricSystem& sys, const QuantityOfInterest& q, const Vector& mu) {
  return qoi_gradients_adjoint(sys, std::span(&q, 1), mu).gradients.row(0).transpose();
}

/// r = b(mu) - A(mu) V w_r
inline Vector residual(const AffineParametricSystem& sys, const Vector& mu, const Matrix& basis, const Vector& w_r) {
  require(basis.cols() == w_r.size(), "basis column count must equal the reduced state length");
  require(basis.rows() == sys.size(), "basis row count must equal the system dimension");
  const auto [a, b] = assemble(sys, mu);
  return b - a * (basis * w_r);
}

}  // namespace romdb
