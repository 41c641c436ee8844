// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace romdb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Error hierarchy. Every failure raised by the library derives from Error.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: dimension mismatch, bad configuration, bad file content.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Linear solve failed; carries the reciprocal condition estimate of the operator.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double condition_estimate)
      : Error(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

class RankError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a map (e.g. no principal matrix logarithm).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// Database file problems: bad magic, unsupported version, checksum, truncation.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

inline spdlog::logger& log() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::default_logger()->clone("romdb");
    return l;
  }();
  return *logger;
}

// ---------------------------------------------------------------------------
// Parameter domain
// ---------------------------------------------------------------------------

/// Box bounds of the parameter domain. Distances used by the interpolation and
/// the greedy samplers are measured after mapping every axis onto [-0.1, 0.1].
struct ParamBounds {
  Vector lower;
  Vector upper;

  ParamBounds() = default;
  ParamBounds(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) { validate(); }

  static ParamBounds uniform(Index n, double lo, double hi) {
    return ParamBounds(Vector::Constant(n, lo), Vector::Constant(n, hi));
  }

  Index size() const { return lower.size(); }

  void validate() const {
    if (lower.size() < 1 || lower.size() != upper.size())
      throw ConfigError("parameter bounds must be non-empty and of equal length");
    for (Index i = 0; i < lower.size(); ++i)
      if (!(lower(i) < upper(i)))
        throw ConfigError("parameter bounds require lower < upper on every axis");
  }

  bool contains(const Vector& mu, double slack = 1e-12) const {
    if (mu.size() != size()) return false;
    for (Index i = 0; i < size(); ++i) {
      const double pad = slack * (upper(i) - lower(i));
      if (mu(i) < lower(i) - pad || mu(i) > upper(i) + pad) return false;
    }
    return true;
  }

  Vector center() const { return 0.5 * (lower + upper); }

  Vector clamp(const Vector& mu) const { return mu.cwiseMax(lower).cwiseMin(upper); }

  /// d(normalized)/d(physical), per axis.
  Vector normalization_scale() const { return (0.2 * (upper - lower).cwiseInverse()).eval(); }

  Vector normalize(const Vector& mu) const {
    return (mu - center()).cwiseProduct(normalization_scale());
  }

  Vector denormalize(const Vector& normalized) const {
    return center() + normalized.cwiseQuotient(normalization_scale());
  }

  double normalized_distance(const Vector& a, const Vector& b) const {
    return (a - b).cwiseProduct(normalization_scale()).norm();
  }

  /// Diagonal length of the normalized box, sqrt(N_mu) * 0.2.
  double normalized_diagonal() const { return 0.2 * std::sqrt(static_cast<double>(size())); }

  friend bool operator==(const ParamBounds& a, const ParamBounds& b) {
    return a.lower.size() == b.lower.size() && a.lower == b.lower && a.upper == b.upper;
  }
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

inline double relative_error(const Matrix& approx, const Matrix& exact) {
  const double scale = exact.norm();
  const double diff = (approx - exact).norm();
  return scale > 0 ? diff / scale : diff;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace romdb
