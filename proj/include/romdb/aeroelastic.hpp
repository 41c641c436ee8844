// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "romdb/align_interp.hpp"
#include "romdb/optimizer.hpp"

#include <concepts>
#include <random>

namespace romdb {

// ---------------------------------------------------------------------------
// Full-order coupled fluid/structure model
// ---------------------------------------------------------------------------

/// Linearized coupled system
///   A w' + H w + R u' + G u = 0
///   M u'' + K u = P w
/// with every block affine in mu. A is diagonal positive, M SPD, K symmetric
/// positive semidefinite.
struct CoupledFom {
  ParamBounds bounds;
  AffineMatrix fluid_mass;       ///< A, N_f x N_f
  AffineMatrix flux_jacobian;    ///< H, N_f x N_f
  AffineMatrix velocity_coupling;  ///< R, N_f x N_s
  AffineMatrix position_coupling;  ///< G, N_f x N_s
  AffineMatrix structural_mass;  ///< M, N_s x N_s
  AffineMatrix stiffness;        ///< K, N_s x N_s
  AffineMatrix force_jacobian;   ///< P, N_s x N_f

  Index fluid_size() const { return fluid_mass.rows(); }
  Index structure_size() const { return structural_mass.rows(); }
};

/// Modal truncation: the k_s lowest modes of K x = omega^2 M x, M-orthonormal,
/// ascending frequencies.
struct StructuralModes {
  Matrix modes;   ///< X, N_s x k_s
  Matrix omega2;  ///< diag(omega_i^2)
};

inline StructuralModes structural_modes(const Matrix& m, const Matrix& k, Index k_s) {
  require(m.rows() == m.cols() && k.rows() == k.cols() && m.rows() == k.rows(), "mass and stiffness shapes differ");
  require(k_s >= 1 && k_s <= m.rows(), "number of structural modes out of range");
  if (!is_spd(m)) throw DomainError("structural mass matrix is not symmetric positive definite");
  if (!is_symmetric(k)) throw DomainError("stiffness matrix is not symmetric");
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> eig(symmetrize(k), symmetrize(m));
  if (eig.info() != Eigen::Success) throw SolverError("generalized eigensolver failed", kInf);
  StructuralModes out{eig.eigenvectors().leftCols(k_s), eig.eigenvalues().head(k_s).asDiagonal()};
  canonicalize_signs(out.modes);
  return out;
}

/// Fluid basis from frequency-domain snapshots: for every mode x_i and
/// frequency xi_l solve (j xi_l A + H) w = -(j xi_l R + G) x_i, then an
/// A-weighted POD of [Re W, Im W]. The result satisfies V^T A V = I.
inline Matrix fluid_rob_freq(const CoupledFom& fom, const Vector& mu, const Matrix& modes, const Vector& frequencies,
                             Index k_f) {
  require(frequencies.size() >= 1, "at least one sampling frequency is required");
  require(k_f >= 1 && k_f <= 2 * modes.cols() * frequencies.size(), "fluid basis dimension out of range");
  const Matrix a = fom.fluid_mass.evaluate(mu);
  const Matrix h = fom.flux_jacobian.evaluate(mu);
  const Matrix r = fom.velocity_coupling.evaluate(mu);
  const Matrix g = fom.position_coupling.evaluate(mu);
  const Index n_f = a.rows();
  const Index n_modes = modes.cols();
  Matrix snapshots(n_f, 2 * n_modes * frequencies.size());
  const Complex j(0.0, 1.0);
  Index col = 0;
  for (Index l = 0; l < frequencies.size(); ++l) {
    const double xi = frequencies(l);
    const ComplexMatrix op = j * xi * a.cast<Complex>() + h.cast<Complex>();
    Eigen::PartialPivLU<ComplexMatrix> lu(op);
    if (!(lu.rcond() > 1e3 * std::numeric_limits<double>::epsilon()))
      throw SolverError("fluid operator is singular at sampling frequency " + std::to_string(xi), 1.0 / lu.rcond());
    const ComplexMatrix rhs = -(j * xi * r.cast<Complex>() + g.cast<Complex>()) * modes.cast<Complex>();
    const ComplexMatrix w = lu.solve(rhs);
    for (Index i = 0; i < n_modes; ++i) {
      snapshots.col(col) = w.col(i).real();
      snapshots.col(col + n_modes * frequencies.size()) = w.col(i).imag();
      ++col;
    }
  }
  // Drop identically zero columns (imaginary parts at xi = 0).
  std::vector<Index> keep;
  for (Index c = 0; c < snapshots.cols(); ++c)
    if (snapshots.col(c).squaredNorm() > 0) keep.push_back(c);
  Matrix nonzero(n_f, static_cast<Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) nonzero.col(static_cast<Index>(c)) = snapshots.col(keep[c]);
  return pod_basis(nonzero, k_f, a);
}

// ---------------------------------------------------------------------------
// Reduced coupled model and the structural nonlinear eigenproblem
// ---------------------------------------------------------------------------

/// Reduced blocks. With q_s = [u_r'; u_r]:
///   N_ss = [[0, -Omega^2], [I, 0]]   N_sf = [[P_r], [0]]
///   N_ff = -H_r                      N_fs = [-R_r, -G_r]
struct CoupledRom {
  Matrix h_r;     ///< k_f x k_f
  Matrix r_r;     ///< k_f x k_s
  Matrix g_r;     ///< k_f x k_s
  Matrix p_r;     ///< k_s x k_f
  Matrix omega2;  ///< k_s x k_s (SPD; diagonal before alignment)

  Index k_s() const { return omega2.rows(); }
  Index k_f() const { return h_r.rows(); }

  Matrix n_ss() const { return structural_block(omega2); }
  Matrix n_sf() const {
    Matrix out = Matrix::Zero(2 * k_s(), k_f());
    out.topRows(k_s()) = p_r;
    return out;
  }
  Matrix n_ff() const { return -h_r; }
  Matrix n_fs() const {
    Matrix out(k_f(), 2 * k_s());
    out << -r_r, -g_r;
    return out;
  }

  /// Dense operator acting on [w_r; u_r'; u_r].
  Matrix full_operator() const {
    const Index kf = k_f(), ks = k_s();
    Matrix n = Matrix::Zero(kf + 2 * ks, kf + 2 * ks);
    n.topLeftCorner(kf, kf) = -h_r;
    n.block(0, kf, kf, ks) = -r_r;
    n.block(0, kf + ks, kf, ks) = -g_r;
    n.block(kf, 0, ks, kf) = p_r;
    n.block(kf, kf + ks, ks, ks) = -omega2;
    n.block(kf + ks, kf, ks, ks).setIdentity();
    return n;
  }

  /// N_f(lambda) = N_sf (lambda I - N_ff)^{-1} N_fs
  ComplexMatrix n_f(Complex lambda) const { return fluid_terms(lambda, false); }
  /// d N_f / d lambda = -N_sf (lambda I - N_ff)^{-2} N_fs
  ComplexMatrix n_f_dlambda(Complex lambda) const { return fluid_terms(lambda, true); }

  /// N_ss + N_f(lambda): the matrix whose eigenvalues are iterated on.
  ComplexMatrix frozen(Complex lambda) const { return n_ss().cast<Complex>() + n_f(lambda); }
  Index structural_dimension() const { return 2 * k_s(); }

  /// Same model in structural coordinates rotated by Q (u_r -> Q u_r).
  CoupledRom rotated(const Matrix& q) const {
    check_orthogonal(q);
    return {h_r, r_r * q, g_r * q, q.transpose() * p_r, symmetrize(q.transpose() * omega2 * q)};
  }

  static Matrix structural_block(const Matrix& omega2) {
    const Index ks = omega2.rows();
    Matrix out = Matrix::Zero(2 * ks, 2 * ks);
    out.topRightCorner(ks, ks) = -omega2;
    out.bottomLeftCorner(ks, ks).setIdentity();
    return out;
  }

 private:
  ComplexMatrix fluid_terms(Complex lambda, bool derivative) const {
    const ComplexMatrix shifted = lambda * ComplexMatrix::Identity(k_f(), k_f()) - n_ff().cast<Complex>();
    Eigen::PartialPivLU<ComplexMatrix> lu(shifted);
    if (!(lu.rcond() > 1e3 * std::numeric_limits<double>::epsilon()))
      throw SolverError("lambda is a pole of the fluid block (lambda I - N_ff is singular)", 1.0 / lu.rcond());
    ComplexMatrix x = lu.solve(n_fs().cast<Complex>());
    if (derivative) x = -lu.solve(x);
    return n_sf().cast<Complex>() * x;
  }
};

inline ComplexMatrix assemble_ns(const CoupledRom& rom, Complex lambda) {
  return rom.frozen(lambda) - lambda * ComplexMatrix::Identity(rom.structural_dimension(), rom.structural_dimension());
}

struct CoupledRomBuild {
  CoupledRom rom;
  Matrix structural_basis;  ///< X
  Matrix fluid_basis;       ///< V
};

inline CoupledRomBuild build_coupled_rom(const CoupledFom& fom, const Vector& mu, Index k_s, Index k_f,
                                         const Vector& frequencies) {
  const Matrix m = fom.structural_mass.evaluate(mu);
  const Matrix k = fom.stiffness.evaluate(mu);
  StructuralModes sm = structural_modes(m, k, k_s);
  Matrix v = fluid_rob_freq(fom, mu, sm.modes, frequencies, k_f);
  const Matrix h = fom.flux_jacobian.evaluate(mu);
  const Matrix r = fom.velocity_coupling.evaluate(mu);
  const Matrix g = fom.position_coupling.evaluate(mu);
  const Matrix p = fom.force_jacobian.evaluate(mu);
  CoupledRom rom{v.transpose() * h * v, v.transpose() * r * sm.modes, v.transpose() * g * sm.modes,
                 sm.modes.transpose() * p * v, sm.omega2};
  return {std::move(rom), std::move(sm.modes), std::move(v)};
}

/// Operators that expose N_ss + N_f(lambda) for the fixed-point eigensolver.
template <typename Op>
concept StructuralOperator = requires(const Op& op, Complex lambda) {
  { op.frozen(lambda) } -> std::convertible_to<ComplexMatrix>;
  { op.structural_dimension() } -> std::convertible_to<Index>;
};

struct StructEig {
  Complex lambda;
  ComplexVector right;  ///< q_s with N_s(lambda) q_s = 0
  ComplexVector left;   ///< p_s with p_s^H N_s(lambda) = 0
  double zeta = 0.0;
  int iterations = 0;
  double residual = 0.0;  ///< ||N_s q|| / ||N_s||
  bool collided = false;  ///< another initial guess reached the same root
};

/// zeta = -Re(lambda) / |lambda|
inline double damping_ratio(Complex lambda) {
  const double mag = std::abs(lambda);
  if (mag == 0.0) throw DomainError("damping ratio undefined for a zero eigenvalue");
  return -lambda.real() / mag;
}

/// Null vectors of N_s(lambda) from its smallest singular triplet.
inline std::pair<ComplexVector, ComplexVector> null_vectors(const ComplexMatrix& ns) {
  Eigen::JacobiSVD<ComplexMatrix> svd(ns, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Index last = ns.cols() - 1;
  return {svd.matrixV().col(last), svd.matrixU().col(last)};
}

struct EigenSolveOptions {
  double tolerance = 1e-12;
  int max_iterations = 200;
};

/// Fixed-point iteration on N_s(lambda) q = 0: eigendecompose the frozen
/// matrix at the current iterate and move to its eigenvalue closest to it.
template <StructuralOperator Op>
StructEig solve_structural_eig(const Op& op, Complex guess, const EigenSolveOptions& opt = {}) {
  Complex lambda = guess;
  const Index n = op.structural_dimension();
  for (int it = 1; it <= opt.max_iterations; ++it) {
    Eigen::ComplexEigenSolver<ComplexMatrix> es(op.frozen(lambda), false);
    if (es.info() != Eigen::Success) throw SolverError("eigendecomposition of the frozen operator failed", kInf);
    Index best = 0;
    es.eigenvalues().unaryExpr([&](Complex z) { return std::abs(z - lambda); }).real().minCoeff(&best);
    const Complex next = es.eigenvalues()(best);
    const double change = std::abs(next - lambda);
    lambda = next;
    if (change <= opt.tolerance * std::abs(lambda)) {
      StructEig out;
      out.lambda = lambda;
      out.iterations = it;
      const ComplexMatrix ns = op.frozen(lambda) - lambda * ComplexMatrix::Identity(n, n);
      std::tie(out.right, out.left) = null_vectors(ns);
      const double scale = ns.norm();
      out.residual = scale > 0 ? (ns * out.right).norm() / scale : 0.0;
      out.zeta = damping_ratio(lambda);
      return out;
    }
  }
  throw ConvergenceError("structural eigenvalue iteration did not converge in " +
                         std::to_string(opt.max_iterations) + " iterations from guess (" +
                         std::to_string(guess.real()) + ", " + std::to_string(guess.imag()) + ")");
}

template <StructuralOperator Op>
std::vector<StructEig> solve_structural_eigs(const Op& op, const std::vector<Complex>& guesses,
                                             const EigenSolveOptions& opt = {}) {
  std::vector<StructEig> out;
  out.reserve(guesses.size());
  for (const Complex& g : guesses) out.push_back(solve_structural_eig(op, g, opt));
  for (std::size_t a = 0; a < out.size(); ++a)
    for (std::size_t b = a + 1; b < out.size(); ++b)
      if (std::abs(out[a].lambda - out[b].lambda) <= 1e-8 * std::max(1.0, std::abs(out[a].lambda))) {
        if (!out[a].collided || !out[b].collided)
          log().warn("initial guesses {} and {} converged to the same structural eigenvalue", a, b);
        out[a].collided = out[b].collided = true;
      }
  return out;
}

/// Fluid-off initial guesses +-j omega_i from the diagonal of Omega^2.
inline std::vector<Complex> undamped_guesses(const Matrix& omega2) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(omega2), Eigen::EigenvaluesOnly);
  std::vector<Complex> g;
  for (Index i = 0; i < omega2.rows(); ++i) {
    const double w = std::sqrt(std::max(0.0, eig.eigenvalues()(i)));
    g.emplace_back(0.0, w);
    g.emplace_back(0.0, -w);
  }
  return g;
}

/// Order `current` so that entry j is the eigenvalue closest to previous[j]
/// (greedy matching by smallest |delta lambda|).
inline std::vector<std::size_t> track_modes(const std::vector<Complex>& previous, const std::vector<Complex>& current) {
  require(previous.size() == current.size(), "mode tracking needs equally many eigenvalues");
  const std::size_t n = previous.size();
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) pairs.emplace_back(std::abs(previous[a] - current[b]), a, b);
  std::sort(pairs.begin(), pairs.end());
  std::vector<std::size_t> order(n, n);
  std::vector<bool> used(n, false);
  for (const auto& [d, a, b] : pairs)
    if (order[a] == n && !used[b]) {
      order[a] = b;
      used[b] = true;
    }
  return order;
}

// ---------------------------------------------------------------------------
// Interpolated structural operator
// ---------------------------------------------------------------------------

struct CoupledRomSample {
  Vector mu;
  CoupledRom rom;
  Matrix structural_basis;
};

/// Database of coupled reduced models with structural coordinates aligned to
/// the reference entry. Omega^2 is interpolated on the SPD manifold and
/// N_f(lambda) entrywise on the Real manifold.
class CoupledRomInterpolator {
 public:
  CoupledRomInterpolator(std::vector<CoupledRomSample> samples, ParamBounds bounds, double theta = 0.0,
                         Index reference = 0)
      : bounds_(std::move(bounds)), reference_(reference) {
    require(!samples.empty(), "coupled interpolation needs at least one sample");
    require(reference >= 0 && reference < static_cast<Index>(samples.size()), "reference index out of range");
    const Matrix& x_ref = samples[reference].structural_basis;
    std::vector<Vector> centers;
    std::vector<Matrix> omegas;
    for (Index c = 0; c < static_cast<Index>(samples.size()); ++c) {
      auto& s = samples[c];
      require(s.rom.k_s() == samples[reference].rom.k_s(), "coupled samples must share k_s");
      CoupledRom aligned = c == reference ? s.rom : s.rom.rotated(procrustes_align(s.structural_basis, x_ref));
      centers.push_back(s.mu);
      omegas.push_back(aligned.omega2);
      roms_.push_back(std::move(aligned));
    }
    rbf_ = std::make_unique<RbfInterpolator>(centers, bounds_, theta);
    omega_ = std::make_unique<ManifoldInterpolator>(ManifoldKind::Spd, omegas, reference);
  }

  class Evaluated;
  Evaluated at(const Vector& mu) const;

  const std::vector<CoupledRom>& aligned_roms() const { return roms_; }
  const ParamBounds& bounds() const { return bounds_; }
  Index k_s() const { return roms_.front().k_s(); }
  Index reference() const { return reference_; }

 private:
  ParamBounds bounds_;
  Index reference_;
  std::vector<CoupledRom> roms_;
  std::unique_ptr<RbfInterpolator> rbf_;
  std::unique_ptr<ManifoldInterpolator> omega_;
};

/// N_s(lambda; mu*) from the interpolated blocks, with its derivatives.
class CoupledRomInterpolator::Evaluated {
 public:
  Evaluated(const CoupledRomInterpolator& parent, const Vector& mu)
      : parent_(&parent), mu_(mu), weights_(parent.rbf_->weights(mu, true)) {
    auto om = parent.omega_->value_and_sensitivity(weights_);
    omega2_ = std::move(om.value);
    d_omega2_ = std::move(om.gradient);
  }

  Index structural_dimension() const { return 2 * parent_->k_s(); }
  const Matrix& omega2() const { return omega2_; }
  const Vector& mu() const { return mu_; }

  /// N_f,ref + sum_c w_c (N_f,c - N_f,ref); with gradient weights for d/dmu_i.
  ComplexMatrix n_f(Complex lambda) const { return combine(lambda, weights_.values, false); }

  ComplexMatrix frozen(Complex lambda) const {
    return CoupledRom::structural_block(omega2_).cast<Complex>() + n_f(lambda);
  }

  ComplexMatrix ns(Complex lambda) const {
    return frozen(lambda) - lambda * ComplexMatrix::Identity(structural_dimension(), structural_dimension());
  }

  /// dN_s/dmu_i at fixed lambda: interpolant derivative of N_f plus the
  /// SPD-manifold derivative of Omega^2 embedded in N_ss.
  std::vector<ComplexMatrix> d_ns_dmu(Complex lambda) const {
    std::vector<ComplexMatrix> out;
    const std::vector<ComplexMatrix> fs = fluid_samples(lambda, false);
    for (Index i = 0; i < weights_.gradient.cols(); ++i) {
      ComplexMatrix d = combine_samples(fs, weights_.gradient.col(i), true);
      d += CoupledRom::structural_block(d_omega2_[i]).cast<Complex>();
      // structural_block also places the identity; remove it for a derivative.
      d.bottomLeftCorner(parent_->k_s(), parent_->k_s()) -=
          ComplexMatrix::Identity(parent_->k_s(), parent_->k_s());
      out.push_back(std::move(d));
    }
    return out;
  }

  /// dN_s/dlambda = -I + dN_f/dlambda, using linearity of the interpolant.
  ComplexMatrix d_ns_dlambda(Complex lambda) const {
    const Index n = structural_dimension();
    return combine(lambda, weights_.values, false, true) - ComplexMatrix::Identity(n, n);
  }

 private:
  std::vector<ComplexMatrix> fluid_samples(Complex lambda, bool derivative) const {
    std::vector<ComplexMatrix> fs;
    fs.reserve(parent_->roms_.size());
    for (const auto& r : parent_->roms_) fs.push_back(derivative ? r.n_f_dlambda(lambda) : r.n_f(lambda));
    return fs;
  }

  /// sum_c w_c (F_c - F_ref), plus F_ref unless `increment_only`.
  ComplexMatrix combine_samples(const std::vector<ComplexMatrix>& fs, const Vector& w, bool increment_only) const {
    const ComplexMatrix& ref = fs[static_cast<std::size_t>(parent_->reference_)];
    ComplexMatrix out = increment_only ? ComplexMatrix::Zero(ref.rows(), ref.cols()) : ref;
    for (std::size_t c = 0; c < fs.size(); ++c)
      if (static_cast<Index>(c) != parent_->reference_) out += w(static_cast<Index>(c)) * (fs[c] - ref);
    return out;
  }

  ComplexMatrix combine(Complex lambda, const Vector& w, bool increment_only, bool derivative = false) const {
    return combine_samples(fluid_samples(lambda, derivative), w, increment_only);
  }

  const CoupledRomInterpolator* parent_;
  Vector mu_;
  CardinalWeights weights_;
  Matrix omega2_;
  std::vector<Matrix> d_omega2_;
};

inline CoupledRomInterpolator::Evaluated CoupledRomInterpolator::at(const Vector& mu) const {
  return Evaluated(*this, mu);
}

struct EigenSensitivity {
  ComplexVector d_lambda;  ///< d lambda / d mu_i
  Vector d_zeta;           ///< d zeta / d mu_i
};

/// d lambda/d mu_i = -(p^H dN_s/dmu_i q) / (p^H dN_s/dlambda q), then the
/// chain rule through zeta = -Re(lambda)/|lambda|.
inline EigenSensitivity damping_sensitivities(const StructEig& eig, const std::vector<ComplexMatrix>& d_ns_dmu,
                                              const ComplexMatrix& d_ns_dlambda) {
  const Complex denom = eig.left.dot(d_ns_dlambda * eig.right);  // dot() conjugates the left operand
  const double scale = d_ns_dlambda.norm() * eig.left.norm() * eig.right.norm();
  if (!(std::abs(denom) > 1e-12 * std::max(scale, 1e-300)))
    throw DomainError("eigenvalue is defective or nearly so; sensitivity unavailable");
  const double lr = eig.lambda.real(), li = eig.lambda.imag();
  const double mag = std::abs(eig.lambda);
  if (mag == 0.0) throw DomainError("damping ratio undefined for a zero eigenvalue");
  EigenSensitivity out{ComplexVector(d_ns_dmu.size()), Vector(d_ns_dmu.size())};
  for (std::size_t i = 0; i < d_ns_dmu.size(); ++i) {
    const Complex dl = -eig.left.dot(d_ns_dmu[i] * eig.right) / denom;
    out.d_lambda(static_cast<Index>(i)) = dl;
    out.d_zeta(static_cast<Index>(i)) =
        dl.real() * (lr * lr / (mag * mag * mag) - 1.0 / mag) + dl.imag() * (lr * li / (mag * mag * mag));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Damping-constrained design
// ---------------------------------------------------------------------------

/// Damping ratios of the k_s oscillatory modes (positive imaginary part) at
/// mu, solved from the fluid-off guesses and reordered to follow `previous`.
struct TrackedModes {
  std::vector<StructEig> eigs;
  std::vector<EigenSensitivity> sensitivities;
};

inline TrackedModes tracked_damping(const CoupledRomInterpolator& model, const Vector& mu,
                                    const std::vector<Complex>& previous) {
  const auto ev = model.at(mu);
  std::vector<Complex> guesses;
  for (const Complex& g : undamped_guesses(ev.omega2()))
    if (g.imag() > 0) guesses.push_back(g);
  auto eigs = solve_structural_eigs(ev, guesses);
  if (previous.size() == eigs.size()) {
    std::vector<Complex> now;
    for (const auto& e : eigs) now.push_back(e.lambda);
    const auto order = track_modes(previous, now);
    std::vector<StructEig> sorted;
    for (std::size_t j : order) sorted.push_back(eigs[j]);
    eigs = std::move(sorted);
  }
  TrackedModes out;
  for (const auto& e : eigs)
    out.sensitivities.push_back(damping_sensitivities(e, ev.d_ns_dmu(e.lambda), ev.d_ns_dlambda(e.lambda)));
  out.eigs = std::move(eigs);
  return out;
}

/// minimize g(mu) subject to zeta_j(mu) >= zeta_lower for every tracked mode,
/// posed as zeta_lower - zeta_j <= 0. Eigenvalues are followed from one
/// evaluation to the next by smallest |delta lambda|.
inline NlpProblem make_flutter_nlp(std::shared_ptr<const CoupledRomInterpolator> model, Polynomial objective,
                                   double zeta_lower) {
  require(objective.n_params() == model->bounds().size(), "objective parameter count differs from the model");
  auto previous = std::make_shared<std::vector<Complex>>();
  NlpProblem p;
  p.bounds = model->bounds();
  p.n_constraints = model->k_s();
  p.evaluate = [model, objective = std::move(objective), zeta_lower, previous](const Vector& mu) {
    const TrackedModes t = tracked_damping(*model, mu, *previous);
    NlpEvaluation e;
    e.objective = objective.value(mu);
    e.gradient = objective.gradient(mu);
    e.constraints.resize(static_cast<Index>(t.eigs.size()));
    e.jacobian.resize(static_cast<Index>(t.eigs.size()), mu.size());
    previous->clear();
    for (std::size_t j = 0; j < t.eigs.size(); ++j) {
      e.constraints(static_cast<Index>(j)) = zeta_lower - t.eigs[j].zeta;
      e.jacobian.row(static_cast<Index>(j)) = -t.sensitivities[j].d_zeta.transpose();
      previous->push_back(t.eigs[j].lambda);
    }
    return e;
  };
  return p;
}

// ---------------------------------------------------------------------------
// Synthetic desk-scale coupled model
// ---------------------------------------------------------------------------

/// Spring-mass chain (fixed ends) coupled to a stable random fluid block.
///   K(mu) = K_0 + mu_1 K_1 + mu_2 K_2   (stiffness of the two chain halves)
///   G(mu) = G_0 + mu_3 G_1              (shape-like coupling change)
struct SyntheticCoupledOptions {
  Index structure = 10;
  Index fluid = 40;
  std::uint64_t seed = 1;
  double coupling = 0.05;
  double stiffness_variation = 0.3;
  double shape_variation = 0.3;
};

/// Tridiagonal stiffness of a fixed-fixed chain with per-spring stiffness.
inline Matrix chain_stiffness(const Vector& springs) {
  const Index n = springs.size() - 1;
  Matrix k = Matrix::Zero(n, n);
  for (Index s = 0; s < springs.size(); ++s) {
    const Index left = s - 1, right = s;
    if (left >= 0) k(left, left) += springs(s);
    if (right < n) k(right, right) += springs(s);
    if (left >= 0 && right < n) {
      k(left, right) -= springs(s);
      k(right, left) -= springs(s);
    }
  }
  return k;
}

inline CoupledFom synthetic_coupled_fom(const SyntheticCoupledOptions& o = {}) {
  require(o.structure >= 2 && o.fluid >= 2, "synthetic model dimensions too small");
  const Index ns = o.structure, nf = o.fluid;
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_matrix = [&](Index r, Index c) {
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i) m(i, j) = normal(rng);
    return m;
  };

  CoupledFom fom;
  fom.bounds = ParamBounds::uniform(3, -1.0, 1.0);

  Vector volumes(nf);
  for (auto& v : volumes) v = 0.5 + unit(rng);
  fom.fluid_mass = AffineMatrix(Matrix(volumes.asDiagonal()));

  // Symmetric part positive definite keeps every Galerkin projection stable.
  Vector damping(nf);
  for (auto& d : damping) d = 0.5 + unit(rng);
  const Matrix w = random_matrix(nf, nf) / std::sqrt(static_cast<double>(nf));
  fom.flux_jacobian = AffineMatrix(Matrix(Matrix(damping.asDiagonal()) + (w - w.transpose())));

  fom.velocity_coupling = AffineMatrix(Matrix(o.coupling * random_matrix(nf, ns)));
  fom.position_coupling = AffineMatrix(Matrix(o.coupling * random_matrix(nf, ns)));
  fom.position_coupling.add_term(Polynomial::linear(3, 2), o.coupling * o.shape_variation * random_matrix(nf, ns));
  fom.force_jacobian = AffineMatrix(Matrix(o.coupling * random_matrix(ns, nf)));

  fom.structural_mass = AffineMatrix(Matrix(Matrix::Identity(ns, ns)));
  const Index springs = ns + 1;
  Vector first = Vector::Zero(springs), second = Vector::Zero(springs);
  for (Index s = 0; s < springs; ++s) (s < springs / 2 ? first : second)(s) = o.stiffness_variation;
  fom.stiffness = AffineMatrix(chain_stiffness(Vector::Ones(springs)));
  fom.stiffness.add_term(Polynomial::linear(3, 0), chain_stiffness(first));
  fom.stiffness.add_term(Polynomial::linear(3, 1), chain_stiffness(second));
  return fom;
}

/// Frequencies for the fluid snapshots spanning the structural band.
inline Vector default_sampling_frequencies(Index count = 5, double max_frequency = 2.0) {
  return Vector::LinSpaced(count, 0.0, max_frequency);
}

}  // namespace romdb
