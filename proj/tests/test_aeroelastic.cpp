// SPDX-License-Identifier: Apache-2.0

#include "romdb/aeroelastic.hpp"
#include "romdb/optimizer.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace romdb;
using namespace romdb::testing;

namespace {

SyntheticCoupledOptions small_model(std::uint64_t seed = 1) {
  SyntheticCoupledOptions o;
  o.structure = 6;
  o.fluid = 24;
  o.seed = seed;
  return o;
}

CoupledRomBuild build_at(const CoupledFom& fom, const Vector& mu, Index k_s = 3, Index k_f = 10) {
  return build_coupled_rom(fom, mu, k_s, k_f, default_sampling_frequencies());
}

std::shared_ptr<const CoupledRomInterpolator> interpolator(const CoupledFom& fom, int levels, Index k_s = 3,
                                                           Index k_f = 10) {
  std::vector<CoupledRomSample> samples;
  for (const auto& mu : full_factorial(fom.bounds, {levels, levels, levels})) {
    auto b = build_at(fom, mu, k_s, k_f);
    samples.push_back({mu, std::move(b.rom), std::move(b.structural_basis)});
  }
  return std::make_shared<const CoupledRomInterpolator>(std::move(samples), fom.bounds);
}

std::vector<Complex> positive_guesses(const Matrix& omega2) {
  std::vector<Complex> g;
  for (const auto& z : undamped_guesses(omega2))
    if (z.imag() > 0) g.push_back(z);
  return g;
}

double distance_to_spectrum(Complex lambda, const Matrix& dense) {
  Eigen::ComplexEigenSolver<ComplexMatrix> es(dense.cast<Complex>(), false);
  return (es.eigenvalues().array() - lambda).abs().minCoeff();
}

}  // namespace

TEST(StructuralModes, ChainOfTwoMasses) {
  const Matrix k = chain_stiffness(Vector::Ones(3));
  Matrix expected(2, 2);
  expected << 2, -1, -1, 2;
  EXPECT_EQ(k, expected);
  const StructuralModes m = structural_modes(Matrix::Identity(2, 2), k, 2);
  EXPECT_NEAR(m.omega2(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(m.omega2(1, 1), 3.0, 1e-14);
  EXPECT_LT((m.modes.transpose() * m.modes - Matrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(StructuralModes, MassOrthonormalAndAscending) {
  Rng rng(1);
  const Matrix mass = random_spd(rng, 8, 0.5, 2.0);
  const Matrix k = random_spd(rng, 8, 0.1, 10.0);
  const StructuralModes m = structural_modes(mass, k, 5);
  EXPECT_LT((m.modes.transpose() * mass * m.modes - Matrix::Identity(5, 5)).norm(), 1e-12);
  EXPECT_LT((m.modes.transpose() * k * m.modes - m.omega2).norm(), 1e-11);
  for (Index i = 1; i < 5; ++i) EXPECT_LE(m.omega2(i - 1, i - 1), m.omega2(i, i));
  EXPECT_THROW(structural_modes(-mass, k, 2), DomainError);
  EXPECT_THROW(structural_modes(mass, random_matrix(rng, 8, 8), 2), DomainError);
  EXPECT_THROW(structural_modes(mass, k, 9), ConfigError);
}

TEST(FluidBasis, IsOrthonormalInTheFluidMass) {
  const CoupledFom fom = synthetic_coupled_fom(small_model());
  const Vector mu = Vector::Zero(3);
  const auto sm = structural_modes(fom.structural_mass.evaluate(mu), fom.stiffness.evaluate(mu), 3);
  const Matrix v = fluid_rob_freq(fom, mu, sm.modes, default_sampling_frequencies(), 10);
  const Matrix a = fom.fluid_mass.evaluate(mu);
  EXPECT_LT((v.transpose() * a * v - Matrix::Identity(10, 10)).norm(), 1e-12);
  EXPECT_THROW(fluid_rob_freq(fom, mu, sm.modes, default_sampling_frequencies(), 31), ConfigError);
}

TEST(DampingRatio, Examples) {
  EXPECT_EQ(damping_ratio({0.0, 2.0}), 0.0);
  EXPECT_EQ(damping_ratio({-3.0, 0.0}), 1.0);
  EXPECT_NEAR(damping_ratio({-1.0, 1.0}), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(damping_ratio({0.5, 0.5}), -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_THROW(damping_ratio({0.0, 0.0}), DomainError);
}

TEST(StructuralEigensolve, MatchesTheDenseCoupledSpectrum) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const CoupledFom fom = synthetic_coupled_fom(small_model(seed));
    Rng rng(seed);
    const CoupledRom rom = build_at(fom, random_point(rng, fom.bounds)).rom;
    const Matrix dense = rom.full_operator();
    for (const auto& e : solve_structural_eigs(rom, undamped_guesses(rom.omega2))) {
      EXPECT_LE(distance_to_spectrum(e.lambda, dense), 1e-8 * std::abs(e.lambda)) << "seed " << seed;
      EXPECT_LE(e.residual, 1e-10);
      EXPECT_LT(assemble_ns(rom, e.lambda).jacobiSvd().singularValues().minCoeff(), 1e-10);
    }
  }
}

TEST(StructuralEigensolve, ZeroCouplingGivesTheUndampedFrequencies) {
  const CoupledFom fom = synthetic_coupled_fom(small_model());
  CoupledRom rom = build_at(fom, Vector::Zero(3)).rom;
  rom.p_r.setZero();
  const auto guesses = undamped_guesses(rom.omega2);
  const auto eigs = solve_structural_eigs(rom, guesses);
  for (std::size_t j = 0; j < eigs.size(); ++j) {
    EXPECT_LT(std::abs(eigs[j].lambda - guesses[j]), 1e-12 * std::abs(guesses[j]));
    EXPECT_LE(std::abs(eigs[j].zeta), 1e-12);
    EXPECT_FALSE(eigs[j].collided);
  }
}

TEST(StructuralEigensolve, InvariantUnderStructuralRotation) {
  const CoupledFom fom = synthetic_coupled_fom(small_model(3));
  const CoupledRom rom = build_at(fom, Vector::Constant(3, 0.2)).rom;
  Rng rng(3);
  const CoupledRom rotated = rom.rotated(random_orthogonal(rng, 3));
  const auto a = solve_structural_eigs(rom, positive_guesses(rom.omega2));
  const auto b = solve_structural_eigs(rotated, positive_guesses(rotated.omega2));
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_LT(std::abs(a[j].lambda - b[j].lambda), 1e-10);
}

TEST(StructuralEigensolve, DuplicateGuessesAreFlaggedAsCollisions) {
  const CoupledRom rom = build_at(synthetic_coupled_fom(small_model()), Vector::Zero(3)).rom;
  const Complex g = positive_guesses(rom.omega2).front();
  const auto eigs = solve_structural_eigs(rom, {g, g});
  EXPECT_TRUE(eigs[0].collided);
  EXPECT_TRUE(eigs[1].collided);
}

TEST(FluidTerms, LambdaDerivativeMatchesFiniteDifferencesAndPolesAreReported) {
  const CoupledRom rom = build_at(synthetic_coupled_fom(small_model()), Vector::Zero(3)).rom;
  const Complex lambda(-0.05, 1.1), h(1e-6, 0.0);
  const ComplexMatrix fd = (rom.n_f(lambda + h) - rom.n_f(lambda - h)) / (2.0 * h);
  EXPECT_LT((rom.n_f_dlambda(lambda) - fd).norm(), 1e-6 * fd.norm());
  Eigen::ComplexEigenSolver<ComplexMatrix> es(rom.n_ff().cast<Complex>(), false);
  EXPECT_THROW(rom.n_f(es.eigenvalues()(0)), SolverError);
}

TEST(TrackModes, MatchesBySmallestDistance) {
  const std::vector<Complex> previous{{0, 1}, {0, 2}, {0, 3}};
  const std::vector<Complex> current{{0.01, 3.02}, {0, 0.98}, {-0.01, 2.01}};
  EXPECT_EQ(track_modes(previous, current), (std::vector<std::size_t>{1, 2, 0}));
  EXPECT_THROW(track_modes(previous, {{0, 1}}), ConfigError);
}

TEST(CoupledInterpolation, ReproducesTheSampleEigenvalues) {
  const CoupledFom fom = synthetic_coupled_fom(small_model());
  const auto model = interpolator(fom, 2);
  const auto mu = full_factorial(fom.bounds, {2, 2, 2});
  for (std::size_t c = 0; c < mu.size(); c += 3) {
    const CoupledRom& rom = model->aligned_roms()[c];
    const auto direct = solve_structural_eigs(rom, positive_guesses(rom.omega2));
    const auto interp = tracked_damping(*model, mu[c], {}).eigs;
    for (std::size_t j = 0; j < direct.size(); ++j)
      EXPECT_LT(std::abs(direct[j].lambda - interp[j].lambda), 1e-8 * std::abs(direct[j].lambda));
  }
}

TEST(CoupledInterpolation, DampingSensitivitiesMatchFiniteDifferences) {
  const CoupledFom fom = synthetic_coupled_fom(small_model(2));
  const auto model = interpolator(fom, 2);
  Rng rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    const Vector mu = 0.8 * random_point(rng, fom.bounds);
    const TrackedModes base = tracked_damping(*model, mu, {});
    std::vector<Complex> previous;
    for (const auto& e : base.eigs) previous.push_back(e.lambda);
    for (Index i = 0; i < 3; ++i) {
      const double h = 1e-6;
      Vector plus = mu, minus = mu;
      plus(i) += h;
      minus(i) -= h;
      const auto tp = tracked_damping(*model, plus, previous), tm = tracked_damping(*model, minus, previous);
      for (std::size_t j = 0; j < base.eigs.size(); ++j) {
        const double fd = (tp.eigs[j].zeta - tm.eigs[j].zeta) / (2 * h);
        EXPECT_NEAR(base.sensitivities[j].d_zeta(i), fd, 1e-5 * std::max(1.0, std::abs(fd)));
        const Complex fdl = (tp.eigs[j].lambda - tm.eigs[j].lambda) / (2 * h);
        EXPECT_LT(std::abs(base.sensitivities[j].d_lambda(i) - fdl), 1e-5 * std::max(1.0, std::abs(fdl)));
      }
    }
  }
}

TEST(CoupledInterpolation, InterpolatedEigenvaluesTrackTheDirectModel) {
  const CoupledFom fom = synthetic_coupled_fom(small_model());
  const auto model = interpolator(fom, 3);
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector mu = random_point(rng, fom.bounds);
    const CoupledRom direct = build_at(fom, mu).rom;
    const auto d = solve_structural_eigs(direct, positive_guesses(direct.omega2));
    const auto m = tracked_damping(*model, mu, {}).eigs;
    for (std::size_t j = 0; j < d.size(); ++j)
      EXPECT_LT(std::abs(d[j].lambda - m[j].lambda), 0.05 * std::abs(d[j].lambda));
  }
}

TEST(FlutterNlp, ReachesAFeasibleDampingConstrainedOptimum) {
  const CoupledFom fom = synthetic_coupled_fom(small_model());
  const auto model = interpolator(fom, 2);
  // A point known to satisfy the damping floor makes the problem feasible.
  const Vector feasible = (Vector(3) << 0.5, -0.5, 0.5).finished();
  double floor = kInf;
  for (const auto& e : tracked_damping(*model, feasible, {}).eigs) floor = std::min(floor, e.zeta);
  const Vector target = (Vector(3) << -0.6, 0.6, -0.6).finished();
  std::vector<Monomial> terms;
  for (int i = 0; i < 3; ++i) {
    std::vector<int> e1(3, 0), e2(3, 0), e0(3, 0);
    e2[i] = 2;
    e1[i] = 1;
    terms.push_back({1.0, e2});
    terms.push_back({-2.0 * target(i), e1});
    terms.push_back({target(i) * target(i), e0});
  }
  const NlpProblem p = make_flutter_nlp(model, Polynomial(terms), floor);
  EXPECT_LT(gradient_check(p, Vector::Constant(3, 0.1)), 1e-4);
  NlpOptions opt;
  opt.tolerance = 1e-5;
  const auto r = solve_nlp(p, feasible, opt);
  EXPECT_TRUE(r.kkt.converged);
  EXPECT_LE(r.kkt.max_violation, 1e-5);
  EXPECT_LE(r.objective, (feasible - target).squaredNorm() + 1e-9);
}
