// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "romdb/rom_nlp.hpp"

namespace romdb {

/// Steady heat conduction in a unit rod with zero end temperatures, split
/// into three equal conductivity regions.
///
///   kappa_r(mu) = 1 + 0.5 mu_r + 0.2 mu_r^2,    mu in [-1, 1]^3
///   source      = 1 - 0.5 mu_2 on the middle region, 1 elsewhere
///
/// Objective: mean temperature + cost_weight * sum_r c_r kappa_r(mu).
/// Constraint: temperature at the probe node <= max_probe_temperature.
struct DiffusionRodOptions {
  int nodes = 100;
  double cost_weight = 0.1;
  std::array<double, 3> region_cost{1.0 / 3.0, 0.9 / 3.0, 1.15 / 3.0};
  double probe_position = 0.4;
  double max_probe_temperature = 0.09;
};

/// Unit-conductivity stiffness of the elements whose midpoints fall in [a, b).
inline Matrix rod_region_stiffness(int nodes, double a, double b) {
  const double h = 1.0 / (nodes + 1);
  Matrix k = Matrix::Zero(nodes, nodes);
  for (int e = 0; e <= nodes; ++e) {
    const double mid = (e + 0.5) * h;
    if (mid < a || mid >= b) continue;
    const int left = e - 1, right = e;  // interior indices of the element's end nodes
    if (left >= 0) k(left, left) += 1.0 / h;
    if (right < nodes) k(right, right) += 1.0 / h;
    if (left >= 0 && right < nodes) {
      k(left, right) -= 1.0 / h;
      k(right, left) -= 1.0 / h;
    }
  }
  return k;
}

inline Polynomial region_conductivity(Index region, Index n_params = 3) {
  auto mono = [&](double c, int power) {
    Monomial m{c, std::vector<int>(static_cast<std::size_t>(n_params), 0)};
    m.exponents[static_cast<std::size_t>(region)] = power;
    return m;
  };
  return Polynomial({mono(1.0, 0), mono(0.5, 1), mono(0.2, 2)});
}

inline DesignProblem diffusion_rod_problem(const DiffusionRodOptions& o = {}) {
  require(o.nodes >= 3, "the rod needs at least three interior nodes");
  const int n = o.nodes;
  const double h = 1.0 / (n + 1);
  const ParamBounds bounds = ParamBounds::uniform(3, -1.0, 1.0);

  AffineMatrix a(Matrix::Zero(n, n));
  for (Index r = 0; r < 3; ++r) {
    const double hi = r == 2 ? 2.0 : (r + 1) / 3.0;
    a.add_term(region_conductivity(r), rod_region_stiffness(n, r / 3.0, hi));
  }

  Vector base = Vector::Constant(n, h);
  Vector middle = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    const double x = (i + 1) * h;
    if (x > 1.0 / 3.0 && x < 2.0 / 3.0) middle(i) = -0.5 * h;
  }
  AffineVector b(base);
  b.add_term(Polynomial({Monomial{1.0, {0, 1, 0}}}), middle);

  LinearOutput objective{Vector::Constant(n, 1.0 / n), Polynomial()};
  std::vector<Monomial> cost;
  for (Index r = 0; r < 3; ++r) {
    const Polynomial kappa = region_conductivity(r);
    for (const auto& m : kappa.terms())
      cost.push_back({o.cost_weight * o.region_cost[static_cast<std::size_t>(r)] * m.coefficient, m.exponents});
  }
  objective.offset = Polynomial(std::move(cost));

  const int probe = std::clamp(static_cast<int>(o.probe_position * (n + 1)) - 1, 0, n - 1);
  LinearOutput constraint{Vector::Unit(n, probe), Polynomial({Monomial{-o.max_probe_temperature, {0, 0, 0}}})};

  return DesignProblem{AffineParametricSystem(std::move(a), std::move(b), bounds), std::move(objective),
                       {std::move(constraint)}, Vector::Zero(3)};
}

}  // namespace romdb
