// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "romdb/csv.hpp"

#include <functional>
#include <ostream>

namespace romdb {

/// Objective value/gradient and inequality constraints c(mu) <= 0 with their
/// Jacobian, from one evaluation.
struct NlpEvaluation {
  double objective = 0.0;
  Vector gradient;
  Vector constraints;   ///< N_c
  Matrix jacobian;      ///< N_c x N_mu
};

struct NlpProblem {
  ParamBounds bounds;
  Index n_constraints = 0;
  /// Throws romdb::Error when the model cannot be evaluated at mu.
  std::function<NlpEvaluation(const Vector&)> evaluate;
};

struct KktReport {
  double stationarity = kInf;
  double max_violation = kInf;
  double complementarity = kInf;
  long iterations = 0;
  long evaluations = 0;
  bool converged = false;
};

struct NlpIteration {
  long iteration = 0;
  long outer = 0;
  double objective = 0.0;
  double max_violation = 0.0;
  double stationarity = 0.0;
  double step_norm = 0.0;
  long evaluations = 0;
  double merit = 0.0;    ///< augmented Lagrangian at the accepted iterate
};

struct NlpOptions {
  double tolerance = 1e-6;
  int max_outer = 40;
  int max_inner = 300;
  long max_evaluations = 20000;
  double initial_penalty = 10.0;
  double penalty_growth = 10.0;
  double multiplier_bound = 1e8;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_rejections = 30;
  bool gradient_check = true;
};

struct NlpResult {
  Vector mu;
  double objective = 0.0;
  Vector constraints;
  Vector multipliers;
  KktReport kkt;
  std::vector<NlpIteration> history;
};

/// Central finite-difference check of the objective and constraint gradients.
/// Returns the largest relative mismatch.
inline double gradient_check(const NlpProblem& p, const Vector& mu, double step = 1e-6) {
  const NlpEvaluation base = p.evaluate(mu);
  double worst = 0.0;
  for (Index i = 0; i < mu.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(mu(i)));
    Vector plus = mu, minus = mu;
    plus(i) += h;
    minus(i) -= h;
    const NlpEvaluation ep = p.evaluate(plus), em = p.evaluate(minus);
    const double fd = (ep.objective - em.objective) / (2 * h);
    const double scale = std::max({1e-8, std::abs(fd), base.gradient.cwiseAbs().maxCoeff()});
    worst = std::max(worst, std::abs(fd - base.gradient(i)) / scale);
    for (Index j = 0; j < p.n_constraints; ++j) {
      const double fdc = (ep.constraints(j) - em.constraints(j)) / (2 * h);
      const double sc = std::max({1e-8, std::abs(fdc), base.jacobian.row(j).cwiseAbs().maxCoeff()});
      worst = std::max(worst, std::abs(fdc - base.jacobian(j, i)) / sc);
    }
  }
  return worst;
}

namespace detail {

/// Augmented Lagrangian (PHR form) for c <= 0 at fixed multipliers and penalty.
struct AugmentedLagrangian {
  const Vector& lambda;
  double rho;

  double value(const NlpEvaluation& e) const {
    double v = e.objective;
    for (Index j = 0; j < lambda.size(); ++j) {
      const double t = std::max(0.0, lambda(j) + rho * e.constraints(j));
      v += (t * t - lambda(j) * lambda(j)) / (2 * rho);
    }
    return v;
  }

  Vector multipliers(const NlpEvaluation& e) const {
    return (lambda + rho * e.constraints).cwiseMax(0.0);
  }

  Vector gradient(const NlpEvaluation& e) const {
    Vector g = e.gradient;
    if (lambda.size() > 0) g += e.jacobian.transpose() * multipliers(e);
    return g;
  }
};

inline Vector project(const ParamBounds& b, const Vector& x) { return x.cwiseMax(b.lower).cwiseMin(b.upper); }

inline double projected_gradient_norm(const ParamBounds& b, const Vector& x, const Vector& g) {
  return (project(b, x - g) - x).cwiseAbs().maxCoeff();
}

inline double max_violation(const Vector& c) { return c.size() ? std::max(0.0, c.maxCoeff()) : 0.0; }

}  // namespace detail

/// Augmented-Lagrangian outer loop over a projected damped-BFGS inner solver
/// for the bound constraints. Deterministic for identical inputs.
inline NlpResult solve_nlp(const NlpProblem& p, const Vector& mu0, const NlpOptions& opt = {}) {
  const ParamBounds& bounds = p.bounds;
  require(mu0.size() == bounds.size(), "initial point has the wrong dimension");
  require(bounds.contains(mu0, 0.0), "initial point lies outside the bounds");
  require(static_cast<bool>(p.evaluate), "problem has no evaluation callback");

  const Index n = mu0.size();
  NlpResult res;
  long evaluations = 0;
  long iterations = 0;
  int consecutive_rejections = 0;

  auto eval = [&](const Vector& x) -> std::optional<NlpEvaluation> {
    ++evaluations;
    try {
      NlpEvaluation e = p.evaluate(x);
      if (!std::isfinite(e.objective) || !e.gradient.allFinite() || !e.constraints.allFinite() ||
          !e.jacobian.allFinite())
        throw DomainError("non-finite model output");
      require(e.gradient.size() == n && e.constraints.size() == p.n_constraints &&
                  (p.n_constraints == 0 || (e.jacobian.rows() == p.n_constraints && e.jacobian.cols() == n)),
              "evaluation returned arrays of the wrong size");
      consecutive_rejections = 0;
      return e;
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& err) {
      ++consecutive_rejections;
      log().debug("evaluation failed at trial point: {}", err.what());
      return std::nullopt;
    }
  };

  Vector x = mu0;
  auto current = eval(x);
  if (!current) throw ConvergenceError("model cannot be evaluated at the initial point");

  if (opt.gradient_check) {
    const double mismatch = gradient_check(p, x);
    evaluations += 1 + 2 * n;
    if (mismatch > 1e-4)
      log().warn("gradient self-check: relative mismatch {:.3e} against central differences at the initial point",
                 mismatch);
  }

  Vector lambda = Vector::Zero(p.n_constraints);
  double rho = opt.initial_penalty;
  double inner_tol = 1e-2;
  double prev_violation = kInf;

  auto kkt_of = [&](const NlpEvaluation& e, const Vector& lam_plus) {
    KktReport k;
    Vector g = e.gradient;
    if (lam_plus.size()) g += e.jacobian.transpose() * lam_plus;
    k.stationarity = detail::projected_gradient_norm(bounds, x, g);
    k.max_violation = detail::max_violation(e.constraints);
    k.complementarity = lam_plus.size() ? lam_plus.cwiseProduct(e.constraints).cwiseAbs().maxCoeff() : 0.0;
    return k;
  };

  KktReport kkt;
  Vector lambda_plus = lambda;
  for (int outer = 0; outer < opt.max_outer; ++outer) {
    const detail::AugmentedLagrangian al{lambda, rho};
    double merit = al.value(*current);
    Vector g = al.gradient(*current);
    Matrix hess = Matrix::Identity(n, n);
    bool scaled = false;

    for (int inner = 0; inner < opt.max_inner; ++inner) {
      if (detail::projected_gradient_norm(bounds, x, g) <= inner_tol) break;
      if (evaluations >= opt.max_evaluations) break;

      // Free variables: not pinned at a bound by the gradient sign.
      std::vector<Index> free;
      for (Index i = 0; i < n; ++i) {
        const bool at_lower = x(i) <= bounds.lower(i) + 1e-12 * (bounds.upper(i) - bounds.lower(i)) && g(i) > 0;
        const bool at_upper = x(i) >= bounds.upper(i) - 1e-12 * (bounds.upper(i) - bounds.lower(i)) && g(i) < 0;
        if (!at_lower && !at_upper) free.push_back(i);
      }
      Vector d = Vector::Zero(n);
      if (!free.empty()) {
        const Index m = static_cast<Index>(free.size());
        Matrix bff(m, m);
        Vector gf(m);
        for (Index a = 0; a < m; ++a) {
          gf(a) = g(free[a]);
          for (Index b = 0; b < m; ++b) bff(a, b) = hess(free[a], free[b]);
        }
        Eigen::LLT<Matrix> llt(bff);
        Vector df = llt.info() == Eigen::Success ? Vector(llt.solve(-gf)) : Vector(-gf);
        for (Index a = 0; a < m; ++a) d(free[a]) = df(a);
      }
      if (!(g.dot(d) < -1e-14 * g.norm() * d.norm())) {
        d = -g;
        hess.setIdentity();
        scaled = false;
      }

      // Projected Armijo backtracking.
      double alpha = 1.0;
      std::optional<NlpEvaluation> trial;
      Vector xt;
      double merit_t = kInf;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        xt = detail::project(bounds, x + alpha * d);
        const Vector step = xt - x;
        if (step.cwiseAbs().maxCoeff() <= 1e-15 * std::max(1.0, x.cwiseAbs().maxCoeff())) break;
        trial = eval(xt);
        if (!trial && consecutive_rejections >= opt.max_rejections) {
          // The model fails arbitrarily close to x along d; stay at x.
          log().debug("line search gave up after {} failed evaluations", consecutive_rejections);
          break;
        }
        if (trial) {
          merit_t = al.value(*trial);
          if (merit_t <= merit + opt.armijo_c1 * g.dot(step)) {
            accepted = true;
            break;
          }
        }
        alpha *= opt.backtrack;
      }
      if (!accepted) {
        if (!hess.isIdentity()) {
          hess.setIdentity();
          scaled = false;
          continue;
        }
        break;
      }

      const Vector s = xt - x;
      const Vector gt = al.gradient(*trial);
      Vector y = gt - g;
      x = xt;
      current = std::move(trial);
      merit = merit_t;
      g = gt;
      ++iterations;

      // Damped BFGS update of the Hessian approximation.
      const double sy = s.dot(y);
      if (!scaled && sy > 0) {
        hess = Matrix::Identity(n, n) * (y.squaredNorm() / sy);
        scaled = true;
      }
      const Vector bs = hess * s;
      const double sbs = s.dot(bs);
      if (sbs > 1e-300) {
        if (sy < 0.2 * sbs) {
          const double theta = 0.8 * sbs / (sbs - sy);
          y = theta * y + (1 - theta) * bs;
        }
        const double sy_d = s.dot(y);
        if (sy_d > 1e-300) hess += y * y.transpose() / sy_d - bs * bs.transpose() / sbs;
      }

      const Vector lam_now = al.multipliers(*current);
      const KktReport k = kkt_of(*current, lam_now);
      res.history.push_back({iterations, outer, current->objective, k.max_violation, k.stationarity, s.norm(),
                             evaluations, merit});
    }

    lambda_plus = detail::AugmentedLagrangian{lambda, rho}.multipliers(*current);
    kkt = kkt_of(*current, lambda_plus);
    log().debug("outer {}: f={:.10g} viol={:.3e} stat={:.3e} comp={:.3e} rho={:.1e}", outer, current->objective,
                kkt.max_violation, kkt.stationarity, kkt.complementarity, rho);
    if (kkt.stationarity <= opt.tolerance && kkt.max_violation <= opt.tolerance &&
        kkt.complementarity <= opt.tolerance) {
      kkt.converged = true;
      break;
    }
    if (evaluations >= opt.max_evaluations) break;

    // Multiplier and penalty updates.
    Vector shifted(p.n_constraints);
    for (Index j = 0; j < p.n_constraints; ++j)
      shifted(j) = std::max(current->constraints(j), -lambda(j) / rho);
    const double violation = shifted.size() ? shifted.cwiseAbs().maxCoeff() : 0.0;
    lambda = lambda_plus.cwiseMin(opt.multiplier_bound);
    if (violation > 0.25 * prev_violation) rho *= opt.penalty_growth;
    prev_violation = violation;
    inner_tol = std::max(0.1 * opt.tolerance, 0.1 * inner_tol);
  }

  kkt.iterations = iterations;
  kkt.evaluations = evaluations;
  res.mu = x;
  res.objective = current->objective;
  res.constraints = current->constraints;
  res.multipliers = lambda_plus;
  res.kkt = kkt;
  if (!kkt.converged)
    log().warn("optimizer stopped without meeting the tolerance (stationarity {:.3e}, violation {:.3e}, "
               "complementarity {:.3e})",
               kkt.stationarity, kkt.max_violation, kkt.complementarity);
  return res;
}

/// iter, outer, f, max_violation, stationarity, step_norm, evaluations, merit
inline void write_nlp_history_csv(std::ostream& os, const std::vector<NlpIteration>& history,
                                  const std::vector<std::string>& comments = {}) {
  CsvWriter csv(os, comments);
  csv.header({"iter", "outer", "f", "max_violation", "stationarity", "step_norm", "evaluations", "merit"});
  for (const auto& h : history)
    csv.row({std::to_string(h.iteration), std::to_string(h.outer), format_real(h.objective),
             format_real(h.max_violation), format_real(h.stationarity), format_real(h.step_norm),
             std::to_string(h.evaluations), format_real(h.merit)});
}

}  // namespace romdb
