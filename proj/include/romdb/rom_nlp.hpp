// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "romdb/align_interp.hpp"
#include "romdb/optimizer.hpp"

#include <memory>

namespace romdb {

/// Output q(w, mu) = l^T w + g(mu), g polynomial.
struct LinearOutput {
  Vector weights;
  Polynomial offset;

  double offset_value(const Vector& mu) const { return offset.empty() ? 0.0 : offset.value(mu); }
  Vector offset_gradient(const Vector& mu) const {
    return offset.empty() ? Vector(Vector::Zero(mu.size())) : offset.gradient(mu);
  }

  QuantityOfInterest as_qoi() const {
    QuantityOfInterest q;
    q.eval = [this](const Vector& w, const Vector& mu) { return weights.dot(w) + offset_value(mu); };
    q.partial_w = [this](const Vector&, const Vector&) { return weights; };
    q.partial_mu = [this](const Vector&, const Vector& mu) { return offset_gradient(mu); };
    return q;
  }
};

/// Full-order model, an objective and inequality outputs c_j(w, mu) <= 0.
struct DesignProblem {
  AffineParametricSystem system;
  LinearOutput objective;
  std::vector<LinearOutput> constraints;
  Vector initial_point;

  const ParamBounds& bounds() const { return system.bounds(); }
  Index n_outputs() const { return 1 + static_cast<Index>(constraints.size()); }
  const LinearOutput& output(Index j) const { return j == 0 ? objective : constraints[j - 1]; }
};

/// Outputs and gradients from the full-order model (adjoint gradients, one
/// factorization per point).
inline NlpProblem make_hdm_nlp(std::shared_ptr<const DesignProblem> problem) {
  NlpProblem p;
  p.bounds = problem->bounds();
  p.n_constraints = static_cast<Index>(problem->constraints.size());
  p.evaluate = [problem](const Vector& mu) {
    std::vector<QuantityOfInterest> qois;
    for (Index j = 0; j < problem->n_outputs(); ++j) qois.push_back(problem->output(j).as_qoi());
    const QoiValues v = qoi_gradients_adjoint(problem->system, qois, mu);
    NlpEvaluation e;
    e.objective = v.values(0);
    e.gradient = v.gradients.row(0).transpose();
    e.constraints = v.values.tail(v.values.size() - 1);
    e.jacobian = v.gradients.bottomRows(v.gradients.rows() - 1);
    return e;
  };
  return p;
}

/// Values and parameter gradients of every output from the interpolated
/// reduced model.
struct RomOutputs {
  Vector reduced_state;
  Vector values;     ///< objective first, then constraints
  Matrix gradients;  ///< one row per output
};

/// Online evaluator over a database. Linear outputs are reduced per entry
/// (l_r = Q_c^T V_c^T l) and interpolated with the same cardinal weights as
/// b_r; no full-order solve happens at query time.
class RomModel {
 public:
  RomModel(const RomDatabase& db, std::shared_ptr<const DesignProblem> problem, Index reference = 0,
           RbfTail tail = RbfTail::Auto)
      : problem_(std::move(problem)), interp_(db, reference, tail) {
    require(db.stores_bases(), "reduced outputs need a database that stores its bases");
    require(db.n_params() == problem_->system.n_params(), "database and problem parameter counts differ");
    require(db.full_dimension() == problem_->system.size(), "database and problem state dimensions differ");
    const auto& rot = interp_.aligned().rotations;
    reduced_outputs_.resize(static_cast<std::size_t>(problem_->n_outputs()));
    for (Index j = 0; j < problem_->n_outputs(); ++j)
      for (Index c = 0; c < db.size(); ++c)
        reduced_outputs_[j].push_back(rot[c].transpose() * (db[c].basis.transpose() * problem_->output(j).weights));
    hull_lower_ = db[0].mu;
    hull_upper_ = db[0].mu;
    for (const auto& e : db) {
      hull_lower_ = hull_lower_.cwiseMin(e.mu);
      hull_upper_ = hull_upper_.cwiseMax(e.mu);
    }
  }

  const RomInterpolator& interpolator() const { return interp_; }
  const DesignProblem& problem() const { return *problem_; }

  RomOutputs evaluate(const Vector& mu) const {
    require(mu.size() == interp_.n_params(), "query point has the wrong dimension");
    if (((mu - hull_lower_).minCoeff() < -1e-12 || (hull_upper_ - mu).minCoeff() < -1e-12) && !warned_) {
      warned_ = true;
      log().warn("query point lies outside the sampled parameter range; the reduced model is extrapolating");
    }
    const InterpolatedRom rom = interp_.evaluate(mu, true);
    DenseLu lu(rom.system.matrix, "interpolated reduced system");
    RomOutputs out;
    out.reduced_state = lu.solve(rom.system.rhs);
    const Vector& w_r = out.reduced_state;
    out.values.resize(problem_->n_outputs());
    out.gradients.resize(problem_->n_outputs(), mu.size());
    for (Index j = 0; j < problem_->n_outputs(); ++j) {
      const auto [l_r, dl_r] = interp_.interpolate_vector(reduced_outputs_[j], rom.weights);
      const LinearOutput& q = problem_->output(j);
      out.values(j) = l_r.dot(w_r) + q.offset_value(mu);
      ReducedQoi rq;
      rq.eval = [&](const Vector& w, const Vector& m) { return l_r.dot(w) + q.offset_value(m); };
      rq.partial_w = [&](const Vector&, const Vector&) { return l_r; };
      rq.partial_mu = [&](const Vector& w, const Vector& m) { return Vector(dl_r.transpose() * w + q.offset_gradient(m)); };
      out.gradients.row(j) = reduced_qoi_gradient(rom.system, rom.d_matrix, rom.d_rhs, rq, w_r, mu).transpose();
    }
    return out;
  }

 private:
  std::shared_ptr<const DesignProblem> problem_;
  RomInterpolator interp_;
  std::vector<std::vector<Vector>> reduced_outputs_;
  Vector hull_lower_, hull_upper_;
  mutable bool warned_ = false;
};

inline NlpProblem make_rom_nlp(std::shared_ptr<const RomModel> model) {
  NlpProblem p;
  p.bounds = model->problem().bounds();
  p.n_constraints = static_cast<Index>(model->problem().constraints.size());
  p.evaluate = [model](const Vector& mu) {
    const RomOutputs o = model->evaluate(mu);
    NlpEvaluation e;
    e.objective = o.values(0);
    e.gradient = o.gradients.row(0).transpose();
    e.constraints = o.values.tail(o.values.size() - 1);
    e.jacobian = o.gradients.bottomRows(o.gradients.rows() - 1);
    return e;
  };
  return p;
}

inline NlpProblem make_rom_nlp(const RomDatabase& db, std::shared_ptr<const DesignProblem> problem,
                               Index reference = 0, RbfTail tail = RbfTail::Auto) {
  return make_rom_nlp(std::make_shared<const RomModel>(db, std::move(problem), reference, tail));
}

}  // namespace romdb
