// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "romdb/align_interp.hpp"
#include "romdb/csv.hpp"

#include <functional>
#include <ostream>
#include <thread>

namespace romdb {

// ---------------------------------------------------------------------------
// Residual-based error indicator
// ---------------------------------------------------------------------------

/// ||b(mu) - A(mu) V w_r|| / ||b(mu)||
inline double residual_indicator(const AffineParametricSystem& sys, const Vector& mu, const Matrix& basis,
                                 const Vector& w_r) {
  const auto [a, b] = assemble(sys, mu);
  require(basis.rows() == sys.size() && basis.cols() == w_r.size(), "basis and reduced state sizes disagree");
  const double scale = b.norm();
  if (scale == 0.0) throw DomainError("residual indicator undefined for a zero right-hand side");
  return (b - a * (basis * w_r)).norm() / scale;
}

/// Interpolates the reduced model at mu, solves it, and measures the
/// full-order residual with the basis of the nearest database entry (rotated
/// into the aligned reduced coordinates).
inline double error_indicator(const Vector& mu, const RomInterpolator& interp, const RomDatabase& db,
                              const AffineParametricSystem& sys) {
  require(db.stores_bases(), "the residual indicator needs databases that store their bases");
  const Index c = db.nearest(mu);
  const Vector w_r = solve_reduced(interp.evaluate(mu, false).system);
  return residual_indicator(sys, mu, db[c].basis * interp.aligned().rotations[c], w_r);
}

inline double error_indicator(const Vector& mu, const RomDatabase& db, const AffineParametricSystem& sys,
                              Index reference = 0) {
  return error_indicator(mu, RomInterpolator(db, reference), db, sys);
}

// ---------------------------------------------------------------------------
// Greedy construction
// ---------------------------------------------------------------------------

/// Produces the indicator function mu -> rho(mu; DB) for a frozen database.
using IndicatorFactory = std::function<std::function<double(const Vector&)>(const RomDatabase&)>;
/// Builds the local reduced model at mu (full-order solve, basis, projection).
using RomBuilder = std::function<RomEntry(const Vector&)>;

inline IndicatorFactory residual_indicator_factory(const AffineParametricSystem& sys, Index reference = 0) {
  return [&sys, reference](const RomDatabase& db) {
    auto interp = std::make_shared<const RomInterpolator>(db, reference);
    return std::function<double(const Vector&)>(
        [&sys, &db, interp](const Vector& mu) { return error_indicator(mu, *interp, db, sys); });
  };
}

/// Local model from the state and its parameter sensitivities: POD of
/// {w, dw/dmu_1, ..., dw/dmu_N} truncated to k (default N_mu + 1), Galerkin
/// projection, basis stored.
inline RomBuilder pod_rom_builder(const AffineParametricSystem& sys, Index k = 0, bool store_basis = true) {
  return [&sys, k, store_basis](const Vector& mu) {
    const auto [a, b] = assemble(sys, mu);
    DenseLu lu(a, "full-order system");
    const Vector w = lu.solve(b);
    ++hdm_solve_counters().state;
    const Matrix dw = state_sensitivity_direct(sys, mu, w, lu);
    Matrix snapshots(sys.size(), 1 + dw.cols());
    snapshots << w, dw;
    const Index dim = k > 0 ? k : snapshots.cols();
    Matrix v = pod_basis(snapshots, dim);
    ReducedSystem rs = reduce(sys, mu, ReducedBasisPair::galerkin(v));
    return RomEntry{mu, std::move(rs.matrix), std::move(rs.rhs), store_basis ? std::move(v) : Matrix()};
  };
}

enum class GreedyStrategy { Classical, Random, Saturation, Surrogate };

inline std::string_view to_string(GreedyStrategy s) {
  switch (s) {
    case GreedyStrategy::Classical: return "classical";
    case GreedyStrategy::Random: return "random";
    case GreedyStrategy::Saturation: return "saturation";
    case GreedyStrategy::Surrogate: return "surrogate";
  }
  return "?";
}

inline GreedyStrategy parse_greedy_strategy(std::string_view s) {
  if (s == "classical") return GreedyStrategy::Classical;
  if (s == "random") return GreedyStrategy::Random;
  if (s == "saturation") return GreedyStrategy::Saturation;
  if (s == "surrogate") return GreedyStrategy::Surrogate;
  throw ConfigError("unknown greedy strategy '" + std::string(s) +
                    "' (expected classical, random, saturation or surrogate)");
}

struct GreedyOptions {
  GreedyStrategy strategy = GreedyStrategy::Saturation;
  double tolerance = 0.05;
  Index subset_size = 20;          ///< N_Pi
  Index sanity_size = 0;           ///< 0: ceil(2.5 N_Pi)
  double gamma = 1.0;              ///< marginal factor on the saturation estimate
  double tau_init = 1.0;
  bool adaptive_tau = true;        ///< false keeps tau fixed at tau_init
  /// Start each iteration's running maximum at 1 instead of 0. With
  /// indicators below 1 this filters out every candidate; kept for study only.
  bool running_max_starts_at_one = false;
  Index surrogate_initial = 0;     ///< 0: max(N_mu + 1, N_Pi)
  std::uint64_t seed = 0;
  Index max_iterations = 0;        ///< 0: N_Xi
  std::optional<Vector> initial_point;
  int threads = 1;
  double theta = 0.0;
  ManifoldKind matrix_kind = ManifoldKind::Real;

  Index effective_sanity_size() const {
    return sanity_size > 0 ? sanity_size : static_cast<Index>(std::ceil(2.5 * static_cast<double>(subset_size)));
  }
};

struct GreedyIteration {
  Index iteration = 0;      ///< database size when the iteration started
  std::optional<Vector> chosen;
  double max_indicator = 0.0;
  double tau = 1.0;
  long evaluations = 0;
  long skips = 0;
  bool sanity_check = false;
};

struct EntryProvenance {
  Index entry = 0;
  Vector mu;
  Index iteration = 0;
  double indicator = std::numeric_limits<double>::quiet_NaN();
};

struct GreedyResult {
  RomDatabase database;
  std::vector<GreedyIteration> history;
  std::vector<EntryProvenance> provenance;
  long indicator_evaluations = 0;
  long skips = 0;
  bool converged = false;
  double final_max_indicator = kInf;
  std::vector<Index> selected;  ///< candidate indices in insertion order (seed first)
};

/// Greedy database construction over a finite candidate set.
class GreedySampler {
 public:
  GreedySampler(std::vector<Vector> candidates, ParamBounds bounds, IndicatorFactory indicator, RomBuilder builder,
                GreedyOptions options)
      : candidates_(std::move(candidates)),
        bounds_(std::move(bounds)),
        indicator_(std::move(indicator)),
        builder_(std::move(builder)),
        opt_(std::move(options)),
        rng_(opt_.seed) {
    require(!candidates_.empty(), "greedy sampling needs a non-empty candidate set");
    for (const auto& c : candidates_) require(c.size() == bounds_.size(), "candidate has the wrong dimension");
    require(opt_.tolerance > 0, "greedy tolerance must be positive");
    require(opt_.subset_size >= 1, "subset size must be positive");
    require(opt_.gamma >= 1, "marginal factor must be at least 1");
    require(opt_.tau_init >= 1, "initial saturation estimate must be at least 1");
    require(opt_.threads >= 1, "thread count must be positive");
    if (opt_.strategy == GreedyStrategy::Saturation && opt_.running_max_starts_at_one && opt_.tolerance >= 1)
      log().warn("running maximum starts at 1 and the tolerance is >= 1: the evaluation filter is vacuous");
    if (opt_.strategy == GreedyStrategy::Saturation && opt_.running_max_starts_at_one)
      log().warn("running maximum starts at 1: indicators below 1 are only picked up by the sanity check");
  }

  GreedyResult run() {
    reset();
    seed_database();
    switch (opt_.strategy) {
      case GreedyStrategy::Classical:
      case GreedyStrategy::Random:
      case GreedyStrategy::Saturation: run_subset_greedy(); break;
      case GreedyStrategy::Surrogate: run_surrogate(); break;
    }
    return std::move(result_);
  }

 private:
  Index n_candidates() const { return static_cast<Index>(candidates_.size()); }
  Index max_iterations() const { return opt_.max_iterations > 0 ? opt_.max_iterations : n_candidates(); }

  void reset() {
    rng_.seed(opt_.seed);
    result_ = GreedyResult{};
    result_.database = RomDatabase(bounds_, opt_.theta, opt_.matrix_kind);
    in_db_.assign(candidates_.size(), false);
    profile_.assign(candidates_.size(), kInf);
    profile_prev_.assign(candidates_.size(), kInf);
    tau_ = opt_.tau_init;
  }

  Index initial_candidate() const {
    const Vector target = opt_.initial_point ? *opt_.initial_point : bounds_.center();
    Index best = 0;
    double best_d = kInf;
    for (Index c = 0; c < n_candidates(); ++c) {
      const double d = bounds_.normalized_distance(candidates_[c], target);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    return best;
  }

  void seed_database() { append(initial_candidate(), 0, std::numeric_limits<double>::quiet_NaN()); }

  void append(Index candidate, Index iteration, double indicator) {
    result_.database.append(builder_(candidates_[candidate]));
    in_db_[candidate] = true;
    result_.selected.push_back(candidate);
    result_.provenance.push_back({result_.database.size() - 1, candidates_[candidate], iteration, indicator});
    evaluator_ = nullptr;
  }

  const std::function<double(const Vector&)>& evaluator() {
    if (!evaluator_) evaluator_ = indicator_(result_.database);
    return evaluator_;
  }

  std::vector<Index> pool() const {
    std::vector<Index> p;
    for (Index c = 0; c < n_candidates(); ++c)
      if (!in_db_[c]) p.push_back(c);
    return p;
  }

  double distance_to_database(Index c) const {
    double d = kInf;
    for (const auto& e : result_.database) d = std::min(d, bounds_.normalized_distance(e.mu, candidates_[c]));
    return d;
  }

  /// Random subset of at most N_Pi candidates outside the database. The
  /// ceil(N_Pi/2) candidates closest to the database are excluded first, as
  /// far as at least N_Pi candidates remain.
  std::vector<Index> draw_subset() {
    std::vector<Index> p = pool();
    const Index n_pi = opt_.subset_size;
    const Index excess = std::max<Index>(0, static_cast<Index>(p.size()) - n_pi);
    const Index exclude = std::min<Index>((n_pi + 1) / 2, excess);
    if (exclude > 0) {
      std::vector<std::pair<double, Index>> by_distance;
      by_distance.reserve(p.size());
      for (Index c : p) by_distance.emplace_back(distance_to_database(c), c);
      std::stable_sort(by_distance.begin(), by_distance.end());
      p.clear();
      for (std::size_t i = static_cast<std::size_t>(exclude); i < by_distance.size(); ++i)
        p.push_back(by_distance[i].second);
      std::sort(p.begin(), p.end());
    }
    std::shuffle(p.begin(), p.end(), rng_);
    if (static_cast<Index>(p.size()) > n_pi) p.resize(static_cast<std::size_t>(n_pi));
    return p;
  }

  std::vector<Index> draw_sanity_subset() {
    std::vector<Index> p = pool();
    std::shuffle(p.begin(), p.end(), rng_);
    const auto s = static_cast<std::size_t>(opt_.effective_sanity_size());
    if (p.size() > s) p.resize(s);
    return p;
  }

  /// Indicator values for a batch of candidates; deterministic for any thread count.
  std::vector<double> evaluate_all(const std::vector<Index>& batch) {
    const auto& f = evaluator();
    std::vector<double> values(batch.size());
    const int workers = std::min<int>(opt_.threads, static_cast<int>(batch.size()));
    if (workers <= 1) {
      for (std::size_t i = 0; i < batch.size(); ++i) values[i] = f(candidates_[batch[i]]);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(workers);
      for (int t = 0; t < workers; ++t)
        pool.emplace_back([&, t] {
          try {
            for (std::size_t i = t; i < batch.size(); i += workers) values[i] = f(candidates_[batch[i]]);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      for (auto& th : pool) th.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }
    result_.indicator_evaluations += static_cast<long>(batch.size());
    return values;
  }

  double evaluate_one(Index c) {
    ++result_.indicator_evaluations;
    return evaluator()(candidates_[c]);
  }

  /// Index of the largest value; ties go to the lowest candidate index.
  static std::pair<Index, double> argmax(const std::vector<Index>& batch, const std::vector<double>& values) {
    Index best = -1;
    double best_v = -kInf;
    for (std::size_t i = 0; i < batch.size(); ++i)
      if (values[i] > best_v || (values[i] == best_v && batch[i] < best)) {
        best_v = values[i];
        best = batch[i];
      }
    return {best, best_v};
  }

  void record_profile(Index c, double value) {
    profile_prev_[c] = profile_[c];
    profile_[c] = value;
  }

  void finish(bool converged, double final_max) {
    result_.converged = converged;
    result_.final_max_indicator = final_max;
    if (!converged)
      log().warn("{} greedy stopped after {} iterations without reaching tolerance {} (max indicator {:.4e})",
                 to_string(opt_.strategy), result_.history.size(), opt_.tolerance, final_max);
  }

  void run_subset_greedy() {
    const bool classical = opt_.strategy == GreedyStrategy::Classical;
    const bool saturation = opt_.strategy == GreedyStrategy::Saturation;
    double last_max = kInf;
    for (Index it = 0; it < max_iterations(); ++it) {
      GreedyIteration rec;
      rec.iteration = result_.database.size();
      const long evals_before = result_.indicator_evaluations;
      const long skips_before = result_.skips;

      std::vector<Index> subset = classical ? pool() : draw_subset();
      if (subset.empty()) {
        log().info("every candidate is in the database");
        rec.max_indicator = 0.0;
        rec.tau = tau_;
        result_.history.push_back(rec);
        finish(true, 0.0);
        return;
      }

      Index chosen = -1;
      double running_max = 0.0;
      if (saturation) {
        running_max = opt_.running_max_starts_at_one ? 1.0 : 0.0;
        double tau_temp = 0.0;
        for (Index c : subset) {
          const double bound = tau_ * profile_[c];
          if (!(bound > running_max && bound > opt_.tolerance)) {
            ++result_.skips;
            continue;
          }
          const double value = evaluate_one(c);
          record_profile(c, value);
          if (std::isfinite(profile_prev_[c]) && profile_prev_[c] > opt_.tolerance)
            tau_temp = std::max(tau_temp, std::max(1.0, opt_.gamma * value / profile_prev_[c]));
          if (value > running_max || (value == running_max && chosen >= 0 && c < chosen)) {
            running_max = value;
            chosen = c;
          }
        }
        if (opt_.adaptive_tau && tau_temp >= 1.0) tau_ = tau_temp;
      } else {
        const auto values = evaluate_all(subset);
        std::tie(chosen, running_max) = argmax(subset, values);
      }

      double iteration_max = chosen >= 0 ? running_max : 0.0;
      if (iteration_max < opt_.tolerance) {
        if (classical) {
          rec.max_indicator = iteration_max;
          rec.tau = tau_;
          rec.evaluations = result_.indicator_evaluations - evals_before;
          result_.history.push_back(rec);
          finish(true, iteration_max);
          return;
        }
        rec.sanity_check = true;
        const auto sanity = draw_sanity_subset();
        const auto values = evaluate_all(sanity);
        if (saturation)
          for (std::size_t i = 0; i < sanity.size(); ++i) record_profile(sanity[i], values[i]);
        const auto [worst, worst_value] = argmax(sanity, values);
        iteration_max = std::max(iteration_max, worst_value);
        if (worst_value < opt_.tolerance) {
          rec.max_indicator = iteration_max;
          rec.tau = tau_;
          rec.evaluations = result_.indicator_evaluations - evals_before;
          rec.skips = result_.skips - skips_before;
          result_.history.push_back(rec);
          finish(true, iteration_max);
          return;
        }
        chosen = worst;
        running_max = worst_value;
      }

      rec.chosen = candidates_[chosen];
      rec.max_indicator = iteration_max;
      rec.tau = tau_;
      rec.evaluations = result_.indicator_evaluations - evals_before;
      rec.skips = result_.skips - skips_before;
      result_.history.push_back(rec);
      append(chosen, static_cast<Index>(result_.history.size()), running_max);
      last_max = iteration_max;
    }
    finish(false, last_max);
  }

  void run_surrogate() {
    const Index n_init = opt_.surrogate_initial > 0 ? opt_.surrogate_initial
                                                    : std::max<Index>(bounds_.size() + 1, opt_.subset_size);
    require(n_init >= bounds_.size() + 1, "surrogate greedy needs at least N_mu + 1 initial evaluations");

    std::vector<double> logged(candidates_.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<bool> current(candidates_.size(), false);  // evaluated under the present database
    logged[result_.selected.front()] = 0.0;

    {
      std::vector<Index> p = pool();
      std::shuffle(p.begin(), p.end(), rng_);
      if (static_cast<Index>(p.size()) > n_init) p.resize(static_cast<std::size_t>(n_init));
      const auto values = evaluate_all(p);
      for (std::size_t i = 0; i < p.size(); ++i) {
        logged[p[i]] = values[i];
        current[p[i]] = true;
      }
    }

    int consecutive_below = 0;
    double last_max = kInf;
    for (Index it = 0; it < max_iterations(); ++it) {
      GreedyIteration rec;
      rec.iteration = result_.database.size();
      rec.tau = tau_;
      const long evals_before = result_.indicator_evaluations;

      // A candidate already known to violate the tolerance is taken directly.
      Index known_best = -1;
      double known_value = -kInf;
      for (Index c = 0; c < n_candidates(); ++c)
        if (current[c] && !in_db_[c] && logged[c] > known_value) {
          known_value = logged[c];
          known_best = c;
        }

      Index chosen = -1;
      double chosen_value = 0.0;
      if (known_best >= 0 && known_value >= opt_.tolerance) {
        chosen = known_best;
        chosen_value = known_value;
      } else {
        const Index probe = surrogate_probe(logged, current);
        if (probe < 0) {
          rec.max_indicator = std::max(0.0, known_value);
          result_.history.push_back(rec);
          finish(true, rec.max_indicator);
          return;
        }
        const double value = evaluate_one(probe);
        logged[probe] = value;
        current[probe] = true;
        if (value >= opt_.tolerance) {
          chosen = probe;
          chosen_value = value;
        } else if (++consecutive_below >= 2) {
          rec.sanity_check = true;
          const auto sanity = draw_sanity_subset();
          const auto values = evaluate_all(sanity);
          for (std::size_t i = 0; i < sanity.size(); ++i) {
            logged[sanity[i]] = values[i];
            current[sanity[i]] = true;
          }
          const auto [worst, worst_value] = argmax(sanity, values);
          const double seen = std::max({value, known_value, worst_value});
          if (worst_value < opt_.tolerance) {
            rec.max_indicator = seen;
            rec.evaluations = result_.indicator_evaluations - evals_before;
            result_.history.push_back(rec);
            finish(true, seen);
            return;
          }
          chosen = worst;
          chosen_value = worst_value;
        } else {
          rec.max_indicator = std::max(value, known_value);
          rec.evaluations = result_.indicator_evaluations - evals_before;
          result_.history.push_back(rec);
          continue;
        }
      }

      consecutive_below = 0;
      rec.chosen = candidates_[chosen];
      rec.max_indicator = chosen_value;
      rec.evaluations = result_.indicator_evaluations - evals_before;
      result_.history.push_back(rec);
      append(chosen, static_cast<Index>(result_.history.size()), chosen_value);
      logged[chosen] = 0.0;
      std::fill(current.begin(), current.end(), false);
      last_max = chosen_value;
    }
    finish(false, last_max);
  }

  /// Surrogate argmax over candidates not yet evaluated under the present
  /// database; a random such candidate when the surrogate cannot be fitted.
  Index surrogate_probe(const std::vector<double>& logged, const std::vector<bool>& current) {
    std::vector<Index> open;
    for (Index c = 0; c < n_candidates(); ++c)
      if (!in_db_[c] && !current[c]) open.push_back(c);
    if (open.empty()) return -1;

    std::vector<Vector> centers;
    std::vector<double> values;
    for (Index c = 0; c < n_candidates(); ++c)
      if (!std::isnan(logged[c])) {
        centers.push_back(candidates_[c]);
        values.push_back(logged[c]);
      }
    try {
      const auto surrogate =
          rbf_fit(centers, Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size())), bounds_,
                  opt_.theta);
      Index best = -1;
      double best_v = -kInf;
      for (Index c : open) {
        const double v = surrogate.eval(candidates_[c]);
        if (v > best_v) {
          best_v = v;
          best = c;
        }
      }
      return best;
    } catch (const ConditioningError& e) {
      log().warn("error surrogate could not be fitted ({}); probing a random candidate", e.what());
      std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
      return open[pick(rng_)];
    }
  }

  std::vector<Vector> candidates_;
  ParamBounds bounds_;
  IndicatorFactory indicator_;
  RomBuilder builder_;
  GreedyOptions opt_;
  std::mt19937_64 rng_;

  GreedyResult result_;
  std::function<double(const Vector&)> evaluator_;
  std::vector<bool> in_db_;
  std::vector<double> profile_;
  std::vector<double> profile_prev_;
  double tau_ = 1.0;
};

inline GreedyResult run_greedy(const AffineParametricSystem& sys, std::vector<Vector> candidates, GreedyOptions opt,
                               RomBuilder builder = nullptr) {
  if (!builder) builder = pod_rom_builder(sys);
  return GreedySampler(std::move(candidates), sys.bounds(), residual_indicator_factory(sys), std::move(builder),
                       std::move(opt))
      .run();
}

inline GreedyResult classical_greedy(const AffineParametricSystem& sys, std::vector<Vector> candidates,
                                     double tolerance, RomBuilder builder = nullptr) {
  GreedyOptions opt;
  opt.strategy = GreedyStrategy::Classical;
  opt.tolerance = tolerance;
  return run_greedy(sys, std::move(candidates), opt, std::move(builder));
}

inline GreedyResult random_greedy(const AffineParametricSystem& sys, std::vector<Vector> candidates, Index subset_size,
                                  double tolerance, std::uint64_t seed, RomBuilder builder = nullptr) {
  GreedyOptions opt;
  opt.strategy = GreedyStrategy::Random;
  opt.subset_size = subset_size;
  opt.tolerance = tolerance;
  opt.seed = seed;
  return run_greedy(sys, std::move(candidates), opt, std::move(builder));
}

inline GreedyResult saturation_greedy(const AffineParametricSystem& sys, std::vector<Vector> candidates,
                                      Index subset_size, double tolerance, double gamma, double tau_init,
                                      std::uint64_t seed, RomBuilder builder = nullptr) {
  GreedyOptions opt;
  opt.strategy = GreedyStrategy::Saturation;
  opt.subset_size = subset_size;
  opt.tolerance = tolerance;
  opt.gamma = gamma;
  opt.tau_init = tau_init;
  opt.seed = seed;
  return run_greedy(sys, std::move(candidates), opt, std::move(builder));
}

inline GreedyResult surrogate_greedy(const AffineParametricSystem& sys, std::vector<Vector> candidates,
                                     Index initial_evaluations, double tolerance, std::uint64_t seed,
                                     RomBuilder builder = nullptr) {
  GreedyOptions opt;
  opt.strategy = GreedyStrategy::Surrogate;
  opt.surrogate_initial = initial_evaluations;
  opt.tolerance = tolerance;
  opt.seed = seed;
  return run_greedy(sys, std::move(candidates), opt, std::move(builder));
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

/// iteration, mu_1..mu_N (empty when nothing was added), max indicator, tau, evaluations, skips, sanity check
inline void write_history_csv(std::ostream& os, const GreedyResult& r, Index n_params,
                              const std::vector<std::string>& comments = {}) {
  CsvWriter csv(os, comments);
  std::vector<std::string> header{"iteration"};
  for (Index i = 0; i < n_params; ++i) header.push_back("mu_" + std::to_string(i + 1));
  for (const char* h : {"max_indicator", "tau", "evaluations", "skips", "sanity_check"}) header.emplace_back(h);
  csv.header(header);
  for (const auto& rec : r.history) {
    std::vector<std::string> row{std::to_string(rec.iteration)};
    for (Index i = 0; i < n_params; ++i) row.push_back(rec.chosen ? format_real((*rec.chosen)(i)) : "");
    row.push_back(format_real(rec.max_indicator));
    row.push_back(format_real(rec.tau));
    row.push_back(std::to_string(rec.evaluations));
    row.push_back(std::to_string(rec.skips));
    row.push_back(rec.sanity_check ? "1" : "0");
    csv.row(row);
  }
}

/// entry, mu_1..mu_N, iteration added, indicator at selection (nan for the seed entry)
inline void write_provenance_csv(std::ostream& os, const std::vector<EntryProvenance>& provenance, Index n_params,
                                 const std::vector<std::string>& comments = {}) {
  CsvWriter csv(os, comments);
  std::vector<std::string> header{"entry"};
  for (Index i = 0; i < n_params; ++i) header.push_back("mu_" + std::to_string(i + 1));
  header.emplace_back("iteration_added");
  header.emplace_back("indicator_at_selection");
  csv.header(header);
  for (const auto& p : provenance) {
    std::vector<std::string> row{std::to_string(p.entry)};
    for (Index i = 0; i < n_params; ++i) row.push_back(format_real(p.mu(i)));
    row.push_back(std::to_string(p.iteration));
    row.push_back(format_real(p.indicator));
    csv.row(row);
  }
}

}  // namespace romdb
