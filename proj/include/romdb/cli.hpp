// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "romdb/config.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>

namespace romdb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Options shared by every subcommand, after parsing.
struct Invocation {
  std::string command;
  std::string config_path;
  std::string db_path;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string output_dir;
  int multi_start = 0;
  std::string baseline = "rom";
  std::string mu_text;
  bool verbose = false;
};

namespace detail {

inline RunConfig resolve_config(const Invocation& inv) {
  RunConfig c = inv.config_path.empty() ? RunConfig{} : load_run_config(inv.config_path);
  if (inv.config_path.empty()) c.bench_strategies = {c.greedy.strategy};
  if (inv.seed) c.set_seed(*inv.seed);
  if (!inv.output_dir.empty()) c.output_dir = inv.output_dir;
  if (inv.multi_start > 0) c.multi_start = inv.multi_start;
  c.greedy.threads = inv.threads;
  c.validate();
  return c;
}

inline Vector parse_mu(const std::string& text, Index n_params) {
  Vector mu;
  try {
    mu = romdb::detail::parse_vector("--mu", text);
  } catch (const ConfigError&) {
    throw ConfigError("--mu expects " + std::to_string(n_params) + " comma-separated reals, got '" + text + "'");
  }
  if (mu.size() != n_params)
    throw ConfigError("--mu expects " + std::to_string(n_params) + " comma-separated reals, got '" + text + "'");
  return mu;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  return os;
}

inline std::vector<std::string> mu_columns(const std::string& prefix, Index n) {
  std::vector<std::string> h;
  for (Index i = 0; i < n; ++i) h.push_back(prefix + std::to_string(i + 1));
  return h;
}

inline void append_vector(std::vector<std::string>& row, const Vector& v) {
  for (Index i = 0; i < v.size(); ++i) row.push_back(format_real(v(i)));
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::filesystem::path database_path(const Invocation& inv, const RunConfig& c) {
  return inv.db_path.empty() ? c.output_dir / "database.romdb" : std::filesystem::path(inv.db_path);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// build-db
// ---------------------------------------------------------------------------

inline int cmd_build_db(const Invocation& inv, std::ostream& out) {
  const RunConfig c = detail::resolve_config(inv);
  const DesignProblem problem = make_design_problem(c);
  const auto& sys = problem.system;
  auto candidates = candidate_grid(c, sys.bounds());
  const Index n_xi = static_cast<Index>(candidates.size());
  const auto t0 = std::chrono::steady_clock::now();
  GreedySampler sampler(std::move(candidates), sys.bounds(), residual_indicator_factory(sys, c.reference),
                        pod_rom_builder(sys, c.basis_dimension, true), c.greedy);
  const GreedyResult r = sampler.run();
  const double wall = detail::seconds_since(t0);

  const auto db_path = detail::database_path(inv, c);
  if (db_path.has_parent_path()) std::filesystem::create_directories(db_path.parent_path());
  save(r.database, db_path);
  const std::vector<std::string> comments{"config-hash: " + c.hash()};
  {
    auto os = detail::open_output(c.output_dir / "greedy_history.csv");
    write_history_csv(os, r, sys.n_params(), comments);
  }
  {
    auto os = detail::open_output(c.output_dir / "db_entries.csv");
    write_provenance_csv(os, r.provenance, sys.n_params(), comments);
  }
  out << "strategy: " << to_string(c.greedy.strategy) << "\n"
      << "candidates: " << n_xi << "\n"
      << "entries: " << r.database.size() << "\n"
      << "indicator evaluations: " << r.indicator_evaluations << "\n"
      << "skips: " << r.skips << "\n"
      << "final max indicator: " << format_real(r.final_max_indicator) << "\n"
      << "converged: " << (r.converged ? "yes" : "no") << "\n"
      << "database: " << db_path.string() << "\n";
  log().info("build-db finished in {:.3f} s", wall);
  return r.converged ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------------------
// query
// ---------------------------------------------------------------------------

inline int cmd_query(const Invocation& inv, std::ostream& out) {
  const RunConfig c = detail::resolve_config(inv);
  if (inv.db_path.empty()) throw ConfigError("query needs --db");
  auto problem = std::make_shared<const DesignProblem>(make_design_problem(c));
  const RomDatabase db = load(inv.db_path);
  const Vector mu = detail::parse_mu(inv.mu_text, problem->system.n_params());
  if (!problem->bounds().contains(mu))
    log().warn("query point lies outside the parameter bounds; the result is an extrapolation");
  const long before = hdm_solve_counters().total();
  const RomModel model(db, problem, c.reference, c.tail);
  const RomOutputs o = model.evaluate(mu);
  const long hdm_solves = hdm_solve_counters().total() - before;

  std::vector<std::string> comments{"config-hash: " + c.hash()};
  if (inv.verbose) comments.push_back("hdm-solves: " + std::to_string(hdm_solves));
  CsvWriter csv(out, comments);
  std::vector<std::string> header{"output", "value"};
  for (auto& h : detail::mu_columns("d_mu_", mu.size())) header.push_back(h);
  csv.header(header);
  for (Index j = 0; j < o.values.size(); ++j) {
    std::vector<std::string> row{j == 0 ? std::string("objective") : "constraint_" + std::to_string(j),
                                 format_real(o.values(j))};
    detail::append_vector(row, o.gradients.row(j).transpose());
    csv.row(row);
  }
  for (Index i = 0; i < o.reduced_state.size(); ++i) {
    std::vector<std::string> row{"reduced_state_" + std::to_string(i + 1), format_real(o.reduced_state(i))};
    for (Index p = 0; p < mu.size(); ++p) row.emplace_back("");
    csv.row(row);
  }
  if (hdm_solves != 0) throw Error("online query performed full-order solves");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// greedy-bench
// ---------------------------------------------------------------------------

struct BenchRow {
  GreedyStrategy strategy;
  int runs = 0;
  double sampled_hdm = 0.0;
  double indicator_evaluations = 0.0;
  double skips = 0.0;
  double final_max_indicator = 0.0;  ///< worst over runs
  bool converged = true;
  double wall_seconds = 0.0;
};

inline std::vector<BenchRow> run_greedy_bench(const RunConfig& c, const AffineParametricSystem& sys) {
  const auto candidates = candidate_grid(c, sys.bounds());
  std::vector<BenchRow> rows;
  for (const GreedyStrategy s : c.bench_strategies) {
    BenchRow row{s};
    // The classical strategy draws no random numbers; one run is enough.
    row.runs = s == GreedyStrategy::Classical ? 1 : c.bench_repeats;
    const auto t0 = std::chrono::steady_clock::now();
    for (int k = 0; k < row.runs; ++k) {
      GreedyOptions opt = c.greedy;
      opt.strategy = s;
      opt.seed = c.greedy.seed + static_cast<std::uint64_t>(k);
      GreedySampler sampler(candidates, sys.bounds(), residual_indicator_factory(sys, c.reference),
                            pod_rom_builder(sys, c.basis_dimension, true), opt);
      const GreedyResult r = sampler.run();
      row.sampled_hdm += static_cast<double>(r.database.size());
      row.indicator_evaluations += static_cast<double>(r.indicator_evaluations);
      row.skips += static_cast<double>(r.skips);
      row.final_max_indicator = std::max(row.final_max_indicator, r.final_max_indicator);
      row.converged = row.converged && r.converged;
    }
    row.wall_seconds = detail::seconds_since(t0);
    row.sampled_hdm /= row.runs;
    row.indicator_evaluations /= row.runs;
    row.skips /= row.runs;
    rows.push_back(row);
  }
  return rows;
}

inline int cmd_greedy_bench(const Invocation& inv, std::ostream& out) {
  const RunConfig c = detail::resolve_config(inv);
  if (c.bench_strategies.size() < 2)
    throw ConfigError("greedy-bench needs at least two strategies in [sampling] strategies");
  const DesignProblem problem = make_design_problem(c);
  const Index n_xi = static_cast<Index>(candidate_grid(c, problem.bounds()).size());
  const auto rows = run_greedy_bench(c, problem.system);

  std::string wall = "wall-time-s:";
  for (const auto& r : rows) wall += " " + std::string(to_string(r.strategy)) + "=" + format_real(r.wall_seconds);
  auto os = detail::open_output(c.output_dir / "greedy_bench.csv");
  for (std::ostream* s : {static_cast<std::ostream*>(&os), &out}) {
    CsvWriter csv(*s, {"config-hash: " + c.hash(), wall});
    csv.header({"strategy", "n_xi", "runs", "sampled_hdm", "indicator_evaluations", "skips", "final_max_indicator",
                "converged"});
    for (const auto& r : rows)
      csv.row({std::string(to_string(r.strategy)), std::to_string(n_xi), std::to_string(r.runs),
               format_real(r.sampled_hdm), format_real(r.indicator_evaluations), format_real(r.skips),
               format_real(r.final_max_indicator), r.converged ? "1" : "0"});
  }
  const bool all = std::all_of(rows.begin(), rows.end(), [](const BenchRow& r) { return r.converged; });
  return all ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------------

struct StartOutcome {
  std::string path;
  int start = 0;
  Vector mu0;
  std::optional<NlpResult> result;
  std::string failure;
};

inline std::vector<Vector> starting_points(const RunConfig& c, const DesignProblem& problem) {
  if (c.multi_start <= 1) return {c.initial_point ? *c.initial_point : problem.initial_point};
  return latin_hypercube(problem.bounds(), c.multi_start, c.seed());
}

inline std::vector<StartOutcome> optimize_all(const std::string& path, const NlpProblem& nlp,
                                              const std::vector<Vector>& starts, const NlpOptions& opt) {
  std::vector<StartOutcome> out;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    StartOutcome o{path, static_cast<int>(s), starts[s], std::nullopt, ""};
    try {
      o.result = solve_nlp(nlp, starts[s], opt);
    } catch (const ConvergenceError& e) {
      o.failure = e.what();
      log().warn("{} start {} failed: {}", path, s, e.what());
    }
    out.push_back(std::move(o));
  }
  return out;
}

/// Best start: converged first, then lowest objective, then lowest index.
inline std::optional<std::size_t> best_start(const std::vector<StartOutcome>& outcomes) {
  std::optional<std::size_t> best;
  auto key = [&](std::size_t i) {
    const auto& r = *outcomes[i].result;
    return std::make_pair(r.kkt.converged ? 0 : 1, r.objective);
  };
  for (std::size_t i = 0; i < outcomes.size(); ++i)
    if (outcomes[i].result && (!best || key(i) < key(*best))) best = i;
  return best;
}

inline int cmd_optimize(const Invocation& inv, std::ostream& out) {
  const RunConfig c = detail::resolve_config(inv);
  if (inv.baseline != "rom" && inv.baseline != "hdm") throw ConfigError("--baseline must be rom or hdm");
  const bool want_hdm = inv.baseline == "hdm";
  if (inv.db_path.empty() && !want_hdm) throw ConfigError("optimize needs --db (or --baseline hdm)");
  auto problem = std::make_shared<const DesignProblem>(make_design_problem(c));
  const auto starts = starting_points(c, *problem);
  const Index n = problem->system.n_params();
  const Index n_c = static_cast<Index>(problem->constraints.size());

  std::vector<std::vector<StartOutcome>> paths;
  long rom_hdm_solves = 0;
  if (!inv.db_path.empty()) {
    const RomDatabase db = load(inv.db_path);
    const long before = hdm_solve_counters().total();
    paths.push_back(optimize_all("rom", make_rom_nlp(db, problem, c.reference, c.tail), starts, c.optimizer));
    rom_hdm_solves = hdm_solve_counters().total() - before;
  }
  if (want_hdm) paths.push_back(optimize_all("hdm", make_hdm_nlp(problem), starts, c.optimizer));

  std::vector<std::string> comments{"config-hash: " + c.hash()};
  if (!inv.db_path.empty()) comments.push_back("rom-hdm-solves: " + std::to_string(rom_hdm_solves));
  auto os = detail::open_output(c.output_dir / "optimize_report.csv");
  CsvWriter csv(os, comments);
  std::vector<std::string> header{"path", "start"};
  for (auto& h : detail::mu_columns("mu0_", n)) header.push_back(h);
  for (auto& h : detail::mu_columns("mu_", n)) header.push_back(h);
  header.emplace_back("f");
  for (auto& h : detail::mu_columns("c_", n_c)) header.push_back(h);
  for (const char* h : {"stationarity", "max_violation", "complementarity", "iterations", "evaluations", "converged",
                        "best"})
    header.emplace_back(h);
  csv.header(header);

  bool primary_converged = false;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const auto& outcomes = paths[p];
    const auto best = best_start(outcomes);
    for (std::size_t s = 0; s < outcomes.size(); ++s) {
      const auto& o = outcomes[s];
      std::vector<std::string> row{o.path, std::to_string(o.start)};
      detail::append_vector(row, o.mu0);
      if (o.result) {
        const auto& r = *o.result;
        detail::append_vector(row, r.mu);
        row.push_back(format_real(r.objective));
        detail::append_vector(row, r.constraints);
        row.push_back(format_real(r.kkt.stationarity));
        row.push_back(format_real(r.kkt.max_violation));
        row.push_back(format_real(r.kkt.complementarity));
        row.push_back(std::to_string(r.kkt.iterations));
        row.push_back(std::to_string(r.kkt.evaluations));
        row.push_back(r.kkt.converged ? "1" : "0");
      } else {
        for (Index i = 0; i < 2 * n + 1 + n_c + 3; ++i) row.emplace_back("nan");
        row.emplace_back("0");
        row.emplace_back("0");
        row.emplace_back("0");
      }
      row.push_back(best && *best == s ? "1" : "0");
      csv.row(row);
    }
    if (!best) {
      out << outcomes.front().path << ": every start failed\n";
      continue;
    }
    const auto& r = *outcomes[*best].result;
    if (p == 0) primary_converged = r.kkt.converged;
    auto hist = detail::open_output(c.output_dir / ("optimize_history_" + outcomes.front().path + ".csv"));
    write_nlp_history_csv(hist, r.history, {"config-hash: " + c.hash()});
    out << outcomes.front().path << ": best start " << *best << ", f = " << format_real(r.objective) << ", mu =";
    for (Index i = 0; i < n; ++i) out << " " << format_real(r.mu(i));
    out << ", stationarity " << format_real(r.kkt.stationarity) << ", violation " << format_real(r.kkt.max_violation)
        << (r.kkt.converged ? ", converged" : ", NOT converged") << "\n";
  }
  if (paths.size() == 2) {
    const auto a = best_start(paths[0]), b = best_start(paths[1]);
    if (a && b) {
      const auto& ra = *paths[0][*a].result;
      const auto& rb = *paths[1][*b].result;
      out << "objective relative difference: "
          << format_real(std::abs(ra.objective - rb.objective) / std::max(std::abs(rb.objective), 1e-300)) << "\n"
          << "normalized mu distance: " << format_real(problem->bounds().normalized_distance(ra.mu, rb.mu)) << "\n";
    }
  }
  return primary_converged ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------------------
// flutter-analyze
// ---------------------------------------------------------------------------

inline CoupledRomInterpolator build_coupled_database(const RunConfig& c, const CoupledFom& fom) {
  const Vector freqs = default_sampling_frequencies(c.frequency_samples, c.max_frequency);
  std::vector<CoupledRomSample> samples;
  for (const Vector& mu : full_factorial(fom.bounds, std::vector<int>(3, c.coupled_levels))) {
    auto b = build_coupled_rom(fom, mu, c.structural_modes, c.fluid_modes, freqs);
    samples.push_back({mu, std::move(b.rom), std::move(b.structural_basis)});
  }
  return CoupledRomInterpolator(std::move(samples), fom.bounds, c.greedy.theta, c.reference);
}

inline int cmd_flutter_analyze(const Invocation& inv, std::ostream& out) {
  const RunConfig c = detail::resolve_config(inv);
  const CoupledFom fom = synthetic_coupled_fom(c.coupled);
  const CoupledRomInterpolator interp = build_coupled_database(c, fom);
  const std::vector<Vector> queries = inv.mu_text.empty()
                                          ? latin_hypercube(fom.bounds, c.flutter_queries, c.seed())
                                          : std::vector<Vector>{detail::parse_mu(inv.mu_text, 3)};
  const std::vector<std::string> comments{"config-hash: " + c.hash()};
  auto eig_os = detail::open_output(c.output_dir / "flutter.csv");
  auto sens_os = detail::open_output(c.output_dir / "flutter_sensitivities.csv");
  CsvWriter eig_csv(eig_os, comments), sens_csv(sens_os, comments);
  std::vector<std::string> h = detail::mu_columns("mu_", 3);
  std::vector<std::string> hs = h;
  for (const char* x : {"j", "lambda_re", "lambda_im", "zeta"}) h.emplace_back(x);
  hs.emplace_back("j");
  for (auto& x : detail::mu_columns("dzeta_dmu_", 3)) hs.push_back(x);
  eig_csv.header(h);
  sens_csv.header(hs);
  double min_zeta = kInf;
  for (const Vector& mu : queries) {
    const auto ev = interp.at(mu);
    std::vector<Complex> guesses;
    for (const Complex& g : undamped_guesses(ev.omega2()))
      if (g.imag() > 0) guesses.push_back(g);
    const auto eigs = solve_structural_eigs(ev, guesses);
    for (std::size_t j = 0; j < eigs.size(); ++j) {
      const auto& e = eigs[j];
      std::vector<std::string> row;
      detail::append_vector(row, mu);
      row.push_back(std::to_string(j + 1));
      row.push_back(format_real(e.lambda.real()));
      row.push_back(format_real(e.lambda.imag()));
      row.push_back(format_real(e.zeta));
      eig_csv.row(row);
      std::vector<std::string> srow;
      detail::append_vector(srow, mu);
      srow.push_back(std::to_string(j + 1));
      try {
        const auto s = damping_sensitivities(e, ev.d_ns_dmu(e.lambda), ev.d_ns_dlambda(e.lambda));
        detail::append_vector(srow, s.d_zeta);
      } catch (const DomainError& err) {
        log().warn("mode {} at query {}: {}", j + 1, romdb::detail::vector_text(mu), err.what());
        for (int i = 0; i < 3; ++i) srow.emplace_back("nan");
      }
      sens_csv.row(srow);
      min_zeta = std::min(min_zeta, e.zeta);
    }
  }
  out << "queries: " << queries.size() << "\n"
      << "database entries: " << interp.aligned_roms().size() << "\n"
      << "minimum damping ratio: " << format_real(min_zeta) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Runs the command line; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Reduced-order model databases: sampling, interpolation and ROM-based design"};
  app.require_subcommand(1);
  Invocation inv;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", inv.config_path, "run configuration (INI)")->check(CLI::ExistingFile);
    sub->add_option("--seed", inv.seed, "override the configured seed");
    sub->add_option("--threads", inv.threads, "worker cap")->check(CLI::PositiveNumber);
    sub->add_option("--output", inv.output_dir, "output directory");
    sub->add_flag("--verbose", inv.verbose, "debug logging");
  };
  auto* build = app.add_subcommand("build-db", "offline phase: greedy sampling into a database file");
  common(build);
  build->add_option("--db", inv.db_path, "database file to write");
  auto* query = app.add_subcommand("query", "online phase: interpolated ROM outputs and gradients at one point");
  common(query);
  query->add_option("--db", inv.db_path, "database file")->required()->check(CLI::ExistingFile);
  query->add_option("--mu", inv.mu_text, "query point, comma-separated")->required();
  auto* bench = app.add_subcommand("greedy-bench", "compare greedy strategies");
  common(bench);
  auto* optimize = app.add_subcommand("optimize", "ROM-database design optimization");
  common(optimize);
  optimize->add_option("--db", inv.db_path, "database file")->check(CLI::ExistingFile);
  optimize->add_option("--multi-start", inv.multi_start, "number of starting points")->check(CLI::PositiveNumber);
  optimize->add_option("--baseline", inv.baseline, "rom, or hdm to also optimize the full model")
      ->check(CLI::IsMember({"rom", "hdm"}));
  auto* flutter = app.add_subcommand("flutter-analyze", "damping ratios of the synthetic coupled model");
  common(flutter);
  flutter->add_option("--mu", inv.mu_text, "single query point instead of the configured sample");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }
  const auto& subs = app.get_subcommands();
  inv.command = subs.front()->get_name();
  log().set_level(inv.verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    if (inv.command == "build-db") return cmd_build_db(inv, out);
    if (inv.command == "query") return cmd_query(inv, out);
    if (inv.command == "greedy-bench") return cmd_greedy_bench(inv, out);
    if (inv.command == "optimize") return cmd_optimize(inv, out);
    return cmd_flutter_analyze(inv, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n" << subs.front()->help();
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "bad input file: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace romdb::cli
