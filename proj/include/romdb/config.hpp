// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "romdb/aeroelastic.hpp"
#include "romdb/desk_problems.hpp"
#include "romdb/greedy.hpp"
#include "romdb/system_io.hpp"

#include <boost/crc.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <map>
#include <set>
#include <sstream>

namespace romdb {

/// Everything a batch run needs. Read from `[section] key = value` text;
/// unknown keys are rejected so that typos cannot silently fall back to
/// defaults.
struct RunConfig {
  // [problem]
  std::string problem_type = "diffusion-rod";  ///< diffusion-rod | system
  std::filesystem::path system_path;           ///< for type = system
  std::filesystem::path outputs_path;          ///< optional output weights, one column per output
  DiffusionRodOptions rod;

  // [sampling]
  GreedyOptions greedy;
  std::vector<GreedyStrategy> bench_strategies;
  int levels = 5;          ///< full-factorial levels per axis, N_Xi = levels^N_mu
  int bench_repeats = 5;   ///< seeds per randomized strategy in greedy-bench
  Index basis_dimension = 0;

  // [interpolation]
  Index reference = 0;
  RbfTail tail = RbfTail::Auto;

  // [optimizer]
  NlpOptions optimizer;
  std::optional<Vector> initial_point;
  int multi_start = 1;

  // [aeroelastic]
  SyntheticCoupledOptions coupled;
  Index structural_modes = 4;
  Index fluid_modes = 12;
  int frequency_samples = 5;
  double max_frequency = 2.0;
  int coupled_levels = 3;
  int flutter_queries = 5;

  // [output]
  std::filesystem::path output_dir = "out";

  std::uint64_t seed() const { return greedy.seed; }
  void set_seed(std::uint64_t s) { greedy.seed = s; coupled.seed = s; }

  /// Canonical `section.key=value` listing; the config hash is taken over it.
  std::string canonical() const;
  std::string hash() const;
  void validate() const;
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

inline double parse_real(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("'" + key + "' expects a real number, got '" + text + "'");
  }
}

inline long long parse_integer(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("'" + key + "' expects an integer, got '" + text + "'");
  }
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    if (!text.empty() && text[0] == '-') throw std::invalid_argument(text);
    const unsigned long long v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + text + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + text + "'");
}

inline Vector parse_vector(const std::string& key, const std::string& text) {
  const auto items = split_list(text);
  if (items.empty()) throw ConfigError("'" + key + "' expects a comma-separated list of reals");
  Vector v(static_cast<Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) v(static_cast<Index>(i)) = parse_real(key, items[i]);
  return v;
}

inline std::string vector_text(const Vector& v) {
  std::string s;
  for (Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_real(v(i));
  return s;
}

inline RbfTail parse_tail(const std::string& s) {
  if (s == "auto") return RbfTail::Auto;
  if (s == "linear") return RbfTail::Linear;
  if (s == "constant") return RbfTail::Constant;
  if (s == "none") return RbfTail::None;
  throw ConfigError("unknown RBF tail '" + s + "' (expected auto, linear, constant or none)");
}

inline std::string_view tail_name(RbfTail t) {
  switch (t) {
    case RbfTail::Auto: return "auto";
    case RbfTail::Linear: return "linear";
    case RbfTail::Constant: return "constant";
    case RbfTail::None: return "none";
  }
  return "auto";
}

}  // namespace detail

inline std::string RunConfig::canonical() const {
  using detail::vector_text;
  std::map<std::string, std::string> kv;
  kv["problem.type"] = problem_type;
  kv["problem.path"] = system_path.string();
  kv["problem.outputs"] = outputs_path.string();
  kv["problem.nodes"] = std::to_string(rod.nodes);
  kv["problem.cost_weight"] = format_real(rod.cost_weight);
  kv["problem.probe_position"] = format_real(rod.probe_position);
  kv["problem.max_probe_temperature"] = format_real(rod.max_probe_temperature);
  kv["sampling.strategy"] = std::string(to_string(greedy.strategy));
  std::string strategies;
  for (auto s : bench_strategies) strategies += (strategies.empty() ? "" : ",") + std::string(to_string(s));
  kv["sampling.strategies"] = strategies;
  kv["sampling.levels"] = std::to_string(levels);
  kv["sampling.tolerance"] = format_real(greedy.tolerance);
  kv["sampling.subset_size"] = std::to_string(greedy.subset_size);
  kv["sampling.sanity_size"] = std::to_string(greedy.sanity_size);
  kv["sampling.gamma"] = format_real(greedy.gamma);
  kv["sampling.tau_init"] = format_real(greedy.tau_init);
  kv["sampling.adaptive_tau"] = greedy.adaptive_tau ? "true" : "false";
  kv["sampling.running_max_starts_at_one"] = greedy.running_max_starts_at_one ? "true" : "false";
  kv["sampling.surrogate_initial"] = std::to_string(greedy.surrogate_initial);
  kv["sampling.max_iterations"] = std::to_string(greedy.max_iterations);
  kv["sampling.repeats"] = std::to_string(bench_repeats);
  kv["sampling.basis_dimension"] = std::to_string(basis_dimension);
  kv["sampling.seed"] = std::to_string(greedy.seed);
  kv["interpolation.theta"] = format_real(greedy.theta);
  kv["interpolation.matrix_manifold"] = std::string(to_string(greedy.matrix_kind));
  kv["interpolation.reference"] = std::to_string(reference);
  kv["interpolation.tail"] = std::string(detail::tail_name(tail));
  kv["optimizer.tolerance"] = format_real(optimizer.tolerance);
  kv["optimizer.max_outer"] = std::to_string(optimizer.max_outer);
  kv["optimizer.max_inner"] = std::to_string(optimizer.max_inner);
  kv["optimizer.initial_point"] = initial_point ? vector_text(*initial_point) : "";
  kv["optimizer.multi_start"] = std::to_string(multi_start);
  kv["aeroelastic.structure"] = std::to_string(coupled.structure);
  kv["aeroelastic.fluid"] = std::to_string(coupled.fluid);
  kv["aeroelastic.coupling"] = format_real(coupled.coupling);
  kv["aeroelastic.stiffness_variation"] = format_real(coupled.stiffness_variation);
  kv["aeroelastic.shape_variation"] = format_real(coupled.shape_variation);
  kv["aeroelastic.structural_modes"] = std::to_string(structural_modes);
  kv["aeroelastic.fluid_modes"] = std::to_string(fluid_modes);
  kv["aeroelastic.frequency_samples"] = std::to_string(frequency_samples);
  kv["aeroelastic.max_frequency"] = format_real(max_frequency);
  kv["aeroelastic.levels"] = std::to_string(coupled_levels);
  kv["aeroelastic.queries"] = std::to_string(flutter_queries);
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

inline std::string RunConfig::hash() const {
  const std::string text = canonical();
  boost::crc_32_type crc;
  crc.process_bytes(text.data(), text.size());
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", crc.checksum());
  return buf;
}

inline void RunConfig::validate() const {
  if (problem_type != "diffusion-rod" && problem_type != "system")
    throw ConfigError("[problem] type must be diffusion-rod or system, got '" + problem_type + "'");
  if (problem_type == "system") {
    if (system_path.empty()) throw ConfigError("[problem] path is required when type = system");
    if (!std::filesystem::exists(system_path))
      throw ConfigError("[problem] path does not exist: " + system_path.string());
  }
  if (!outputs_path.empty() && !std::filesystem::exists(outputs_path))
    throw ConfigError("[problem] outputs does not exist: " + outputs_path.string());
  if (rod.nodes < 3) throw ConfigError("[problem] nodes must be at least 3");
  if (levels < 2) throw ConfigError("[sampling] levels must be at least 2");
  if (!(greedy.tolerance > 0)) throw ConfigError("[sampling] tolerance must be positive");
  if (greedy.subset_size < 1) throw ConfigError("[sampling] subset_size must be positive");
  if (greedy.sanity_size < 0) throw ConfigError("[sampling] sanity_size must be non-negative");
  if (!(greedy.gamma >= 1)) throw ConfigError("[sampling] gamma must be at least 1");
  if (!(greedy.tau_init >= 1)) throw ConfigError("[sampling] tau_init must be at least 1");
  if (bench_repeats < 1) throw ConfigError("[sampling] repeats must be positive");
  if (greedy.theta < 0) throw ConfigError("[interpolation] theta must be non-negative (0 selects the default)");
  if (reference < 0) throw ConfigError("[interpolation] reference must be non-negative");
  if (!(optimizer.tolerance > 0)) throw ConfigError("[optimizer] tolerance must be positive");
  if (multi_start < 1) throw ConfigError("[optimizer] multi_start must be positive");
  if (structural_modes < 1 || structural_modes > coupled.structure)
    throw ConfigError("[aeroelastic] structural_modes must lie in [1, structure]");
  if (fluid_modes < 1 || fluid_modes > coupled.fluid)
    throw ConfigError("[aeroelastic] fluid_modes must lie in [1, fluid]");
  if (frequency_samples < 1) throw ConfigError("[aeroelastic] frequency_samples must be positive");
  if (coupled_levels < 2) throw ConfigError("[aeroelastic] levels must be at least 2");
  if (flutter_queries < 1) throw ConfigError("[aeroelastic] queries must be positive");
}

/// Parse config text. Relative paths resolve against `base_dir`.
inline RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  RunConfig c;
  auto path_of = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  using namespace detail;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"problem.type", [&](auto&, auto& v) { c.problem_type = v; }},
      {"problem.path", [&](auto&, auto& v) { c.system_path = path_of(v); }},
      {"problem.outputs", [&](auto&, auto& v) { c.outputs_path = path_of(v); }},
      {"problem.nodes", [&](auto& k, auto& v) { c.rod.nodes = static_cast<int>(parse_integer(k, v)); }},
      {"problem.cost_weight", [&](auto& k, auto& v) { c.rod.cost_weight = parse_real(k, v); }},
      {"problem.probe_position", [&](auto& k, auto& v) { c.rod.probe_position = parse_real(k, v); }},
      {"problem.max_probe_temperature", [&](auto& k, auto& v) { c.rod.max_probe_temperature = parse_real(k, v); }},
      {"sampling.strategy",
       [&](auto&, auto& v) {
         try {
           c.greedy.strategy = parse_greedy_strategy(v);
         } catch (const Error& e) {
           throw ConfigError(e.what());
         }
       }},
      {"sampling.strategies",
       [&](auto&, auto& v) {
         c.bench_strategies.clear();
         for (const auto& s : split_list(v)) {
           try {
             c.bench_strategies.push_back(parse_greedy_strategy(s));
           } catch (const Error& e) {
             throw ConfigError(e.what());
           }
         }
       }},
      {"sampling.levels", [&](auto& k, auto& v) { c.levels = static_cast<int>(parse_integer(k, v)); }},
      {"sampling.tolerance", [&](auto& k, auto& v) { c.greedy.tolerance = parse_real(k, v); }},
      {"sampling.subset_size", [&](auto& k, auto& v) { c.greedy.subset_size = parse_integer(k, v); }},
      {"sampling.sanity_size", [&](auto& k, auto& v) { c.greedy.sanity_size = parse_integer(k, v); }},
      {"sampling.gamma", [&](auto& k, auto& v) { c.greedy.gamma = parse_real(k, v); }},
      {"sampling.tau_init", [&](auto& k, auto& v) { c.greedy.tau_init = parse_real(k, v); }},
      {"sampling.adaptive_tau", [&](auto& k, auto& v) { c.greedy.adaptive_tau = parse_bool(k, v); }},
      {"sampling.running_max_starts_at_one",
       [&](auto& k, auto& v) { c.greedy.running_max_starts_at_one = parse_bool(k, v); }},
      {"sampling.surrogate_initial", [&](auto& k, auto& v) { c.greedy.surrogate_initial = parse_integer(k, v); }},
      {"sampling.max_iterations", [&](auto& k, auto& v) { c.greedy.max_iterations = parse_integer(k, v); }},
      {"sampling.repeats", [&](auto& k, auto& v) { c.bench_repeats = static_cast<int>(parse_integer(k, v)); }},
      {"sampling.basis_dimension", [&](auto& k, auto& v) { c.basis_dimension = parse_integer(k, v); }},
      {"sampling.seed", [&](auto& k, auto& v) { c.set_seed(parse_unsigned(k, v)); }},
      {"interpolation.theta", [&](auto& k, auto& v) { c.greedy.theta = parse_real(k, v); }},
      {"interpolation.matrix_manifold",
       [&](auto&, auto& v) {
         try {
           c.greedy.matrix_kind = parse_manifold_kind(v);
         } catch (const Error& e) {
           throw ConfigError(e.what());
         }
       }},
      {"interpolation.reference", [&](auto& k, auto& v) { c.reference = parse_integer(k, v); }},
      {"interpolation.tail", [&](auto&, auto& v) { c.tail = parse_tail(v); }},
      {"optimizer.tolerance", [&](auto& k, auto& v) { c.optimizer.tolerance = parse_real(k, v); }},
      {"optimizer.max_outer", [&](auto& k, auto& v) { c.optimizer.max_outer = static_cast<int>(parse_integer(k, v)); }},
      {"optimizer.max_inner", [&](auto& k, auto& v) { c.optimizer.max_inner = static_cast<int>(parse_integer(k, v)); }},
      {"optimizer.initial_point", [&](auto& k, auto& v) { c.initial_point = parse_vector(k, v); }},
      {"optimizer.multi_start", [&](auto& k, auto& v) { c.multi_start = static_cast<int>(parse_integer(k, v)); }},
      {"aeroelastic.structure", [&](auto& k, auto& v) { c.coupled.structure = parse_integer(k, v); }},
      {"aeroelastic.fluid", [&](auto& k, auto& v) { c.coupled.fluid = parse_integer(k, v); }},
      {"aeroelastic.coupling", [&](auto& k, auto& v) { c.coupled.coupling = parse_real(k, v); }},
      {"aeroelastic.stiffness_variation", [&](auto& k, auto& v) { c.coupled.stiffness_variation = parse_real(k, v); }},
      {"aeroelastic.shape_variation", [&](auto& k, auto& v) { c.coupled.shape_variation = parse_real(k, v); }},
      {"aeroelastic.structural_modes", [&](auto& k, auto& v) { c.structural_modes = parse_integer(k, v); }},
      {"aeroelastic.fluid_modes", [&](auto& k, auto& v) { c.fluid_modes = parse_integer(k, v); }},
      {"aeroelastic.frequency_samples",
       [&](auto& k, auto& v) { c.frequency_samples = static_cast<int>(parse_integer(k, v)); }},
      {"aeroelastic.max_frequency", [&](auto& k, auto& v) { c.max_frequency = parse_real(k, v); }},
      {"aeroelastic.levels", [&](auto& k, auto& v) { c.coupled_levels = static_cast<int>(parse_integer(k, v)); }},
      {"aeroelastic.queries", [&](auto& k, auto& v) { c.flutter_queries = static_cast<int>(parse_integer(k, v)); }},
      {"output.directory", [&](auto&, auto& v) { c.output_dir = path_of(v); }},
  };
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("key '" + section + "' appears outside of a [section]");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = setters.find(full);
      if (it == setters.end()) throw ConfigError("unknown config key '" + full + "'");
      it->second(full, value.data());
    }
  }
  if (c.bench_strategies.empty()) c.bench_strategies = {c.greedy.strategy};
  c.validate();
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_run_config(in, path.parent_path());
}

/// Problem described by a config: the built-in rod, or a system file with
/// optional linear outputs (first column objective, the rest constraints
/// c(w) <= 0). Without an outputs file the objective is the state mean.
inline DesignProblem make_design_problem(const RunConfig& c) {
  if (c.problem_type == "diffusion-rod") return diffusion_rod_problem(c.rod);
  AffineParametricSystem sys = io::load_system(c.system_path);
  const Index n = sys.size();
  std::vector<LinearOutput> outputs;
  if (!c.outputs_path.empty()) {
    std::ifstream in(c.outputs_path);
    if (!in) throw ConfigError("cannot open outputs file " + c.outputs_path.string());
    const Matrix l = io::read_matrix(in);
    if (l.rows() != n || l.cols() < 1)
      throw ConfigError("outputs file must have one row per state entry and at least one column");
    for (Index j = 0; j < l.cols(); ++j) outputs.push_back({l.col(j), Polynomial()});
  } else {
    outputs.push_back({Vector::Constant(n, 1.0 / static_cast<double>(n)), Polynomial()});
  }
  LinearOutput objective = std::move(outputs.front());
  outputs.erase(outputs.begin());
  Vector start = c.initial_point ? *c.initial_point : sys.bounds().center();
  return DesignProblem{std::move(sys), std::move(objective), std::move(outputs), std::move(start)};
}

inline std::vector<Vector> candidate_grid(const RunConfig& c, const ParamBounds& bounds) {
  return full_factorial(bounds, std::vector<int>(static_cast<std::size_t>(bounds.size()), c.levels));
}

}  // namespace romdb
