// SPDX-License-Identifier: Apache-2.0

#include "romdb/cli.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace romdb;
using namespace romdb::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "romdb");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

/// Small rod configuration that builds in well under a second.
std::string rod_config(const std::string& extra = "") {
  return "[problem]\ntype = diffusion-rod\nnodes = 30\n"
         "[sampling]\nstrategy = saturation\nlevels = 3\ntolerance = 0.05\nsubset_size = 6\nseed = 3\n"
         "[interpolation]\nmatrix_manifold = spd\n"
         "[output]\ndirectory = out\n" +
         extra;
}

/// Rows of a CSV body keyed by the first column, comments skipped.
std::map<std::string, std::vector<std::string>> csv_rows(const std::string& text) {
  std::map<std::string, std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto cells = romdb::detail::split_list(line);
    if (!cells.empty()) rows[cells.front()] = cells;
  }
  return rows;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { write_file(config(), rod_config()); }
  fs::path config() const { return dir_.path() / "run.ini"; }
  fs::path out() const { return dir_.path() / "out"; }
  fs::path db() const { return out() / "database.romdb"; }
  void build() { ASSERT_EQ(invoke({"build-db", "--config", config().string()}).code, cli::kExitOk); }

  TempDir dir_;
};

}  // namespace

TEST(CliUsage, MissingSubcommandAndUnknownOptionsAreUsageErrors) {
  EXPECT_EQ(invoke({}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"build-db", "--no-such-flag"}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"query", "--mu", "0,0,0"}).code, cli::kExitUsage);  // --db is required
  const Outcome help = invoke({"--help"});
  EXPECT_EQ(help.code, cli::kExitOk);
  EXPECT_NE(help.out.find("build-db"), std::string::npos);
}

TEST_F(CliTest, BadConfigValuesAreUsageErrors) {
  write_file(config(), rod_config("[optimizer]\nmulti_strat = 3\n"));
  Outcome o = invoke({"build-db", "--config", config().string()});
  EXPECT_EQ(o.code, cli::kExitUsage);
  EXPECT_NE(o.err.find("multi_strat"), std::string::npos);
  write_file(config(), rod_config("[sampling]\ngamma = 0.5\n"));
  EXPECT_EQ(invoke({"build-db", "--config", config().string()}).code, cli::kExitUsage);
  write_file(config(), "[sampling]\nlevels = three\n");
  EXPECT_EQ(invoke({"build-db", "--config", config().string()}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"build-db", "--config", (dir_.path() / "missing.ini").string()}).code, cli::kExitUsage);
}

TEST_F(CliTest, BuildDbWritesTheDatabaseAndTaggedCsvFiles) {
  const Outcome o = invoke({"build-db", "--config", config().string()});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  EXPECT_NE(o.out.find("converged: yes"), std::string::npos);
  const RomDatabase loaded = load(db());
  EXPECT_GE(loaded.size(), 2);
  EXPECT_EQ(loaded.matrix_kind(), ManifoldKind::Spd);
  const std::string hash = load_run_config(config()).hash();
  for (const char* name : {"greedy_history.csv", "db_entries.csv"}) {
    const std::string text = read_file(out() / name);
    EXPECT_EQ(text.substr(0, text.find('\n')), "# config-hash: " + hash) << name;
  }
}

TEST_F(CliTest, BuildDbIsByteReproducibleForAFixedSeed) {
  build();
  const std::string first = read_file(db());
  const std::string history = read_file(out() / "greedy_history.csv");
  build();
  EXPECT_EQ(read_file(db()), first);
  EXPECT_EQ(read_file(out() / "greedy_history.csv"), history);
  ASSERT_EQ(invoke({"build-db", "--config", config().string(), "--threads", "3"}).code, cli::kExitOk);
  EXPECT_EQ(read_file(db()), first);
}

TEST_F(CliTest, QueryPrintsOutputsAndGradientsWithoutFullSolves) {
  build();
  const Outcome o = invoke({"query", "--config", config().string(), "--db", db().string(), "--mu", "0.1,-0.3,0.4",
                            "--verbose"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  EXPECT_NE(o.out.find("# hdm-solves: 0"), std::string::npos);
  const auto rows = csv_rows(o.out);
  ASSERT_TRUE(rows.count("output"));
  EXPECT_EQ(rows.at("output"), (std::vector<std::string>{"output", "value", "d_mu_1", "d_mu_2", "d_mu_3"}));
  ASSERT_TRUE(rows.count("objective"));
  ASSERT_TRUE(rows.count("constraint_1"));
  ASSERT_TRUE(rows.count("reduced_state_1"));

  // Gradient against central differences of repeated queries.
  const double h = 1e-6;
  const Vector mu = (Vector(3) << 0.1, -0.3, 0.4).finished();
  for (Index i = 0; i < 3; ++i) {
    Vector p = mu, m = mu;
    p(i) += h;
    m(i) -= h;
    auto value_at = [&](const Vector& x) {
      const Outcome q = invoke({"query", "--config", config().string(), "--db", db().string(), "--mu",
                                romdb::detail::vector_text(x)});
      return std::stod(csv_rows(q.out).at("objective").at(1));
    };
    const double fd = (value_at(p) - value_at(m)) / (2 * h);
    const double grad = std::stod(rows.at("objective").at(static_cast<std::size_t>(2 + i)));
    EXPECT_NEAR(grad, fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST_F(CliTest, QueryRejectsMalformedPointsAndCorruptDatabases) {
  build();
  EXPECT_EQ(invoke({"query", "--config", config().string(), "--db", db().string(), "--mu", "0.1,abc,0"}).code,
            cli::kExitUsage);
  EXPECT_EQ(invoke({"query", "--config", config().string(), "--db", db().string(), "--mu", "0.1,0.2"}).code,
            cli::kExitUsage);
  std::string bytes = read_file(db());
  bytes[bytes.size() / 2] ^= 0x5a;
  const fs::path bad = dir_.path() / "bad.romdb";
  std::ofstream(bad, std::ios::binary) << bytes;
  const Outcome o = invoke({"query", "--config", config().string(), "--db", bad.string(), "--mu", "0,0,0"});
  EXPECT_EQ(o.code, cli::kExitUsage);
  EXPECT_NE(o.err.find("checksum"), std::string::npos);
}

TEST_F(CliTest, OptimizeWritesAReportAndHistory) {
  build();
  const Outcome o = invoke({"optimize", "--config", config().string(), "--db", db().string(), "--multi-start", "3"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  const std::string report = read_file(out() / "optimize_report.csv");
  EXPECT_NE(report.find("# rom-hdm-solves: 0"), std::string::npos);
  EXPECT_EQ(std::count(report.begin(), report.end(), '\n'), 2 + 1 + 3);
  EXPECT_TRUE(fs::exists(out() / "optimize_history_rom.csv"));
  EXPECT_EQ(invoke({"optimize", "--config", config().string()}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"optimize", "--config", config().string(), "--baseline", "fom"}).code, cli::kExitUsage);
}

TEST_F(CliTest, GreedyBenchComparesStrategies) {
  std::string text = rod_config();
  text.replace(text.find("strategy = saturation"), 21, "strategies = random, saturation\nrepeats = 2");
  write_file(config(), text);
  const Outcome o = invoke({"greedy-bench", "--config", config().string()});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  const auto rows = csv_rows(o.out);
  ASSERT_TRUE(rows.count("random"));
  ASSERT_TRUE(rows.count("saturation"));
  EXPECT_EQ(rows.at("random").at(1), "27");
  EXPECT_EQ(rows.at("random").at(2), "2");
  EXPECT_TRUE(fs::exists(out() / "greedy_bench.csv"));
  write_file(config(), rod_config());
  EXPECT_EQ(invoke({"greedy-bench", "--config", config().string()}).code, cli::kExitUsage);
}

TEST_F(CliTest, FlutterAnalyzeAtOnePoint) {
  write_file(config(),
             "[aeroelastic]\nstructure = 6\nfluid = 20\nstructural_modes = 3\nfluid_modes = 8\nlevels = 2\n"
             "[output]\ndirectory = out\n");
  const Outcome o = invoke({"flutter-analyze", "--config", config().string(), "--mu", "0.2,0.1,-0.3"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  const std::string eig = read_file(out() / "flutter.csv");
  EXPECT_EQ(std::count(eig.begin(), eig.end(), '\n'), 1 + 1 + 3);
  EXPECT_NE(eig.find("mu_1,mu_2,mu_3,j,lambda_re,lambda_im,zeta"), std::string::npos);
  EXPECT_TRUE(fs::exists(out() / "flutter_sensitivities.csv"));
}

TEST_F(CliTest, SystemFileProblem) {
  Rng rng(1);
  io::save_system(dir_.path() / "sys.txt", random_system(rng, 12, 2, true));
  write_file(config(), "[problem]\ntype = system\npath = sys.txt\n"
                       "[sampling]\nstrategy = classical\nlevels = 3\ntolerance = 1e-3\n"
                       "[interpolation]\nmatrix_manifold = nonsingular\n[output]\ndirectory = out\n");
  const Outcome o = invoke({"build-db", "--config", config().string()});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  const Outcome q = invoke({"query", "--config", config().string(), "--db", db().string(), "--mu", "0,0.5"});
  ASSERT_EQ(q.code, cli::kExitOk) << q.err;
  EXPECT_TRUE(csv_rows(q.out).count("objective"));
  EXPECT_FALSE(csv_rows(q.out).count("constraint_1"));
}

TEST(RunConfig, ParsesSectionsAndResolvesRelativePaths) {
  std::istringstream in("[problem]\ntype = system\npath = data/sys.txt\n[sampling]\nseed = 7\nstrategy = random\n");
  TempDir dir;
  fs::create_directories(dir.path() / "data");
  std::ofstream(dir.path() / "data" / "sys.txt") << "";
  const RunConfig c = parse_run_config(in, dir.path());
  EXPECT_EQ(c.system_path, dir.path() / "data" / "sys.txt");
  EXPECT_EQ(c.seed(), 7u);
  EXPECT_EQ(c.coupled.seed, 7u);
  EXPECT_EQ(c.greedy.strategy, GreedyStrategy::Random);
  EXPECT_EQ(c.bench_strategies, std::vector<GreedyStrategy>{GreedyStrategy::Random});
}

TEST(RunConfig, HashIsStableAndSensitiveToEveryValue) {
  RunConfig a, b;
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 8u);
  b.greedy.tolerance = 0.04;
  EXPECT_NE(a.hash(), b.hash());
  b = a;
  b.set_seed(2);
  EXPECT_NE(a.hash(), b.hash());
}

TEST(RunConfig, RejectsUnknownKeysAndOrphanKeys) {
  std::istringstream unknown("[sampling]\ntolerence = 0.1\n");
  EXPECT_THROW(parse_run_config(unknown), ConfigError);
  std::istringstream orphan("tolerance = 0.1\n");
  EXPECT_THROW(parse_run_config(orphan), ConfigError);
  std::istringstream tail("[interpolation]\ntail = cubic\n");
  EXPECT_THROW(parse_run_config(tail), ConfigError);
}
