#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "degreeflow/degreeflow.hpp"

using namespace degreeflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("degreeflow_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// File name -> contents for every CSV in `dir`.
std::map<std::string, std::string> csv_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") out[e.path().filename().string()] = slurp(e.path());
  }
  return out;
}

RunConfig small_custom(const fs::path& out) {
  RunConfig c = scenario_defaults("custom");
  c.n0 = 30;
  c.p = {0.4};
  c.q = {0.2};
  c.horizon = 400;
  c.replications = 2;
  c.stride = 10;
  c.out_dir = out;
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DEGREEFLOW_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const fs::path kConfigs = fs::path(DEGREEFLOW_SOURCE_DIR) / "configs";

}  // namespace

TEST(Config, FileOverridesDefaults) {
  const auto cfg = parse_config(R"({"p": 0.3, "N0": 80, "chain": {"M": 1}})", scenario_defaults("example2"));
  EXPECT_EQ(cfg.p, std::vector<double>{0.3});
  EXPECT_EQ(cfg.q, std::vector<double>{0.1});
  EXPECT_EQ(cfg.n0, 80u);
}

TEST(Config, ParseErrorsNameTheLine) {
  try {
    parse_config("{\n  \"p\": 0.4,\n  \"q\": ,\n}");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config(R"({"bogus": 1})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"p": "x"})"), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  const auto a = scenario_defaults("example3");
  const auto b = parse_config(to_json(a).dump());
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Config, ChainGivenAsTransition) {
  const auto cfg = parse_config(R"({"chain": {"A": [[0.9, 0.1], [0.2, 0.8]], "rho": 0.1}, "p": [0.3, 0.4], "q": [0.1, 0.1], "N0": 50})");
  EXPECT_EQ(cfg.m, 2u);
  const auto chain = cfg.chain();
  EXPECT_NEAR(chain.generator()(0, 1), 1.0, 1e-12);
  // rho = 0.1 is not small against 1/N0 = 0.02.
  EXPECT_EQ(validate_config(cfg), std::vector<std::string>{"warning: rho not << 1/N0"});
}

TEST(Validate, SpecExamples) {
  EXPECT_TRUE(validate_config(scenario_defaults("example3")).empty());

  auto bad = scenario_defaults("custom");
  bad.p = {1.2};
  EXPECT_EQ(validate_config(bad), std::vector<std::string>{"p out of range"});

  auto warn = scenario_defaults("custom");
  warn.rho = 0.01;
  warn.n0 = 50;
  const auto v = validate_config(warn);
  EXPECT_EQ(v, std::vector<std::string>{"warning: rho not << 1/N0"});
  EXPECT_TRUE(is_runnable(v));
}

TEST(Validate, ListsEveryProblem) {
  auto c = scenario_defaults("custom");
  c.replications = 0;
  c.epsilon = 2.0;
  c.r = 0.5;
  const auto v = validate_config(c);
  EXPECT_EQ(v.size(), 3u);
  EXPECT_FALSE(is_runnable(v));
  c = scenario_defaults("custom");
  c.n0 = 4;
  c.q = {1.0};
  const auto small = validate_config(c);
  EXPECT_NE(std::find(small.begin(), small.end(), "N0 too small for generator"), small.end());
}

TEST(Aggregates, MatchHandAverage) {
  const auto dir = scratch("aggregate");
  const auto rep = run_scenario("custom", small_custom(dir));
  ASSERT_EQ(rep.rows.size(), 2u);
  for (std::size_t c = 1; c < rep.columns.size(); ++c) {
    const double a = rep.rows[0][c], b = rep.rows[1][c];
    if (std::isnan(a) || std::isnan(b)) continue;
    EXPECT_DOUBLE_EQ(rep.aggregates.mean[c], (a + b) / 2.0) << rep.columns[c];
    EXPECT_NEAR(rep.aggregates.stderr_[c], std::abs(a - b) / 2.0, 1e-12 * (1 + std::abs(a))) << rep.columns[c];
  }
  // The emitted CSV carries the same rows.
  std::ifstream csv(dir / "custom_replications.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header.rfind("replication,", 0), 0u);
}

TEST(Aggregates, IgnoreExecutionOrder) {
  const std::vector<std::vector<double>> rows{{0, 1.0, 4.0}, {1, 2.0, 5.0}, {2, 6.0, 9.0}};
  const std::vector<std::vector<double>> shuffled{rows[2], rows[0], rows[1]};
  const auto a = aggregate_rows(rows), b = aggregate_rows(shuffled);
  for (std::size_t c = 1; c < 3; ++c) {
    EXPECT_NEAR(a.mean[c], b.mean[c], 1e-15);
    EXPECT_NEAR(a.stderr_[c], b.stderr_[c], 1e-15);
  }
}

TEST(Scenarios, Example4AverageDegreeIsMonotone) {
  auto cfg = scenario_defaults("example4");
  cfg.out_dir = scratch("example4");
  const auto rep = run_scenario("example4", cfg);
  for (const auto& [q, ok] : rep.summary["d1_monotone_in_p"].items()) EXPECT_TRUE(ok.get<bool>()) << q;
  EXPECT_TRUE(fs::exists(cfg.out_dir / "example4_grid.csv"));
  EXPECT_TRUE(fs::exists(cfg.out_dir / "example4_d1_vs_p.plt"));
}

TEST(Scenarios, FixedSizeSimulationEmitsPlotData) {
  auto cfg = scenario_defaults("example2");
  cfg.n0 = 50;
  cfg.horizon = 5000;
  cfg.replications = 2;
  cfg.out_dir = scratch("example2");
  const auto rep = run_scenario("example2", cfg);
  EXPECT_TRUE(rep.summary.contains("pooled_tv_to_theory"));
  for (const auto& f : rep.files) EXPECT_TRUE(fs::exists(f)) << f;
  const auto dat = slurp(cfg.out_dir / "example2_degree.dat");
  EXPECT_EQ(dat.rfind("1 ", 0), 0u);
}

TEST(Replay, SameSeedIsByteIdentical) {
  const auto cfg_path = kConfigs / "golden_custom.json";
  const auto base = load_config(cfg_path);
  auto run_into = [&](const std::string& tag, std::uint64_t seed) {
    auto cfg = load_config(cfg_path, scenario_defaults(base.scenario));
    cfg.seed = seed;
    cfg.out_dir = scratch(tag);
    run_scenario(cfg.scenario, cfg);
    return csv_files(cfg.out_dir);
  };
  const auto a = run_into("replay_a", 7), b = run_into("replay_b", 7), c = run_into("replay_c", 8);
  ASSERT_FALSE(a.empty());
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), c.size());
  bool any_diff = false;
  for (const auto& [name, text] : a) {
    ASSERT_TRUE(c.count(name)) << name;
    EXPECT_EQ(text.substr(0, text.find('\n')), c.at(name).substr(0, c.at(name).find('\n'))) << name;
    any_diff = any_diff || text != c.at(name);
  }
  EXPECT_TRUE(any_diff);
}

TEST(Replay, WorkerCountDoesNotChangeOutput) {
  auto one = small_custom(scratch("workers1"));
  auto three = small_custom(scratch("workers3"));
  one.replications = three.replications = 5;
  three.workers = 3;
  run_scenario("custom", one);
  run_scenario("custom", three);
  EXPECT_EQ(csv_files(one.out_dir), csv_files(three.out_dir));
}

TEST(Replay, GoldenMetrics) {
  const auto expected = nlohmann::json::parse(slurp(kConfigs / "golden_custom.expected.json"));
  const auto cfg_path = kConfigs / "golden_custom.json";
  auto cfg = load_config(cfg_path, scenario_defaults(load_config(cfg_path).scenario));
  cfg.out_dir = scratch("golden");
  const auto rep = run_scenario(cfg.scenario, cfg);
  for (const auto& [name, value] : expected["aggregates"].items()) {
    const double want = value.get<double>();
    EXPECT_NEAR(rep.mean(name), want, 1e-9 * std::max(1.0, std::abs(want))) << name;
  }
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  {
    std::ofstream bad(dir / "bad.json");
    bad << R"({"p": 1.2})";
    std::ofstream broken(dir / "broken.json");
    broken << "{\n\"p\": ,\n}";
  }
  EXPECT_EQ(run_cli("validate"), 0);
  EXPECT_EQ(run_cli("validate --config " + (dir / "bad.json").string()), 1);
  EXPECT_EQ(run_cli("validate --config " + (dir / "broken.json").string()), 1);
  EXPECT_EQ(run_cli("experiment nonsense"), 1);
  EXPECT_EQ(run_cli("--no-such-flag"), 1);
  EXPECT_EQ(run_cli("theory --out-dir " + dir.string()), 0);
  EXPECT_EQ(run_cli("track --config " + (kConfigs / "golden_custom.json").string() + " --out-dir " +
                    (dir / "track").string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "track" / "track_rep0.csv"));
}

TEST(Cli, TheoryWritesMatrices) {
  const auto dir = scratch("matrices");
  ASSERT_EQ(run_cli("theory --matrices --out-dir " + dir.string()), 0);
  std::ifstream l(dir / "L.csv");
  std::string header;
  std::getline(l, header);
  EXPECT_EQ(header, "# L 199x199");
  for (const char* m : {"B.csv", "Sigma.csv", "Z.csv"}) EXPECT_TRUE(fs::exists(dir / m)) << m;
}
