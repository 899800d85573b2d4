// Command-line front end: simulate | track | theory | experiment <name> | validate.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "degreeflow/degreeflow.hpp"

namespace {

namespace df = degreeflow;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct CommonFlags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> replications;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> horizon;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--out-dir", f.out_dir, "output directory");
  cmd->add_option("--replications", f.replications, "number of replications");
  cmd->add_option("--workers", f.workers, "replication worker threads");
  cmd->add_option("--horizon", f.horizon, "time steps per replication");
}

/// Defaults for `scenario`, overlaid by the config file, then by flags.
df::RunConfig resolve(const CommonFlags& f, std::optional<std::string> scenario = std::nullopt) {
  std::string name = scenario.value_or("custom");
  if (!scenario && f.config) name = df::load_config(*f.config).scenario;
  df::RunConfig cfg = df::scenario_defaults(name);
  if (f.config) cfg = df::load_config(*f.config, cfg);
  cfg.scenario = name;
  if (f.seed) cfg.seed = *f.seed;
  if (f.out_dir) cfg.out_dir = *f.out_dir;
  if (f.replications) cfg.replications = *f.replications;
  if (f.workers) cfg.workers = *f.workers;
  if (f.horizon) cfg.horizon = *f.horizon;
  return cfg;
}

void log_warnings(const df::RunConfig& cfg) {
  for (const auto& v : df::validate_config(cfg)) {
    if (df::is_warning(v)) spdlog::warn("{}", v.substr(9));
  }
}

void log_report(const df::ScenarioReport& rep) {
  spdlog::info("{}: {} replication(s) in {:.2f} s", rep.name, rep.rows.size(), rep.wall_time_s);
  for (const auto& f : rep.files) spdlog::info("wrote {}", f.string());
  std::cout << rep.summary.dump(2) << '\n';
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("degreeflow");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("DEGREEFLOW_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"; only accept it when asked for.
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
    else spdlog::warn("ignoring unknown DEGREEFLOW_LOG level '{}'", env);
  }
}

int run_theory(const df::RunConfig& cfg, bool matrices) {
  const auto violations = df::validate_config(cfg);
  if (!df::is_runnable(violations)) throw df::ConfigError("invalid config: " + violations.front());
  const std::size_t n0 = cfg.edge_list ? df::read_edge_list(*cfg.edge_list).node_count() : cfg.n0;
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < cfg.p.size(); ++s) {
    const auto sol = df::solve_theory(cfg.p[s], cfg.q[s], n0, cfg.dim_cap);
    out.push_back(df::theory_json(sol));
    if (matrices) {
      std::filesystem::create_directories(cfg.out_dir);
      const std::string tag = cfg.p.size() > 1 ? "_state" + std::to_string(s + 1) : "";
      df::write_matrix_csv(cfg.out_dir / ("L" + tag + ".csv"), "L", sol.generator);
      df::write_matrix_csv(cfg.out_dir / ("B" + tag + ".csv"), "B", sol.transition);
      df::write_matrix_csv(cfg.out_dir / ("Sigma" + tag + ".csv"), "Sigma", sol.cov.sigma);
      df::write_matrix_csv(cfg.out_dir / ("Z" + tag + ".csv"), "Z", sol.cov.fundamental);
      spdlog::info("wrote L, B, Sigma, Z{} to {}", tag, cfg.out_dir.string());
    }
  }
  std::cout << (out.size() == 1 ? out.front() : out).dump(2) << '\n';
  return kOk;
}

int run_simulate(const df::RunConfig& cfg, bool snapshot) {
  log_warnings(cfg);
  const auto rep = df::simulate_scenario(cfg);
  if (snapshot) {
    const auto res = df::simulate_replication(cfg, 0, true);
    const auto path = cfg.out_dir / "simulate_snapshot.txt";
    std::ofstream out(path);
    df::write_snapshot(*res.graph, cfg.horizon, out);
    spdlog::info("wrote {}", path.string());
  }
  log_report(rep);
  return kOk;
}

int run_validate(const df::RunConfig& cfg) {
  const auto violations = df::validate_config(cfg);
  nlohmann::json j = violations;
  std::cout << j.dump() << '\n';
  return df::is_runnable(violations) ? kOk : kConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Markov-modulated duplication-deletion graphs: simulation, theory and tracking"};
  app.require_subcommand(1);

  CommonFlags sim_flags, track_flags, theory_flags, exp_flags, validate_flags;
  bool snapshot = false, matrices = false;
  std::string scenario;

  auto* sim = app.add_subcommand("simulate", "run the graph process and report degree statistics");
  add_common(sim, sim_flags);
  sim->add_flag("--snapshot", snapshot, "also write the final graph of replication 0");

  auto* track = app.add_subcommand("track", "run the degree-distribution tracker");
  add_common(track, track_flags);

  auto* theory = app.add_subcommand("theory", "expected degree distribution, covariance, exponents");
  add_common(theory, theory_flags);
  theory->add_flag("--matrices", matrices, "write L, B, Sigma and Z as CSV into the output directory");

  auto* exp = app.add_subcommand("experiment", "run a named scenario");
  exp->add_option("name", scenario, "example1 | example2 | example3 | example4 | custom")
      ->required()
      ->check(CLI::IsMember({"example1", "example2", "example3", "example4", "custom"}));
  add_common(exp, exp_flags);

  auto* val = app.add_subcommand("validate", "check a config and list violations");
  add_common(val, validate_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*sim) return run_simulate(resolve(sim_flags), snapshot);
    if (*track) {
      const auto cfg = resolve(track_flags);
      log_warnings(cfg);
      log_report(df::track_scenario(cfg));
      return kOk;
    }
    if (*theory) return run_theory(resolve(theory_flags), matrices);
    if (*exp) {
      const auto cfg = resolve(exp_flags, scenario);
      log_warnings(cfg);
      log_report(df::run_scenario(scenario, cfg));
      return kOk;
    }
    if (*val) return run_validate(resolve(validate_flags));
  } catch (const df::ConfigError& e) {
    spdlog::error("{}", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kRuntimeError;
  }
  return kOk;
}
