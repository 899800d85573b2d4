#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "degreeflow/config.hpp"
#include "degreeflow/graph.hpp"
#include "degreeflow/io.hpp"
#include "degreeflow/theory.hpp"
#include "degreeflow/tracker.hpp"

namespace degreeflow {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Output helpers. Numbers are written in shortest round-trip form so files are
// byte-stable for a given (config, seed).

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
}

/// One "x y" pair per line.
inline void write_dat(const std::filesystem::path& path, const std::vector<double>& xs,
                      const std::vector<double>& ys) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i)
    out << format_number(xs[i]) << ' ' << format_number(ys[i]) << '\n';
}

struct PlotSeries {
  std::string file;  ///< data file name relative to the .plt
  std::string title;
};

/// gnuplot companion: axis labels and one plot clause per series.
inline void write_plt(const std::filesystem::path& path, const std::string& xlabel,
                      const std::string& ylabel, const std::vector<PlotSeries>& series,
                      bool loglog = false) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "set xlabel \"" << xlabel << "\"\n";
  out << "set ylabel \"" << ylabel << "\"\n";
  if (loglog) out << "set logscale xy\n";
  out << "plot ";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << (i ? ", \\\n     " : "") << '"' << series[i].file << "\" using 1:2 with linespoints title \""
        << series[i].title << '"';
  }
  out << '\n';
}

// ---------------------------------------------------------------------------
// Replication fan-out.

/// Runs fn(0..count-1) on up to `workers` threads; results are ordered by index.
template <typename Fn>
auto run_replications(std::size_t count, std::size_t workers, Fn fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}));
  std::vector<std::optional<Result>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Result> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

struct Aggregate {
  std::vector<double> mean;
  std::vector<double> stderr_;  ///< sample sd / sqrt(n); 0 for a single row
};

/// Column-wise mean and standard error; NaN entries are skipped.
inline Aggregate aggregate_rows(const std::vector<std::vector<double>>& rows) {
  Aggregate a;
  if (rows.empty()) return a;
  const std::size_t cols = rows.front().size();
  a.mean.assign(cols, kNaN);
  a.stderr_.assign(cols, kNaN);
  for (std::size_t c = 0; c < cols; ++c) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows) {
      if (!std::isnan(r[c])) {
        sum += r[c];
        ++n;
      }
    }
    if (n == 0) continue;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& r : rows) {
      if (!std::isnan(r[c])) ss += (r[c] - mean) * (r[c] - mean);
    }
    a.mean[c] = mean;
    a.stderr_[c] = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  }
  return a;
}

struct ScenarioReport {
  std::string name;
  std::vector<std::string> columns;          ///< per-replication metric names; first is "replication"
  std::vector<std::vector<double>> rows;     ///< one row per replication
  Aggregate aggregates;
  nlohmann::ordered_json summary;            ///< scenario-level values
  std::vector<std::filesystem::path> files;  ///< emitted files, in emission order
  double wall_time_s = 0.0;

  /// Aggregate mean of a named column.
  double mean(const std::string& column) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == column) return aggregates.mean.at(i);
    }
    throw Error("no column " + column);
  }
};

// ---------------------------------------------------------------------------
// Theta schedule shared by the pipelines: a forced path or the sampled chain.

class ThetaSchedule {
 public:
  ThetaSchedule(ThetaChain chain, std::vector<ForcedJump> forced, std::size_t initial, Rng& rng)
      : chain_(std::move(chain)), forced_(std::move(forced)) {
    if (forced_.empty()) chain_.reset(rng);
    else chain_.set_state(initial);
  }

  /// State at step n; calls must have nondecreasing n.
  std::size_t at(std::size_t n) {
    while (next_ < forced_.size() && forced_[next_].step <= n) chain_.set_state(forced_[next_++].state);
    return chain_.state();
  }

  void advance(Rng& rng) {
    if (forced_.empty()) step_theta(chain_, rng);
  }

 private:
  ThetaChain chain_;
  std::vector<ForcedJump> forced_;
  std::size_t next_ = 0;
};

// ---------------------------------------------------------------------------
// Simulation pipeline (graph only).

struct SimulationResult {
  DegreeDistribution average;  ///< time average after burn-in (fixed size) or final (growing)
  DegreeDistribution final_distribution;
  std::size_t nodes = 0, edges = 0, max_degree = 0;
  double isolated_fraction = 0.0;
  double largest_component = 0.0;
  std::size_t deletions = 0, skipped = 0, samples = 0;
  std::optional<DynamicGraph> graph;  ///< kept for snapshots on request
};

inline SimulationResult simulate_replication(const RunConfig& cfg, std::size_t replication,
                                             bool keep_graph = false) {
  const auto params = cfg.graph_params();
  Rng rng = make_stream(cfg.seed, replication);
  DynamicGraph graph = make_initial_graph(params);
  ThetaSchedule theta(params.chain, cfg.forced_path, cfg.initial_state, rng);
  const bool fixed = cfg.mode == GrowthMode::FixedSize;
  const std::size_t dim = fixed ? truncation_dimension(graph.node_count(), cfg.dim_cap) : 0;
  const std::size_t burn_in = cfg.simulation_burn_in();

  SimulationResult res;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  for (std::size_t n = 0; n < cfg.horizon; ++n) {
    const auto outcome = evolve_step(graph, params, theta.at(n), rng);
    res.deletions += outcome.deleted ? 1 : 0;
    res.skipped += outcome.deletion_skipped ? 1 : 0;
    theta.advance(rng);
    if (fixed && n + 1 >= burn_in && (n + 1) % cfg.stride == 0) {
      acc += empirical_distribution(graph, dim).mass;
      ++res.samples;
    }
  }
  res.final_distribution = fixed ? empirical_distribution(graph, dim) : empirical_distribution(graph);
  res.average = res.samples > 0 ? DegreeDistribution(acc / static_cast<double>(res.samples))
                                : res.final_distribution;
  res.nodes = graph.node_count();
  res.edges = graph.edge_count();
  res.max_degree = graph.max_degree();
  res.isolated_fraction = isolated_fraction(graph);
  res.largest_component = largest_component_fraction(graph);
  if (keep_graph) res.graph = std::move(graph);
  return res;
}

/// Mean of distributions after padding to a common dimension.
inline DegreeDistribution average_distributions(const std::vector<DegreeDistribution>& ds) {
  std::size_t dim = 1;
  for (const auto& d : ds) dim = std::max(dim, d.max_degree());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  for (const auto& d : ds) acc += d.resized(dim).mass;
  return DegreeDistribution(acc / static_cast<double>(std::max<std::size_t>(ds.size(), 1)));
}

/// Per-state theory, or nullopt where the state is degenerate (q = 0 or N0 too small).
inline std::vector<std::optional<TheorySolution>> theory_per_state(const RunConfig& cfg, std::size_t n0) {
  std::vector<std::optional<TheorySolution>> out;
  for (std::size_t s = 0; s < cfg.p.size(); ++s) {
    try {
      out.emplace_back(solve_theory(cfg.p[s], cfg.q[s], n0, cfg.dim_cap));
    } catch (const Error&) {
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

namespace detail {

inline std::filesystem::path prepare_out_dir(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  return cfg.out_dir;
}

inline void finish_report(ScenarioReport& rep, const RunConfig& cfg,
                          std::chrono::steady_clock::time_point start) {
  rep.aggregates = aggregate_rows(rep.rows);
  const auto dir = prepare_out_dir(cfg);
  const auto csv = dir / (rep.name + "_replications.csv");
  write_csv(csv, rep.columns, rep.rows);
  rep.files.insert(rep.files.begin(), csv);

  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  nlohmann::ordered_json j;
  j["scenario"] = rep.name;
  j["seed"] = cfg.seed;
  j["replications"] = cfg.replications;
  nlohmann::ordered_json agg;
  for (std::size_t c = 1; c < rep.columns.size(); ++c) {
    agg[rep.columns[c]] = {{"mean", rep.aggregates.mean[c]}, {"stderr", rep.aggregates.stderr_[c]}};
  }
  j["aggregates"] = agg;
  j["summary"] = rep.summary;
  auto files = nlohmann::ordered_json::array();
  for (const auto& f : rep.files) files.push_back(f.filename().string());
  const auto json_path = dir / (rep.name + "_summary.json");
  files.push_back(json_path.filename().string());
  j["files"] = files;
  j["config"] = to_json(cfg);
  j["wall_time_s"] = rep.wall_time_s;
  std::ofstream out(json_path);
  out << j.dump(2) << '\n';
  rep.files.push_back(json_path);
}

inline std::vector<double> degrees_of(const DegreeDistribution& d, bool nonzero_only) {
  std::vector<double> ks;
  for (std::size_t k = 1; k <= d.max_degree(); ++k) {
    if (!nonzero_only || d.at(k) > 0.0) ks.push_back(static_cast<double>(k));
  }
  return ks;
}

inline std::vector<double> masses_of(const DegreeDistribution& d, bool nonzero_only) {
  std::vector<double> ms;
  for (std::size_t k = 1; k <= d.max_degree(); ++k) {
    if (!nonzero_only || d.at(k) > 0.0) ms.push_back(d.at(k));
  }
  return ms;
}

inline void require_runnable(const RunConfig& cfg) {
  const auto violations = validate_config(cfg);
  if (is_runnable(violations)) return;
  std::string msg = "invalid config:";
  for (const auto& v : violations) {
    if (!is_warning(v)) msg += " [" + v + "]";
  }
  throw ConfigError(msg);
}

}  // namespace detail

namespace detail {

/// Report rows, plot files and summary for simulation results; not yet written out.
inline ScenarioReport simulation_report(const RunConfig& cfg, const std::string& name,
                                        const std::vector<SimulationResult>& results) {
  const bool fixed = cfg.mode == GrowthMode::FixedSize;
  std::vector<DegreeDistribution> avgs;
  for (const auto& r : results) avgs.push_back(r.average);
  const auto pooled = average_distributions(avgs);

  ScenarioReport rep;
  rep.name = name;
  rep.columns = {"replication", "nodes", "edges", "max_degree", "d1", "isolated_fraction",
                 "largest_component", "deletions", "skipped_deletions", "tv_to_theory"};
  std::optional<TheorySolution> th;
  if (fixed && cfg.m == 1) {
    auto per_state = theory_per_state(cfg, results.front().nodes);
    th = per_state.front();
  }
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    rep.rows.push_back({static_cast<double>(i), static_cast<double>(r.nodes), static_cast<double>(r.edges),
                        static_cast<double>(r.max_degree), degree_moments(r.average).d1,
                        r.isolated_fraction, r.largest_component, static_cast<double>(r.deletions),
                        static_cast<double>(r.skipped),
                        th ? total_variation(r.average, th->g_bar) : kNaN});
  }

  const auto dir = prepare_out_dir(cfg);
  const auto dat = dir / (name + "_degree.dat");
  write_dat(dat, degrees_of(pooled, true), masses_of(pooled, true));
  rep.files.push_back(dat);
  std::vector<PlotSeries> series{{dat.filename().string(), "simulated"}};
  if (th) {
    const auto tdat = dir / (name + "_theory.dat");
    write_dat(tdat, degrees_of(th->g_bar, true), masses_of(th->g_bar, true));
    rep.files.push_back(tdat);
    series.push_back({tdat.filename().string(), "expected"});
  }
  const auto plt = dir / (name + "_degree.plt");
  write_plt(plt, "degree", "fraction of nodes", series, true);
  rep.files.push_back(plt);

  rep.summary["mode"] = fixed ? "fixed-size" : "growing";
  rep.summary["pooled_d1"] = degree_moments(pooled).d1;
  if (th) {
    rep.summary["pooled_tv_to_theory"] = total_variation(pooled, th->g_bar);
    rep.summary["theory_d1"] = th->moments.d1;
    rep.summary["theory_lambda"] = th->lambda;
  }
  return rep;
}

}  // namespace detail

/// Graph-only runs: per-replication structure metrics plus the degree distribution.
inline ScenarioReport simulate_scenario(const RunConfig& cfg, const std::string& name = "simulate") {
  detail::require_runnable(cfg);
  const auto start = std::chrono::steady_clock::now();
  const auto results = run_replications(cfg.replications, cfg.workers,
                                        [&](std::size_t i) { return simulate_replication(cfg, i); });
  auto rep = detail::simulation_report(cfg, name, results);
  detail::finish_report(rep, cfg, start);
  return rep;
}

// ---------------------------------------------------------------------------
// Tracking pipeline.

struct TrackingResult {
  TrackingRun run;
  double steady_mse = kNaN;
  double steady_mse_unconditional = kNaN;
  double empirical_trace = kNaN;
};

inline TrackingOptions tracking_options(const RunConfig& cfg) {
  TrackingOptions o;
  o.dim_cap = cfg.dim_cap;
  o.stride = cfg.stride;
  o.warmup = cfg.warmup;
  o.forced_path = cfg.forced_path;
  o.initial_state = cfg.initial_state;
  return o;
}

inline TrackingResult track_replication(const RunConfig& cfg, std::size_t replication) {
  Rng rng = make_stream(cfg.seed, replication);
  TrackingResult res;
  res.run = run_tracking(cfg.graph_params(), cfg.epsilon, cfg.noise, cfg.horizon, rng, tracking_options(cfg));
  const std::size_t burn = cfg.tracking_burn_in();
  const auto& s = res.run.series;
  if (s.length() > burn) {
    double a = 0.0, b = 0.0;
    for (std::size_t n = burn; n < s.length(); ++n) {
      a += s.mse[n];
      b += s.mse_unconditional[n];
    }
    res.steady_mse = a / static_cast<double>(s.length() - burn);
    res.steady_mse_unconditional = b / static_cast<double>(s.length() - burn);
  }
  try {
    res.empirical_trace = scaled_error_covariance(s, burn).trace();
  } catch (const Error&) {
    res.empirical_trace = kNaN;
  }
  return res;
}

/// Occupancy-weighted trace of Sigma(theta) along the realized path after burn-in.
inline double theory_trace_along_path(const std::vector<std::size_t>& path, std::size_t burn,
                                      const std::vector<std::optional<TheorySolution>>& th) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = burn; i < path.size(); ++i) {
    if (!th.at(path[i])) return kNaN;
    acc += th[path[i]]->trace_sigma();
    ++n;
  }
  return n ? acc / static_cast<double>(n) : kNaN;
}

/// Per-step trajectory file: step, theta, g_hat[k], target[k], mse, nu_norm.
inline void write_track_csv(const std::filesystem::path& path, const TrackingRun& run,
                            const std::vector<std::size_t>& degrees) {
  std::vector<std::string> header{"step", "theta"};
  for (auto k : degrees) header.push_back("g_hat_" + std::to_string(k));
  for (auto k : degrees) header.push_back("target_" + std::to_string(k));
  header.emplace_back("mse");
  header.emplace_back("nu_norm");
  std::vector<std::vector<double>> rows;
  rows.reserve(run.trajectory_steps.size());
  for (std::size_t i = 0; i < run.trajectory_steps.size(); ++i) {
    const auto n = run.trajectory_steps[i];
    const auto theta = run.theta_path[n];
    std::vector<double> row{static_cast<double>(n), static_cast<double>(theta + 1)};
    for (auto k : degrees) row.push_back(k <= run.dim ? run.g_hat_trajectory[i](static_cast<Eigen::Index>(k) - 1) : 0.0);
    for (auto k : degrees) row.push_back(run.targets[theta].at(k));
    row.push_back(run.series.mse[n]);
    row.push_back(run.series.nu_norm[n]);
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

inline ScenarioReport track_scenario(const RunConfig& cfg, const std::string& name = "track") {
  detail::require_runnable(cfg);
  if (cfg.mode != GrowthMode::FixedSize) throw ConfigError("tracking requires the fixed-size mode");
  const auto start = std::chrono::steady_clock::now();
  auto results = run_replications(cfg.replications, cfg.workers,
                                  [&](std::size_t i) { return track_replication(cfg, i); });
  const std::size_t n0 = make_initial_graph(cfg.graph_params()).node_count();
  const auto th = theory_per_state(cfg, n0);
  const std::size_t burn = cfg.tracking_burn_in();

  ScenarioReport rep;
  rep.name = name;
  rep.columns = {"replication", "steady_mse", "steady_mse_unconditional", "empirical_trace",
                 "theory_trace", "final_tv", "deletions", "skipped_deletions"};
  const auto dir = detail::prepare_out_dir(cfg);
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const auto last_theta = r.run.theta_path.empty() ? 0 : r.run.theta_path.back();
    rep.rows.push_back({static_cast<double>(i), r.steady_mse, r.steady_mse_unconditional, r.empirical_trace,
                        theory_trace_along_path(r.run.theta_path, burn, th),
                        total_variation(r.run.final_estimate, r.run.targets[last_theta]),
                        static_cast<double>(r.run.deletions), static_cast<double>(r.run.skipped_deletions)});
    const auto csv = dir / (name + "_rep" + std::to_string(i) + ".csv");
    write_track_csv(csv, r.run, cfg.track_degrees);
    rep.files.push_back(csv);
  }

  // Replication-averaged estimate of the first tracked degree against its target.
  if (!cfg.track_degrees.empty() && !results.empty()) {
    const auto k = static_cast<Eigen::Index>(cfg.track_degrees.front()) - 1;
    const auto& first = results.front().run;
    std::vector<double> xs, est, tgt;
    for (std::size_t i = 0; i < first.trajectory_steps.size(); ++i) {
      double acc = 0.0;
      for (const auto& r : results) acc += k < r.run.g_hat_trajectory[i].size() ? r.run.g_hat_trajectory[i](k) : 0.0;
      xs.push_back(static_cast<double>(first.trajectory_steps[i]));
      est.push_back(acc / static_cast<double>(results.size()));
      tgt.push_back(first.targets[first.theta_path[first.trajectory_steps[i]]].at(static_cast<std::size_t>(k) + 1));
    }
    const std::string deg = std::to_string(k + 1);
    const auto e = dir / (name + "_ghat" + deg + ".dat");
    const auto t = dir / (name + "_target" + deg + ".dat");
    write_dat(e, xs, est);
    write_dat(t, xs, tgt);
    const auto plt = dir / (name + "_ghat" + deg + ".plt");
    write_plt(plt, "step n", "estimated mass at degree " + deg,
              {{e.filename().string(), "estimate"}, {t.filename().string(), "expected"}});
    rep.files.insert(rep.files.end(), {e, t, plt});
  }

  rep.summary["epsilon"] = cfg.epsilon;
  rep.summary["burn_in"] = burn;
  auto traces = nlohmann::ordered_json::array();
  for (const auto& s : th) traces.push_back(s ? nlohmann::ordered_json(s->trace_sigma()) : nlohmann::ordered_json());
  rep.summary["theory_trace_per_state"] = traces;
  detail::finish_report(rep, cfg, start);
  return rep;
}

// ---------------------------------------------------------------------------
// Theory pipeline.

inline nlohmann::ordered_json theory_json(const TheorySolution& s) {
  nlohmann::ordered_json j;
  j["p"] = s.p;
  j["q"] = s.q;
  j["N0"] = s.n0;
  j["D"] = s.dim;
  j["g_bar"] = std::vector<double>(s.g_bar.mass.data(), s.g_bar.mass.data() + s.g_bar.mass.size());
  j["d1"] = s.moments.d1;
  j["d2"] = s.moments.d2;
  j["lambda"] = s.lambda;
  j["beta_star"] = s.exponent.beta_star;
  j["beta"] = s.exponent.beta;
  j["trace_sigma"] = s.trace_sigma();
  return j;
}

/// Row-major CSV with a "# <name> DxD" header line.
inline void write_matrix_csv(const std::filesystem::path& path, const std::string& label,
                             const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "# " << label << ' ' << m.rows() << "x" << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_number(m(i, j));
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Named scenarios.

/// Desk-scale defaults for each named scenario.
inline RunConfig scenario_defaults(const std::string& name) {
  RunConfig c;
  c.scenario = name;
  if (name == "example1") {
    c.mode = GrowthMode::Growing;
    c.r = 1.0;
    c.p = {0.5};
    c.q = {0.1};
    c.horizon = 20000;
    c.replications = 5;
  } else if (name == "example2") {
    c.n0 = 200;
    c.p = {0.4};
    c.q = {0.1};
    c.horizon = 100000;
    c.replications = 4;
  } else if (name == "example3") {
    c.n0 = 200;
    c.m = 3;
    c.chain_matrix.resize(3, 3);
    c.chain_matrix << -1, 1, 0, 0, -1, 1, 1, 0, -1;
    c.rho = 1e-4;
    c.pi0 = Eigen::Vector3d(1, 0, 0);
    c.p = {0.05, 0.2, 0.4};
    c.q = {0.05, 0.1, 0.15};
    c.epsilon = 0.01;
    // Jumps at 3000 and 6000 for N0 = 500, scaled by 200/500.
    c.forced_path = {{1200, 1}, {2400, 2}};
    c.horizon = 3600;
    c.warmup = 20000;
    c.replications = 10;
    c.stride = 1;
    c.track_degrees = {3};
  } else if (name == "example4") {
    c.n0 = 200;
    c.p_grid_step = 0.05;
    c.q_grid = {0.05, 0.1, 0.15, 0.2};
  } else if (name != "custom") {
    throw ConfigError("unknown scenario \"" + name + "\"");
  }
  return c;
}

inline ScenarioReport example1_scenario(const RunConfig& cfg) {
  detail::require_runnable(cfg);
  const auto start = std::chrono::steady_clock::now();
  const auto results = run_replications(cfg.replications, cfg.workers,
                                        [&](std::size_t i) { return simulate_replication(cfg, i); });
  auto rep = detail::simulation_report(cfg, "example1", results);
  std::vector<DegreeDistribution> finals;
  for (const auto& r : results) finals.push_back(r.average);
  const auto pooled = average_distributions(finals);

  rep.columns.emplace_back("fit_r_squared");
  rep.columns.emplace_back("fit_beta");
  for (std::size_t i = 0; i < results.size(); ++i) {
    try {
      const auto f = powerlaw_fit(finals[i], cfg.fit_lo, cfg.fit_hi);
      rep.rows[i].push_back(f.r_squared);
      rep.rows[i].push_back(f.beta_hat);
    } catch (const Error&) {
      rep.rows[i].push_back(kNaN);
      rep.rows[i].push_back(kNaN);
    }
  }
  const auto fit = powerlaw_fit(pooled, cfg.fit_lo, cfg.fit_hi);
  const auto ex = powerlaw_exponent(cfg.p.front(), cfg.q.front());
  rep.summary["fit_window"] = {cfg.fit_lo, cfg.fit_hi};
  rep.summary["fit_alpha"] = fit.alpha;
  rep.summary["fit_beta"] = fit.beta_hat;
  rep.summary["fit_r_squared"] = fit.r_squared;
  rep.summary["fit_points"] = fit.points;
  rep.summary["theory_beta_star"] = ex.beta_star;
  rep.summary["theory_beta"] = ex.beta;
  detail::finish_report(rep, cfg, start);
  return rep;
}

/// First step in [from, to) at which |series - target| <= tol * target; nullopt if none.
inline std::optional<std::size_t> first_within(const std::vector<double>& series, std::size_t from,
                                               std::size_t to, double target, double tol) {
  for (std::size_t n = from; n < std::min(to, series.size()); ++n) {
    if (std::abs(series[n] - target) <= tol * target) return n;
  }
  return std::nullopt;
}

inline ScenarioReport example3_scenario(const RunConfig& cfg) {
  detail::require_runnable(cfg);
  const auto start = std::chrono::steady_clock::now();
  auto results = run_replications(cfg.replications, cfg.workers,
                                  [&](std::size_t i) { return track_replication(cfg, i); });
  const auto degree = static_cast<Eigen::Index>(cfg.track_degrees.empty() ? 3 : cfg.track_degrees.front());
  const auto& first = results.front().run;
  const std::size_t steps = first.trajectory_steps.size();
  const std::size_t window = static_cast<std::size_t>(std::ceil(3.0 / cfg.epsilon));

  // Replication-averaged estimate on the kept grid; stride 1 makes index = step.
  std::vector<double> xs(steps), avg(steps, 0.0), target(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    xs[i] = static_cast<double>(first.trajectory_steps[i]);
    for (const auto& r : results) avg[i] += r.run.g_hat_trajectory[i](degree - 1);
    avg[i] /= static_cast<double>(results.size());
    target[i] = first.targets[first.theta_path[first.trajectory_steps[i]]].mass(degree - 1);
  }
  auto delay_after = [&](const std::vector<double>& series, const ForcedJump& jump) {
    const double level = first.targets[jump.state].mass(degree - 1);
    const std::size_t from = jump.step / cfg.stride;
    const auto hit = first_within(series, from, from + window / cfg.stride + 1, level, 0.2);
    return hit ? static_cast<double>(*hit * cfg.stride) - static_cast<double>(jump.step) : kNaN;
  };

  ScenarioReport rep;
  rep.name = "example3";
  rep.columns = {"replication", "steady_mse"};
  for (std::size_t j = 0; j < cfg.forced_path.size(); ++j) rep.columns.push_back("delay_jump" + std::to_string(j + 1));
  for (std::size_t i = 0; i < results.size(); ++i) {
    std::vector<double> own(steps);
    for (std::size_t s = 0; s < steps; ++s) own[s] = results[i].run.g_hat_trajectory[s](degree - 1);
    std::vector<double> row{static_cast<double>(i), results[i].steady_mse};
    for (const auto& jump : cfg.forced_path) row.push_back(delay_after(own, jump));
    rep.rows.push_back(std::move(row));
  }

  // Switched-ODE reference driven by the same theta path, started at the first estimate.
  const auto ode = ode_reference(first.theta_path, first.targets, cfg.epsilon, first.g_hat_trajectory.front());
  std::vector<double> ode_series;
  for (std::size_t i = 0; i < steps; ++i) ode_series.push_back(ode[first.trajectory_steps[i]](degree - 1));

  const auto dir = detail::prepare_out_dir(cfg);
  const std::string deg = std::to_string(degree);
  const auto fe = dir / ("example3_ghat" + deg + ".dat");
  const auto ft = dir / ("example3_target" + deg + ".dat");
  const auto fo = dir / ("example3_ode" + deg + ".dat");
  write_dat(fe, xs, avg);
  write_dat(ft, xs, target);
  write_dat(fo, xs, ode_series);
  const auto plt = dir / ("example3_ghat" + deg + ".plt");
  write_plt(plt, "step n", "mass at degree " + deg,
            {{fe.filename().string(), "estimate (replication mean)"},
             {ft.filename().string(), "expected"},
             {fo.filename().string(), "switched ODE"}});
  rep.files = {fe, ft, fo, plt};

  auto delays = nlohmann::ordered_json::array();
  bool all_within = true;
  for (const auto& jump : cfg.forced_path) {
    const double d = delay_after(avg, jump);
    all_within = all_within && !std::isnan(d);
    delays.push_back(std::isnan(d) ? nlohmann::ordered_json() : nlohmann::ordered_json(d));
  }
  auto levels = nlohmann::ordered_json::array();
  for (const auto& t : first.targets) levels.push_back(t.mass(degree - 1));
  rep.summary["degree"] = degree;
  rep.summary["levels"] = levels;
  rep.summary["window_steps"] = window;
  rep.summary["mean_delays"] = delays;
  rep.summary["all_jumps_within_window"] = all_within;
  detail::finish_report(rep, cfg, start);
  return rep;
}

/// One row of the example-4 grid.
struct GridPoint {
  double p = 0, q = 0, d1 = 0, d2 = 0, lambda = 0, trace_sigma = 0, beta_star = 0, beta = 0,
         min_eigenvalue = 0;
};

inline std::vector<GridPoint> theory_grid(const RunConfig& cfg) {
  std::vector<double> ps;
  const auto count = static_cast<std::size_t>(std::floor(1.0 / cfg.p_grid_step + 1e-9));
  for (std::size_t k = 1; k < count; ++k) ps.push_back(static_cast<double>(k) * cfg.p_grid_step);
  std::vector<std::pair<double, double>> cells;
  for (double q : cfg.q_grid) {
    for (double p : ps) cells.emplace_back(p, q);
  }
  return run_replications(cells.size(), cfg.workers, [&](std::size_t i) {
    const auto [p, q] = cells[i];
    const auto s = solve_theory(p, q, cfg.n0, cfg.dim_cap);
    return GridPoint{p, q, s.moments.d1, s.moments.d2, s.lambda, s.trace_sigma(),
                     s.exponent.beta_star, s.exponent.beta, s.cov.min_eigenvalue};
  });
}

/// Number of adjacent pairs where ys decreases while xs increases (after sorting by x).
inline std::size_t count_inversions(std::vector<std::pair<double, double>> xy) {
  std::sort(xy.begin(), xy.end());
  std::size_t inv = 0;
  for (std::size_t i = 1; i < xy.size(); ++i) inv += xy[i].second < xy[i - 1].second ? 1 : 0;
  return inv;
}

inline ScenarioReport example4_scenario(const RunConfig& cfg) {
  detail::require_runnable(cfg);
  const auto start = std::chrono::steady_clock::now();
  const auto grid = theory_grid(cfg);
  const auto dir = detail::prepare_out_dir(cfg);

  ScenarioReport rep;
  rep.name = "example4";
  std::vector<std::vector<double>> table;
  for (const auto& g : grid) {
    table.push_back({g.p, g.q, g.d1, g.d2, g.lambda, g.d1 / (g.d2 - g.d1), g.trace_sigma, g.beta_star, g.beta,
                     g.min_eigenvalue});
  }
  const auto grid_csv = dir / "example4_grid.csv";
  write_csv(grid_csv, {"p", "q", "d1", "d2", "lambda", "search_ratio", "trace_sigma", "beta_star", "beta", "min_eigenvalue"},
            table);
  rep.files.push_back(grid_csv);

  std::vector<PlotSeries> d1_series, trace_series, search_series;
  auto d1_monotone = nlohmann::ordered_json::object();
  auto trace_inversions = nlohmann::ordered_json::object();
  for (double q : cfg.q_grid) {
    std::vector<double> ps, d1s, traces, ratios;
    std::vector<std::pair<double, double>> pd, dt;
    for (const auto& g : grid) {
      if (g.q != q) continue;
      ps.push_back(g.p);
      d1s.push_back(g.d1);
      traces.push_back(g.trace_sigma);
      ratios.push_back(g.d1 / (g.d2 - g.d1));
      pd.emplace_back(g.p, g.d1);
      dt.emplace_back(g.d1, g.trace_sigma);
    }
    const std::string tag = "q" + format_number(q);
    const auto f1 = dir / ("example4_d1_vs_p_" + tag + ".dat");
    const auto f2 = dir / ("example4_trace_vs_d1_" + tag + ".dat");
    const auto f3 = dir / ("example4_trace_vs_search_" + tag + ".dat");
    write_dat(f1, ps, d1s);
    write_dat(f2, d1s, traces);
    write_dat(f3, ratios, traces);
    rep.files.insert(rep.files.end(), {f1, f2, f3});
    d1_series.push_back({f1.filename().string(), "q = " + format_number(q)});
    trace_series.push_back({f2.filename().string(), "q = " + format_number(q)});
    search_series.push_back({f3.filename().string(), "q = " + format_number(q)});
    d1_monotone[format_number(q)] = count_inversions(pd) == 0;
    trace_inversions[format_number(q)] = count_inversions(dt);
  }
  const auto p1 = dir / "example4_d1_vs_p.plt";
  const auto p2 = dir / "example4_trace_vs_d1.plt";
  const auto p3 = dir / "example4_trace_vs_search.plt";
  write_plt(p1, "connection probability p", "average degree d1", d1_series);
  write_plt(p2, "average degree d1", "trace of Sigma", trace_series);
  write_plt(p3, "d1 / (d2 - d1)", "trace of Sigma", search_series);
  rep.files.insert(rep.files.end(), {p1, p2, p3});

  rep.columns = {"replication", "grid_points"};
  rep.rows.push_back({0.0, static_cast<double>(grid.size())});
  rep.summary["d1_monotone_in_p"] = d1_monotone;
  rep.summary["trace_vs_d1_inversions"] = trace_inversions;
  detail::finish_report(rep, cfg, start);
  return rep;
}

/// Dispatches a named scenario. `custom` tracks in fixed-size mode and simulates otherwise.
inline ScenarioReport run_scenario(const std::string& name, const RunConfig& cfg) {
  if (name == "example1") return example1_scenario(cfg);
  if (name == "example2") return simulate_scenario(cfg, "example2");
  if (name == "example3") return example3_scenario(cfg);
  if (name == "example4") return example4_scenario(cfg);
  if (name == "custom") {
    return cfg.mode == GrowthMode::FixedSize ? track_scenario(cfg, "custom") : simulate_scenario(cfg, "custom");
  }
  throw ConfigError("unknown scenario \"" + name + "\"");
}

/// Reruns the scenario named in a config file with the given seed.
inline ScenarioReport replay(const std::filesystem::path& config_path, std::uint64_t seed) {
  // The scenario named in the file selects the defaults the file is layered on.
  const auto named = load_config(config_path).scenario;
  auto cfg = load_config(config_path, scenario_defaults(named));
  cfg.seed = seed;
  return run_scenario(cfg.scenario, cfg);
}

}  // namespace degreeflow
