#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "degreeflow/chain.hpp"
#include "degreeflow/error.hpp"
#include "degreeflow/model.hpp"
#include "degreeflow/theory.hpp"
#include "degreeflow/tracker.hpp"

namespace degreeflow {

/// Everything a run needs. JSON field names are given next to each member.
struct RunConfig {
  std::string scenario = "custom";                  // "scenario"
  GrowthMode mode = GrowthMode::FixedSize;          // "mode": "fixed-size" | "growing"
  std::size_t n0 = 200;                             // "N0"
  std::optional<std::filesystem::path> edge_list;   // "G0"

  // "chain": {"M", "Q" or "A", "rho", "pi0"}
  std::size_t m = 1;
  Eigen::MatrixXd chain_matrix = Eigen::MatrixXd::Zero(1, 1);
  bool chain_is_transition = false;
  double rho = 0.0;
  Eigen::VectorXd pi0 = Eigen::VectorXd::Ones(1);

  std::vector<double> p{0.4};                       // "p": number or per-state array
  std::vector<double> q{0.1};                       // "q"
  double r = 0.0;                                   // "r"
  DeletionRule deletion = DeletionRule::Uniform;    // "deletion": "uniform" | "protected"

  double epsilon = 0.01;                            // "epsilon"
  NoiseModel noise;                                 // "noise": {"kind", "intensity"}
  std::size_t horizon = 100000;                     // "horizon"
  std::size_t replications = 1;                     // "replications"
  std::uint64_t seed = 1;                           // "seed"
  std::filesystem::path out_dir = "out";            // "out_dir"
  std::size_t stride = 100;                         // "stride"
  std::size_t dim_cap = kDefaultDegreeCap;          // "d_max_cap"
  std::size_t workers = 1;                          // "workers"
  std::size_t warmup = 0;                           // "warmup": graph steps before tracking starts
  std::optional<std::size_t> burn_in;               // "burn_in": default 5/eps (tracking), horizon/5 (simulation)
  std::vector<ForcedJump> forced_path;              // "forced_path": [{"step", "state"}], states 1-based
  std::size_t initial_state = 0;                    // "initial_state", 1-based in JSON
  std::vector<std::size_t> track_degrees{1, 2, 3};  // "track_degrees"
  std::size_t fit_lo = 3, fit_hi = 30;              // "fit_window": [lo, hi]
  double p_grid_step = 0.05;                        // "p_grid_step"
  std::vector<double> q_grid{0.05, 0.1, 0.15, 0.2}; // "q_grid"

  ThetaChain chain() const {
    if (chain_is_transition) return ThetaChain::from_transition(chain_matrix, rho, pi0);
    return ThetaChain::from_generator(chain_matrix, rho, pi0);
  }

  GraphParams graph_params() const {
    GraphParams gp;
    gp.mode = mode;
    gp.chain = chain();
    gp.r = r;
    gp.p = p;
    gp.q = q;
    gp.initial.size = n0;
    gp.initial.edge_list = edge_list;
    gp.deletion = deletion;
    return gp;
  }

  std::size_t tracking_burn_in() const {
    return burn_in ? *burn_in : static_cast<std::size_t>(std::ceil(5.0 / epsilon));
  }
  std::size_t simulation_burn_in() const { return burn_in ? *burn_in : horizon / 5; }
};

namespace detail {

inline std::size_t line_of_offset(const std::string& text, std::size_t byte) {
  const auto end = std::min(byte, text.size());
  std::size_t line = 1;
  for (std::size_t i = 0; i < end; ++i) line += text[i] == '\n' ? 1 : 0;
  return line;
}

inline std::vector<double> number_or_array(const nlohmann::json& v) {
  if (v.is_number()) return {v.get<double>()};
  return v.get<std::vector<double>>();
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& v) {
  const auto rows = v.get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw ConfigError("chain matrix is empty");
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (rows[static_cast<std::size_t>(i)].size() != rows.size())
      throw ConfigError("chain matrix must be square");
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return out;
}

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

inline void apply_chain(RunConfig& cfg, const nlohmann::json& c) {
  for (const auto& [key, _] : c.items()) {
    if (key != "M" && key != "Q" && key != "A" && key != "rho" && key != "pi0")
      throw ConfigError("unknown chain field \"" + key + "\"");
  }
  if (c.contains("Q") && c.contains("A")) throw ConfigError("chain: give either Q or A, not both");
  if (c.contains("rho")) cfg.rho = c.at("rho").get<double>();
  if (c.contains("Q")) {
    cfg.chain_matrix = matrix_from_json(c.at("Q"));
    cfg.chain_is_transition = false;
  } else if (c.contains("A")) {
    cfg.chain_matrix = matrix_from_json(c.at("A"));
    cfg.chain_is_transition = true;
  }
  cfg.m = c.contains("M") ? c.at("M").get<std::size_t>()
                          : static_cast<std::size_t>(cfg.chain_matrix.rows());
  if (!c.contains("Q") && !c.contains("A")) {
    cfg.chain_matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cfg.m),
                                             static_cast<Eigen::Index>(cfg.m));
    cfg.chain_is_transition = false;
  }
  if (c.contains("pi0")) {
    const auto v = c.at("pi0").get<std::vector<double>>();
    cfg.pi0 = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  } else {
    cfg.pi0 = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(cfg.m), 1.0 / static_cast<double>(cfg.m));
  }
}

}  // namespace detail

/// Overlays the fields present in `j` onto `cfg`. Unknown fields are rejected.
inline void apply_json(RunConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "scenario") cfg.scenario = v.get<std::string>();
      else if (key == "mode") {
        const auto s = v.get<std::string>();
        if (s == "fixed-size") cfg.mode = GrowthMode::FixedSize;
        else if (s == "growing") cfg.mode = GrowthMode::Growing;
        else throw ConfigError("mode must be \"fixed-size\" or \"growing\"");
      } else if (key == "N0") cfg.n0 = v.get<std::size_t>();
      else if (key == "G0") {
        if (v.is_null()) cfg.edge_list.reset();
        else cfg.edge_list = std::filesystem::path(v.get<std::string>());
      } else if (key == "chain") detail::apply_chain(cfg, v);
      else if (key == "p") cfg.p = detail::number_or_array(v);
      else if (key == "q") cfg.q = detail::number_or_array(v);
      else if (key == "r") cfg.r = v.get<double>();
      else if (key == "deletion") {
        const auto s = v.get<std::string>();
        if (s == "uniform") cfg.deletion = DeletionRule::Uniform;
        else if (s == "protected") cfg.deletion = DeletionRule::Protected;
        else throw ConfigError("deletion must be \"uniform\" or \"protected\"");
      } else if (key == "epsilon") cfg.epsilon = v.get<double>();
      else if (key == "noise") {
        const auto kind = v.value("kind", std::string("pairwise-swap"));
        if (kind == "none") cfg.noise = NoiseModel::none();
        else if (kind == "pairwise-swap") cfg.noise = NoiseModel::swaps(v.value("intensity", 2.0));
        else throw ConfigError("noise kind must be \"none\" or \"pairwise-swap\"");
      } else if (key == "horizon") cfg.horizon = v.get<std::size_t>();
      else if (key == "replications") cfg.replications = v.get<std::size_t>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "out_dir") cfg.out_dir = v.get<std::string>();
      else if (key == "stride") cfg.stride = v.get<std::size_t>();
      else if (key == "d_max_cap") cfg.dim_cap = v.get<std::size_t>();
      else if (key == "workers") cfg.workers = v.get<std::size_t>();
      else if (key == "warmup") cfg.warmup = v.get<std::size_t>();
      else if (key == "burn_in") {
        if (v.is_null()) cfg.burn_in.reset();
        else cfg.burn_in = v.get<std::size_t>();
      } else if (key == "forced_path") {
        cfg.forced_path.clear();
        for (const auto& e : v) {
          const auto state = e.at("state").get<std::size_t>();
          if (state == 0) throw ConfigError("forced_path states are numbered from 1");
          cfg.forced_path.push_back({e.at("step").get<std::size_t>(), state - 1});
        }
      } else if (key == "initial_state") {
        const auto s = v.get<std::size_t>();
        if (s == 0) throw ConfigError("initial_state is numbered from 1");
        cfg.initial_state = s - 1;
      } else if (key == "track_degrees") cfg.track_degrees = v.get<std::vector<std::size_t>>();
      else if (key == "fit_window") {
        const auto w = v.get<std::vector<std::size_t>>();
        if (w.size() != 2) throw ConfigError("fit_window must be [lo, hi]");
        cfg.fit_lo = w[0];
        cfg.fit_hi = w[1];
      } else if (key == "p_grid_step") cfg.p_grid_step = v.get<double>();
      else if (key == "q_grid") cfg.q_grid = v.get<std::vector<double>>();
      else throw ConfigError("unknown config field \"" + key + "\"");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") + e.what());
  }
}

/// Parses config text; syntax errors report the line number.
inline RunConfig parse_config(const std::string& text, RunConfig base = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config parse error at line " +
                      std::to_string(detail::line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1)) +
                      ": " + e.what());
  }
  apply_json(base, j);
  return base;
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  auto cfg = parse_config(buf.str(), std::move(base));
  // Relative edge-list paths resolve against the config's directory.
  if (cfg.edge_list && cfg.edge_list->is_relative())
    cfg.edge_list = path.parent_path() / *cfg.edge_list;
  return cfg;
}

/// Round-trippable JSON form of a config.
inline nlohmann::ordered_json to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["scenario"] = cfg.scenario;
  j["mode"] = cfg.mode == GrowthMode::Growing ? "growing" : "fixed-size";
  j["N0"] = cfg.n0;
  j["G0"] = cfg.edge_list ? nlohmann::ordered_json(cfg.edge_list->string()) : nlohmann::ordered_json();
  nlohmann::ordered_json chain;
  chain["M"] = cfg.m;
  chain[cfg.chain_is_transition ? "A" : "Q"] = detail::matrix_to_json(cfg.chain_matrix);
  chain["rho"] = cfg.rho;
  chain["pi0"] = std::vector<double>(cfg.pi0.data(), cfg.pi0.data() + cfg.pi0.size());
  j["chain"] = chain;
  j["p"] = cfg.p;
  j["q"] = cfg.q;
  j["r"] = cfg.r;
  j["deletion"] = cfg.deletion == DeletionRule::Uniform ? "uniform" : "protected";
  j["epsilon"] = cfg.epsilon;
  j["noise"] = {{"kind", cfg.noise.kind == NoiseModel::Kind::None ? "none" : "pairwise-swap"},
                {"intensity", cfg.noise.intensity}};
  j["horizon"] = cfg.horizon;
  j["replications"] = cfg.replications;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir.string();
  j["stride"] = cfg.stride;
  j["d_max_cap"] = cfg.dim_cap;
  j["workers"] = cfg.workers;
  j["warmup"] = cfg.warmup;
  j["burn_in"] = cfg.burn_in ? nlohmann::ordered_json(*cfg.burn_in) : nlohmann::ordered_json();
  auto path = nlohmann::ordered_json::array();
  for (const auto& jump : cfg.forced_path) path.push_back({{"step", jump.step}, {"state", jump.state + 1}});
  j["forced_path"] = path;
  j["initial_state"] = cfg.initial_state + 1;
  j["track_degrees"] = cfg.track_degrees;
  j["fit_window"] = {cfg.fit_lo, cfg.fit_hi};
  j["p_grid_step"] = cfg.p_grid_step;
  j["q_grid"] = cfg.q_grid;
  return j;
}

inline bool is_warning(const std::string& violation) { return violation.rfind("warning:", 0) == 0; }

/// True when no entry of a validate_config result is an error.
inline bool is_runnable(const std::vector<std::string>& violations) {
  for (const auto& v : violations) {
    if (!is_warning(v)) return false;
  }
  return true;
}

/**
 * Lists every problem with `cfg`. Entries prefixed "warning:" do not block a
 * run; anything else does.
 */
inline std::vector<std::string> validate_config(const RunConfig& cfg) {
  std::vector<std::string> out;
  auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  for (double x : cfg.p) {
    if (!in_unit(x)) { out.emplace_back("p out of range"); break; }
  }
  for (double x : cfg.q) {
    if (!in_unit(x)) { out.emplace_back("q out of range"); break; }
  }
  if (!in_unit(cfg.r)) out.emplace_back("r out of range");
  if (cfg.mode == GrowthMode::FixedSize && cfg.r != 0.0) out.emplace_back("fixed-size mode requires r = 0");
  if (cfg.mode == GrowthMode::Growing && cfg.r == 0.0) out.emplace_back("growing mode requires r > 0");

  if (cfg.p.size() != cfg.m) out.emplace_back("p has " + std::to_string(cfg.p.size()) + " entries, expected M = " + std::to_string(cfg.m));
  if (cfg.q.size() != cfg.m) out.emplace_back("q has " + std::to_string(cfg.q.size()) + " entries, expected M = " + std::to_string(cfg.m));
  if (static_cast<std::size_t>(cfg.chain_matrix.rows()) != cfg.m) out.emplace_back("chain matrix is not M x M");

  bool chain_ok = true;
  if (cfg.chain_is_transition && !(cfg.rho > 0.0)) {
    out.emplace_back("chain: rho must be positive when A is given");
    chain_ok = false;
  } else {
    for (const auto& v : validate(cfg.chain())) {
      out.push_back("chain: " + v);
      chain_ok = false;
    }
  }

  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) out.emplace_back("epsilon out of range");
  if (cfg.noise.kind == NoiseModel::Kind::PairwiseSwap && !(cfg.noise.intensity >= 0.0))
    out.emplace_back("noise intensity must be nonnegative");
  if (cfg.horizon == 0) out.emplace_back("horizon must be positive");
  if (cfg.replications == 0) out.emplace_back("replications must be at least 1");
  if (cfg.workers == 0) out.emplace_back("workers must be at least 1");
  if (cfg.stride == 0) out.emplace_back("stride must be at least 1");
  if (cfg.dim_cap < 3) out.emplace_back("d_max_cap must be at least 3");
  if (!(cfg.fit_lo >= 1 && cfg.fit_lo < cfg.fit_hi)) out.emplace_back("fit_window needs 1 <= lo < hi");
  if (!(cfg.p_grid_step > 0.0 && cfg.p_grid_step < 1.0)) out.emplace_back("p_grid_step out of range");
  for (double x : cfg.q_grid) {
    if (!in_unit(x)) { out.emplace_back("q_grid out of range"); break; }
  }
  for (auto k : cfg.track_degrees) {
    if (k == 0) { out.emplace_back("track_degrees are numbered from 1"); break; }
  }
  if (cfg.initial_state >= cfg.m) out.emplace_back("initial_state out of range");
  for (std::size_t i = 0; i < cfg.forced_path.size(); ++i) {
    if (cfg.forced_path[i].state >= cfg.m) {
      out.emplace_back("forced_path state out of range");
      break;
    }
    if (i > 0 && cfg.forced_path[i].step < cfg.forced_path[i - 1].step) {
      out.emplace_back("forced_path steps must be nondecreasing");
      break;
    }
  }
  if (cfg.edge_list && !std::filesystem::exists(*cfg.edge_list))
    out.push_back("G0 file not found: " + cfg.edge_list->string());

  if (cfg.mode == GrowthMode::FixedSize) {
    if (!cfg.edge_list && cfg.n0 < 3) out.emplace_back("N0 must be at least 3");
    const bool params_ok = cfg.p.size() == cfg.m && cfg.q.size() == cfg.m && cfg.n0 >= 3;
    if (params_ok) {
      const auto dim = truncation_dimension(cfg.n0, std::max<std::size_t>(cfg.dim_cap, 3));
      for (std::size_t s = 0; s < cfg.m; ++s) {
        const double p = cfg.p[s], q = cfg.q[s];
        if (!(p > 0.0 && p < 1.0) || !in_unit(q) || q == 0.0 || dim < 3) continue;
        const auto gen = build_generator(p, q, dim);
        const std::string tag = cfg.m > 1 ? " (state " + std::to_string(s + 1) + ")" : "";
        if (transition_operator(gen, static_cast<double>(cfg.n0)).minCoeff() < 0.0)
          out.push_back("N0 too small for generator" + tag);
        if (gen.diagonal().maxCoeff() >= 0.0)
          out.push_back("warning: generator diagonal not negative" + tag);
      }
    }
    if (chain_ok && cfg.rho * static_cast<double>(cfg.n0) > 0.1)
      out.emplace_back("warning: rho not << 1/N0");
  }
  return out;
}

}  // namespace degreeflow
