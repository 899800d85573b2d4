#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "degreeflow/chain.hpp"
#include "degreeflow/distribution.hpp"
#include "degreeflow/error.hpp"
#include "degreeflow/graph.hpp"
#include "degreeflow/io.hpp"
#include "degreeflow/model.hpp"
#include "degreeflow/random.hpp"
#include "degreeflow/theory.hpp"

namespace degreeflow {

/// Integer, zero-sum observation noise added to the degree counts.
struct NoiseModel {
  enum class Kind { None, PairwiseSwap };
  Kind kind = Kind::PairwiseSwap;
  double intensity = 2.0;  ///< expected number of unit swaps per observation

  static NoiseModel none() { return {Kind::None, 0.0}; }
  static NoiseModel swaps(double intensity) { return {Kind::PairwiseSwap, intensity}; }
};

/**
 * Noise vector w for counts f: Poisson(intensity) proposed unit swaps between
 * two uniformly chosen occupied bins, each with a random sign. A swap is
 * rejected if it would leave |w(i)| > f(i) in either bin. The feasible set and
 * the proposals are both symmetric under w -> -w, so E[w] = 0 exactly, and
 * f + w >= 0 always holds.
 */
inline std::vector<long long> swap_noise(const std::vector<std::size_t>& counts, double intensity,
                                         Rng& rng) {
  std::vector<long long> w(counts.size(), 0);
  std::vector<std::size_t> occupied;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] > 0) occupied.push_back(k);
  }
  const std::size_t swaps = poisson(rng, intensity);
  if (occupied.size() < 2) return w;
  for (std::size_t s = 0; s < swaps; ++s) {
    const std::size_t a = occupied[uniform_index(rng, occupied.size())];
    const std::size_t b = occupied[uniform_index(rng, occupied.size())];
    const long long sign = bernoulli(rng, 0.5) ? 1 : -1;
    if (a == b) continue;
    const long long wa = w[a] - sign, wb = w[b] + sign;
    if (std::llabs(wa) > static_cast<long long>(counts[a]) ||
        std::llabs(wb) > static_cast<long long>(counts[b]))
      continue;
    w[a] = wa;
    w[b] = wb;
  }
  return w;
}

/// Noisy observation y = (f + w) / N' over degrees 1..dim, where N' counts
/// non-isolated nodes (tail folded into the last bin).
inline DegreeDistribution observe(const DynamicGraph& graph, const NoiseModel& noise, Rng& rng,
                                  std::size_t dim) {
  const auto& hist = graph.degree_histogram();
  std::vector<std::size_t> counts(dim, 0);
  std::size_t n = 0;
  for (std::size_t deg = 1; deg < hist.size(); ++deg) {
    counts[std::min(deg, dim) - 1] += hist[deg];
    n += hist[deg];
  }
  if (n == 0) throw Error("cannot observe a graph without edges");

  auto y = DegreeDistribution::zeros(dim);
  std::vector<long long> w;
  if (noise.kind == NoiseModel::Kind::PairwiseSwap) w = swap_noise(counts, noise.intensity, rng);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < dim; ++k) {
    const long long c = static_cast<long long>(counts[k]) + (w.empty() ? 0 : w[k]);
    y.mass(static_cast<Eigen::Index>(k)) = static_cast<double>(c) * inv_n;
  }
  return y;
}

inline DegreeDistribution observe(const DynamicGraph& graph, const NoiseModel& noise, Rng& rng) {
  return observe(graph, noise, rng, std::max<std::size_t>(graph.max_degree(), 1));
}

/// Constant-step tracker state.
struct TrackerState {
  DegreeDistribution g_hat;
  double epsilon = 0.01;
  std::size_t step_count = 0;
};

/// g_hat <- g_hat + eps (y - g_hat). The shorter vector is zero padded.
inline TrackerState sa_update(TrackerState state, const DegreeDistribution& y) {
  if (!(state.epsilon > 0.0 && state.epsilon < 1.0)) throw Error("step size must lie in (0,1)");
  if (y.max_degree() > state.g_hat.max_degree()) {
    state.g_hat = state.g_hat.resized(y.max_degree());
  }
  if (y.max_degree() == state.g_hat.max_degree()) {
    state.g_hat.mass += state.epsilon * (y.mass - state.g_hat.mass);
  } else {
    const auto padded = y.resized(state.g_hat.max_degree());
    state.g_hat.mass += state.epsilon * (padded.mass - state.g_hat.mass);
  }
  ++state.step_count;
  return state;
}

/// Tracking error history of one run.
struct ErrorSeries {
  double epsilon = 0.0;
  std::vector<double> mse;                ///< |g_hat_n - g_bar(theta_n)|^2 per step
  std::vector<double> mse_unconditional;  ///< same against sum_theta P(theta_n = theta) g_bar(theta)
  std::vector<double> nu_norm;            ///< |nu_n| = sqrt(mse / eps)
  std::vector<std::size_t> sample_steps;  ///< steps at which error vectors were kept
  std::vector<Eigen::VectorXd> errors;    ///< g_hat_n - g_bar(theta_n) at sample_steps

  std::size_t length() const { return mse.size(); }
  Eigen::VectorXd scaled_error(std::size_t sample) const {
    return errors.at(sample) / std::sqrt(epsilon);
  }
};

/// Forced value of theta from `step` onwards.
struct ForcedJump {
  std::size_t step = 0;
  std::size_t state = 0;
};

struct TrackingOptions {
  std::size_t dim_cap = kDefaultDegreeCap;
  std::size_t stride = 1;            ///< error vectors and trajectory are kept every `stride` steps
  std::size_t warmup = 0;            ///< graph steps in the initial state before n = 0
  std::optional<DegreeDistribution> initial_estimate;  ///< default: uniform over 1..D
  std::vector<ForcedJump> forced_path;                 ///< when nonempty theta follows it
  std::size_t initial_state = 0;                       ///< used with a forced path
  bool keep_error_vectors = true;
};

struct TrackingRun {
  ErrorSeries series;
  std::vector<std::size_t> theta_path;          ///< theta_n for every step
  std::vector<std::size_t> trajectory_steps;    ///< steps of the kept estimates
  std::vector<Eigen::VectorXd> g_hat_trajectory;
  std::vector<DegreeDistribution> targets;      ///< g_bar(theta) per state
  DegreeDistribution final_estimate;
  std::size_t deletions = 0;
  std::size_t skipped_deletions = 0;
  std::size_t dim = 0;
};

/**
 * g_bar for one state. It depends on p only (L is linear in q), so q = 0,
 * where the stationary problem is degenerate, falls back to a unit rate.
 */
inline DegreeDistribution target_distribution(double p, double q, std::size_t n0, std::size_t dim) {
  const double rate = q > 0.0 ? q : 1.0;
  const auto gen = build_generator(p, rate, dim);
  const double scale = q > 0.0 ? static_cast<double>(n0)
                               : std::max(static_cast<double>(n0),
                                          gen.diagonal().cwiseAbs().maxCoeff());
  return stationary_degree_distribution(gen, scale);
}

/**
 * Co-simulates graph, modulating chain and tracker for `horizon` steps.
 * Per step: record the error of g_hat_n, observe y_n from G_n, update the
 * tracker, evolve the graph under theta_n, then advance theta.
 */
inline TrackingRun run_tracking(GraphParams params, double epsilon, const NoiseModel& noise,
                                std::size_t horizon, Rng& rng, const TrackingOptions& opts = {}) {
  if (params.r != 0.0) throw Error("tracking requires the fixed-size mode (r = 0)");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error("step size must lie in (0,1)");
  DynamicGraph graph = make_initial_graph(params);
  const std::size_t n0 = graph.node_count();
  const std::size_t dim = truncation_dimension(n0, opts.dim_cap);
  const std::size_t states = params.states();
  const std::size_t stride = std::max<std::size_t>(opts.stride, 1);

  TrackingRun run;
  run.dim = dim;
  run.series.epsilon = epsilon;
  for (std::size_t s = 0; s < states; ++s) {
    run.targets.push_back(target_distribution(params.p.at(s), params.q.at(s), n0, dim));
  }

  ThetaChain& chain = params.chain;
  if (opts.forced_path.empty()) chain.reset(rng);
  else chain.set_state(opts.initial_state);

  for (std::size_t w = 0; w < opts.warmup; ++w) evolve_step(graph, params, chain.state(), rng);

  TrackerState tracker{opts.initial_estimate ? opts.initial_estimate->resized(dim)
                                             : DegreeDistribution::uniform(dim),
                       epsilon, 0};
  Eigen::VectorXd occupancy = chain.initial();
  std::size_t next_jump = 0;

  run.series.mse.reserve(horizon);
  run.series.mse_unconditional.reserve(horizon);
  run.series.nu_norm.reserve(horizon);
  run.theta_path.reserve(horizon);
  Eigen::VectorXd err(static_cast<Eigen::Index>(dim));
  Eigen::VectorXd mixed(static_cast<Eigen::Index>(dim));

  for (std::size_t n = 0; n < horizon; ++n) {
    while (next_jump < opts.forced_path.size() && opts.forced_path[next_jump].step <= n) {
      chain.set_state(opts.forced_path[next_jump].state);
      ++next_jump;
    }
    const std::size_t theta = chain.state();
    run.theta_path.push_back(theta);

    err = tracker.g_hat.mass - run.targets[theta].mass;
    const double mse = err.squaredNorm();
    mixed.setZero();
    for (std::size_t s = 0; s < states; ++s) {
      mixed += occupancy(static_cast<Eigen::Index>(s)) * run.targets[s].mass;
    }
    run.series.mse.push_back(mse);
    run.series.mse_unconditional.push_back((tracker.g_hat.mass - mixed).squaredNorm());
    run.series.nu_norm.push_back(std::sqrt(mse / epsilon));
    if (n % stride == 0) {
      if (opts.keep_error_vectors) {
        run.series.sample_steps.push_back(n);
        run.series.errors.push_back(err);
      }
      run.trajectory_steps.push_back(n);
      run.g_hat_trajectory.push_back(tracker.g_hat.mass);
    }

    const auto y = observe(graph, noise, rng, dim);
    tracker = sa_update(std::move(tracker), y);

    const auto outcome = evolve_step(graph, params, theta, rng);
    run.deletions += outcome.deleted ? 1 : 0;
    run.skipped_deletions += outcome.deletion_skipped ? 1 : 0;

    if (opts.forced_path.empty()) step_theta(chain, rng);
    if (states > 1) occupancy = chain.transition().transpose() * occupancy;
  }
  run.final_estimate = tracker.g_hat;
  return run;
}

/**
 * Reference solution of the switched ODE dg/dt = -g + g_bar(theta(t)) on the
 * grid t = n eps, with theta_path[n] held on [n eps, (n+1) eps). Each grid
 * step is integrated exactly. Returns path.size() + 1 points.
 */
inline std::vector<Eigen::VectorXd> ode_reference(const std::vector<std::size_t>& theta_path,
                                                  const std::vector<DegreeDistribution>& g_bar,
                                                  double epsilon, const Eigen::VectorXd& g0) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(theta_path.size() + 1);
  out.push_back(g0);
  const double decay = std::exp(-epsilon);
  for (std::size_t theta : theta_path) {
    const Eigen::VectorXd& target = g_bar.at(theta).mass;
    out.push_back(target + decay * (out.back() - target));
  }
  return out;
}

/// Sample covariance of the scaled errors nu_n kept at steps >= burn_in.
inline Eigen::MatrixXd scaled_error_covariance(const ErrorSeries& series, std::size_t burn_in) {
  if (series.length() <= burn_in + 1000) throw Error("insufficient samples after burn-in");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < series.sample_steps.size(); ++i) {
    if (series.sample_steps[i] >= burn_in) keep.push_back(i);
  }
  if (keep.size() < 2) throw Error("insufficient samples after burn-in");
  const auto d = series.errors.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (auto i : keep) mean += series.scaled_error(i);
  mean /= static_cast<double>(keep.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (auto i : keep) {
    const Eigen::VectorXd c = series.scaled_error(i) - mean;
    cov.selfadjointView<Eigen::Lower>().rankUpdate(c);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  return cov / static_cast<double>(keep.size() - 1);
}

}  // namespace degreeflow
