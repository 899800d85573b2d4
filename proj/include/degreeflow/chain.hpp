#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "degreeflow/error.hpp"
#include "degreeflow/random.hpp"

namespace degreeflow {

/**
 * Slow modulating Markov chain with transition matrix A = I + rho * Q.
 *
 * Construction never throws on malformed Q or pi0 so that validate() can
 * report every violation; stepping or solving an invalid chain is undefined.
 * States are 0-based internally.
 */
class ThetaChain {
 public:
  ThetaChain() : ThetaChain(single_state()) {}

  static ThetaChain from_generator(Eigen::MatrixXd generator, double rho, Eigen::VectorXd pi0) {
    ThetaChain chain(std::move(generator), rho, std::move(pi0));
    return chain;
  }

  /// Recovers Q = (A - I) / rho; rho must be positive.
  static ThetaChain from_transition(const Eigen::MatrixXd& transition, double rho,
                                    Eigen::VectorXd pi0) {
    if (!(rho > 0.0)) throw ConfigError("rho must be positive to recover Q from A");
    Eigen::MatrixXd q =
        (transition - Eigen::MatrixXd::Identity(transition.rows(), transition.cols())) / rho;
    return ThetaChain(std::move(q), rho, std::move(pi0));
  }

  static ThetaChain single_state() {
    return ThetaChain(Eigen::MatrixXd::Zero(1, 1), 0.0, Eigen::VectorXd::Ones(1));
  }

  std::size_t states() const { return static_cast<std::size_t>(generator_.rows()); }
  const Eigen::MatrixXd& generator() const { return generator_; }
  const Eigen::MatrixXd& transition() const { return transition_; }
  double rho() const { return rho_; }
  const Eigen::VectorXd& initial() const { return pi0_; }

  std::size_t state() const { return state_; }
  void set_state(std::size_t s) {
    if (s >= states()) throw Error("theta state out of range");
    state_ = s;
  }

  /// Draws the initial state from pi0.
  std::size_t reset(Rng& rng) {
    state_ = sample_row(pi0_, rng);
    return state_;
  }

  /// Samples an index from a probability vector by inversion.
  template <typename Row>
  static std::size_t sample_row(const Row& probs, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    const auto n = static_cast<std::size_t>(probs.size());
    for (std::size_t j = 0; j < n; ++j) {
      acc += probs(static_cast<Eigen::Index>(j));
      if (u < acc) return j;
    }
    // Rounding left u above the accumulated sum; take the last state with mass.
    for (std::size_t j = n; j-- > 0;) {
      if (probs(static_cast<Eigen::Index>(j)) > 0.0) return j;
    }
    return n - 1;
  }

 private:
  ThetaChain(Eigen::MatrixXd generator, double rho, Eigen::VectorXd pi0)
      : generator_(std::move(generator)), rho_(rho), pi0_(std::move(pi0)) {
    transition_ = Eigen::MatrixXd::Identity(generator_.rows(), generator_.cols()) + rho_ * generator_;
  }

  Eigen::MatrixXd generator_;
  Eigen::MatrixXd transition_;
  double rho_ = 0.0;
  Eigen::VectorXd pi0_;
  std::size_t state_ = 0;
};

/// Advances the chain one step using row A[current_state].
inline std::size_t step_theta(ThetaChain& chain, Rng& rng) {
  if (chain.states() == 1) return chain.state();
  const auto next = ThetaChain::sample_row(
      chain.transition().row(static_cast<Eigen::Index>(chain.state())), rng);
  chain.set_state(next);
  return next;
}

/// True when every state reaches every other through positive off-diagonal rates.
inline bool is_irreducible(const Eigen::MatrixXd& generator) {
  const auto m = generator.rows();
  if (m <= 1) return true;
  auto reach_all = [&](bool transpose) {
    std::vector<char> seen(static_cast<std::size_t>(m), 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const auto i = stack.back();
      stack.pop_back();
      for (Eigen::Index j = 0; j < m; ++j) {
        const double rate = transpose ? generator(j, i) : generator(i, j);
        if (j != i && rate > 0.0 && !seen[static_cast<std::size_t>(j)]) {
          seen[static_cast<std::size_t>(j)] = 1;
          stack.push_back(j);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reach_all(false) && reach_all(true);
}

/// Names of violated chain conditions; empty when the chain is usable.
inline std::vector<std::string> validate(const ThetaChain& chain, double tol = 1e-12) {
  std::vector<std::string> out;
  const auto& q = chain.generator();
  const auto& a = chain.transition();
  if (q.rows() == 0 || q.rows() != q.cols()) return {"shape"};

  bool row_sum = false, off_diag = false, a_range = false;
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    if (std::abs(q.row(i).sum()) > tol) row_sum = true;
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      if (i != j && q(i, j) < 0.0) off_diag = true;
      if (a(i, j) < -tol || a(i, j) > 1.0 + tol) a_range = true;
    }
  }
  if (row_sum) out.emplace_back("row-sum");
  if (off_diag) out.emplace_back("off-diagonal-negative");
  if (a_range) out.emplace_back("A-entry-range");
  if (chain.rho() < 0.0) out.emplace_back("rho-negative");
  if (!is_irreducible(q)) out.emplace_back("not-irreducible");

  const auto& pi0 = chain.initial();
  if (pi0.size() != q.rows() || pi0.minCoeff() < 0.0 || std::abs(pi0.sum() - 1.0) > 1e-9) {
    out.emplace_back("pi0");
  }
  return out;
}

/// Stationary distribution pi with pi' A = pi'. Requires irreducible Q.
inline Eigen::VectorXd stationary_pi(const ThetaChain& chain) {
  const auto& q = chain.generator();
  const auto m = q.rows();
  if (m == 1) return Eigen::VectorXd::Ones(1);
  if (!is_irreducible(q)) throw Error("stationary distribution requires an irreducible generator");

  // pi' A = pi'  <=>  Q' pi = 0 (for rho > 0); one balance equation is replaced by sum(pi) = 1.
  Eigen::MatrixXd system = q.transpose();
  system.row(m - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  rhs(m - 1) = 1.0;
  Eigen::VectorXd pi = system.fullPivLu().solve(rhs);
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();

  const double residual = (chain.transition().transpose() * pi - pi).cwiseAbs().maxCoeff();
  if (residual > 1e-10) throw Error("stationary distribution residual too large");
  return pi;
}

}  // namespace degreeflow
