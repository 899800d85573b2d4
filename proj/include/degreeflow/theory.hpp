#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "degreeflow/distribution.hpp"
#include "degreeflow/error.hpp"

namespace degreeflow {

/// Default ceiling on the tracked degree range.
inline constexpr std::size_t kDefaultDegreeCap = 200;

/// Tracked degrees for a graph of n0 nodes: min(n0 - 1, cap).
inline std::size_t truncation_dimension(std::size_t n0, std::size_t cap = kDefaultDegreeCap) {
  if (n0 < 2) throw Error("graph size must be at least 2");
  return std::min(n0 - 1, cap);
}

namespace detail {

// log C(n, k) + k log p + (n - k) log(1 - p), exponentiated; 0 below 1e-300.
inline double binomial_pmf(std::size_t n, std::size_t k, double p) {
  if (k > n) return 0.0;
  const double dn = static_cast<double>(n), dk = static_cast<double>(k);
  double log_term = std::lgamma(dn + 1.0) - std::lgamma(dk + 1.0) - std::lgamma(dn - dk + 1.0);
  if (k > 0) log_term += dk * std::log(p);
  if (n > k) log_term += (dn - dk) * std::log1p(-p);
  const double v = std::exp(log_term);
  return v < 1e-300 ? 0.0 : v;
}

}  // namespace detail

/// Sufficient condition q < p(1-p)/(2+p) under which every diagonal entry is negative.
inline bool diagonal_condition(double p, double q) { return q < p * (1.0 - p) / (2.0 + p); }

/**
 * Untruncated rate from degree `from` to degree `to` (both >= 1).
 *
 * A node of degree j gains an edge at rate q(1 + pj), loses one at rate qj,
 * and, as the parent of a replacement node, is reassigned to degree
 * 1 + Binomial(j, p) at rate q. The diagonal collects all outflow.
 */
inline double generator_entry(double p, double q, std::size_t from, std::size_t to) {
  const double j = static_cast<double>(from);
  if (to == 0 || to > from + 1) return 0.0;
  double v = q * detail::binomial_pmf(from, to - 1, p);
  if (to == from + 1) v += q * (1.0 + p * j);
  if (to == from) v -= q * (j + 2.0 + p * j);
  if (to + 1 == from) v += q * j;
  return v;
}

/**
 * Generator L over degrees 1..dim. Row = current degree, column = next degree.
 *
 * Interior rows sum to zero exactly. The first row has no degree-0 target
 * (neighbors of degree-1 nodes are protected) and the last row drops degree
 * dim+1; both diagonals absorb the missing rate so every row sums to zero.
 */
inline Eigen::MatrixXd build_generator(double p, double q, std::size_t dim) {
  if (dim < 3) throw Error("generator dimension must be at least 3");
  if (!(p > 0.0 && p < 1.0)) throw Error("connection probability p must lie in (0,1)");
  if (q < 0.0 || q > 1.0) throw Error("deletion probability q must lie in [0,1]");

  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(d, d);
  if (q == 0.0) return gen;
  for (std::size_t from = 1; from <= dim; ++from) {
    const std::size_t last = std::min(from + 1, dim);
    for (std::size_t to = 1; to <= last; ++to) {
      gen(static_cast<Eigen::Index>(from) - 1, static_cast<Eigen::Index>(to) - 1) =
          generator_entry(p, q, from, to);
    }
  }
  for (Eigen::Index row : {Eigen::Index{0}, d - 1}) {
    const double off = gen.row(row).sum() - gen(row, row);
    gen(row, row) = -off;
  }
  return gen;
}

/// B = I + L / n0.
inline Eigen::MatrixXd transition_operator(const Eigen::MatrixXd& generator, double n0) {
  return Eigen::MatrixXd::Identity(generator.rows(), generator.cols()) + generator / n0;
}

namespace detail {

inline void require_stochastic(const Eigen::MatrixXd& generator, double n0) {
  if (generator.cwiseAbs().maxCoeff() == 0.0) throw Error("degenerate: q=0");
  const Eigen::MatrixXd b = transition_operator(generator, n0);
  Eigen::Index r = 0, c = 0;
  const double lo = b.minCoeff(&r, &c);
  if (lo < -1e-15) {
    std::ostringstream msg;
    msg << "N0 too small for generator: B(" << r + 1 << "," << c + 1 << ") = " << lo;
    throw Error(msg.str());
  }
}

inline DegreeDistribution clamp_normalize(Eigen::VectorXd x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) < 0.0 && x(i) >= -1e-12) x(i) = 0.0;
  }
  x /= x.sum();
  return DegreeDistribution(std::move(x));
}

}  // namespace detail

/// Largest |B'g - g| entry.
inline double fixed_point_residual(const Eigen::MatrixXd& generator, double n0,
                                   const DegreeDistribution& g) {
  return (transition_operator(generator, n0).transpose() * g.mass - g.mass).cwiseAbs().maxCoeff();
}

/**
 * Stationary degree distribution: the solution of B'g = g with sum(g) = 1.
 * Solved directly with the last balance equation replaced by normalization.
 */
inline DegreeDistribution stationary_degree_distribution(const Eigen::MatrixXd& generator,
                                                         double n0) {
  detail::require_stochastic(generator, n0);
  const auto d = generator.rows();
  Eigen::MatrixXd system = generator.transpose() / n0;  // B' - I
  system.row(d - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  rhs(d - 1) = 1.0;
  Eigen::VectorXd x = system.partialPivLu().solve(rhs);
  auto g = detail::clamp_normalize(std::move(x));
  if (g.mass.minCoeff() < 0.0) throw Error("stationary solve produced negative mass");
  const double residual = fixed_point_residual(generator, n0, g);
  if (residual >= 1e-10) {
    std::ostringstream msg;
    msg << "stationary solve residual " << residual << " exceeds 1e-10";
    throw Error(msg.str());
  }
  return g;
}

/**
 * Same fixed point by power iteration. The iteration runs on the uniformized
 * operator I + L/c, c = max|l_ii| * 1.1 <= n0, which has the fixed points of B
 * and a spectral gap larger by n0/c.
 */
inline DegreeDistribution stationary_by_power_iteration(const Eigen::MatrixXd& generator,
                                                        double n0, double tol = 1e-12,
                                                        std::size_t max_iter = 1'000'000) {
  detail::require_stochastic(generator, n0);
  const double c = std::min(n0, 1.1 * generator.diagonal().cwiseAbs().maxCoeff());
  const Eigen::MatrixXd step = transition_operator(generator, c).transpose();
  const auto d = generator.rows();
  Eigen::VectorXd x = Eigen::VectorXd::Constant(d, 1.0 / static_cast<double>(d));
  Eigen::VectorXd next(d);
  for (std::size_t it = 0; it < max_iter; ++it) {
    next.noalias() = step * x;
    next /= next.sum();
    const double delta = (next - x).cwiseAbs().maxCoeff();
    x.swap(next);
    if (delta < tol) return detail::clamp_normalize(std::move(x));
  }
  throw Error("power iteration did not converge");
}

struct DegreeMoments {
  double d1 = 0.0;  ///< sum_i i g(i)
  double d2 = 0.0;  ///< sum_i i^2 g(i)
};

inline DegreeMoments degree_moments(const DegreeDistribution& g) {
  DegreeMoments m;
  for (Eigen::Index k = 0; k < g.mass.size(); ++k) {
    const double deg = static_cast<double>(k + 1);
    m.d1 += deg * g.mass(k);
    m.d2 += deg * deg * g.mass(k);
  }
  return m;
}

/// Order of the expected search delay, n0 * d1 / (d2 - d1).
inline double searchability(const DegreeDistribution& g, double n0) {
  const auto m = degree_moments(g);
  if (!(m.d2 > m.d1)) throw Error("degenerate: d2 <= d1");
  return n0 * m.d1 / (m.d2 - m.d1);
}

/// Asymptotic covariance of the scaled tracking error and its ingredients.
struct CovarianceResult {
  Eigen::MatrixXd sigma;        ///< Z'D + DZ - D - g g'
  Eigen::MatrixXd fundamental;  ///< Z = (I - B + 1 g')^{-1}
  Eigen::VectorXd occupancy;    ///< diagonal of D, i.e. g
  double min_eigenvalue = 0.0;  ///< smallest eigenvalue of sigma (reported, not enforced)
};

inline CovarianceResult covariance(const Eigen::MatrixXd& generator, double n0,
                                   const DegreeDistribution& g_bar) {
  const auto d = generator.rows();
  if (g_bar.mass.size() != d) throw Error("g_bar dimension does not match generator");
  const Eigen::MatrixXd b = transition_operator(generator, n0);
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d) - b +
                            Eigen::VectorXd::Ones(d) * g_bar.mass.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  const double rcond = lu.rcond();
  if (!lu.isInvertible() || rcond < 1e-15) {
    std::ostringstream msg;
    msg << "fundamental matrix is singular (reciprocal condition " << rcond << ")";
    throw Error(msg.str());
  }
  CovarianceResult out;
  out.fundamental = lu.inverse();
  out.occupancy = g_bar.mass;
  const auto dg = g_bar.mass.asDiagonal();
  out.sigma = out.fundamental.transpose() * dg;
  out.sigma += dg * out.fundamental;
  out.sigma -= Eigen::MatrixXd(dg);
  out.sigma -= g_bar.mass * g_bar.mass.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.sigma, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  return out;
}

/// F(beta) = (1+q)(p^(beta-1) + p beta - p) - 1 - beta q, evaluated as
/// (1+q)(expm1((beta-1) log p) + p(beta-1)) - q(beta-1) so that F(1) = 0 exactly.
inline double powerlaw_equation(double p, double q, double beta) {
  const double b = beta - 1.0;
  return (1.0 + q) * (std::expm1(b * std::log(p)) + p * b) - q * b;
}

struct PowerLawExponent {
  double beta_star = 1.0;       ///< nontrivial root of F; +inf when F < 0 for every beta > 1
  double beta = 1.0;            ///< max(1, beta_star)
  bool nontrivial_root = false; ///< false when no finite root other than beta = 1 exists
};

namespace detail {

inline double bisect(double p, double q, double lo, double hi) {
  double flo = powerlaw_equation(p, q, lo);
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = powerlaw_equation(p, q, mid);
    if (fmid == 0.0) return mid;
    if ((fmid < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi))) break;
  }
  return 0.5 * (lo + hi);
}

// Root of F on [lo, hi] via a sign-change scan over `pieces` subintervals.
inline std::optional<double> scan_root(double p, double q, double lo, double hi, int pieces) {
  const double width = (hi - lo) / pieces;
  double a = lo;
  double fa = powerlaw_equation(p, q, a);
  for (int k = 1; k <= pieces; ++k) {
    const double b = lo + width * k;
    const double fb = powerlaw_equation(p, q, b);
    if (fa == 0.0) return a;
    if ((fa < 0.0) != (fb < 0.0)) return bisect(p, q, a, b);
    a = b;
    fa = fb;
  }
  return std::nullopt;
}

}  // namespace detail

/**
 * Power-law exponent from (1+q)(p^(beta-1) + p beta - p) = 1 + beta q.
 *
 * F is convex in beta with F(1) = 0, so there is at most one other root.
 * F'(1) >= 0 puts it below 1, where beta = max(1, beta_star) = 1. Otherwise
 * F dips below zero and returns only if its asymptotic slope (1+q)p - q is
 * positive; the root is bracketed starting from [1 + 1e-6, 50] and the upper
 * end doubled as needed. A nonpositive slope leaves no finite root: the tail
 * is lighter than any power law and beta_star = beta = +inf.
 */
inline PowerLawExponent powerlaw_exponent(double p, double q) {
  if (!(p > 0.0 && p < 1.0)) throw Error("connection probability p must lie in (0,1)");
  if (q < 0.0) throw Error("deletion probability q must be nonnegative");
  PowerLawExponent out;
  const double slope_at_one = (1.0 + q) * (std::log(p) + p) - q;

  if (slope_at_one >= 0.0) {
    // Second root at or below 1; search downward.
    for (double lo = 0.0; lo > -1e6; lo = 2.0 * lo - 1.0) {
      if (auto r = detail::scan_root(p, q, lo, 1.0 - 1e-6, 200)) {
        out.beta_star = *r;
        out.nontrivial_root = true;
        break;
      }
    }
  } else if ((1.0 + q) * p - q > 0.0) {
    constexpr double lo = 1.0 + 1e-6;
    double hi = 50.0;
    while (powerlaw_equation(p, q, hi) < 0.0 && hi < 1e12) hi *= 2.0;
    std::optional<double> root;
    if (powerlaw_equation(p, q, hi) > 0.0) root = detail::bisect(p, q, lo, hi);
    if (root) {
      out.beta_star = *root;
      out.nontrivial_root = true;
    }
  } else {
    out.beta_star = std::numeric_limits<double>::infinity();
  }
  out.beta = std::max(1.0, out.beta_star);
  return out;
}

/// Least-squares fit of log mass = alpha - beta_hat log degree.
struct PowerLawFit {
  double alpha = 0.0;
  double beta_hat = 0.0;
  double r_squared = 0.0;  ///< 1 when the points are fitted exactly (including a flat line)
  std::size_t points = 0;
};

inline PowerLawFit powerlaw_fit(const DegreeDistribution& dist, std::size_t lo, std::size_t hi) {
  if (lo >= hi) throw Error("powerlaw fit needs lo < hi");
  std::vector<double> xs, ys;
  for (std::size_t k = std::max<std::size_t>(lo, 1); k <= hi; ++k) {
    const double m = dist.at(k);
    if (m > 0.0) {
      xs.push_back(std::log(static_cast<double>(k)));
      ys.push_back(std::log(m));
    }
  }
  if (xs.size() < 3) throw Error("powerlaw fit needs at least 3 nonzero bins");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  PowerLawFit fit;
  const double slope = sxy / sxx;
  fit.alpha = my - slope * mx;
  fit.beta_hat = -slope;
  fit.points = xs.size();
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.alpha + slope * xs[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : (ss_res <= 1e-24 ? 1.0 : 0.0);
  return fit;
}

/// Everything computed for one modulating state.
struct TheorySolution {
  double p = 0.0;
  double q = 0.0;
  std::size_t n0 = 0;
  std::size_t dim = 0;
  Eigen::MatrixXd generator;
  Eigen::MatrixXd transition;
  DegreeDistribution g_bar;
  CovarianceResult cov;
  DegreeMoments moments;
  double lambda = 0.0;
  PowerLawExponent exponent;
  double residual = 0.0;
  bool diagonal_condition = false;

  double trace_sigma() const { return cov.sigma.trace(); }
};

inline TheorySolution solve_theory(double p, double q, std::size_t n0,
                                   std::size_t cap = kDefaultDegreeCap) {
  TheorySolution s;
  s.p = p;
  s.q = q;
  s.n0 = n0;
  s.dim = truncation_dimension(n0, cap);
  const double n = static_cast<double>(n0);
  s.generator = build_generator(p, q, s.dim);
  s.transition = transition_operator(s.generator, n);
  s.g_bar = stationary_degree_distribution(s.generator, n);
  s.residual = fixed_point_residual(s.generator, n, s.g_bar);
  s.cov = covariance(s.generator, n, s.g_bar);
  s.moments = degree_moments(s.g_bar);
  s.lambda = searchability(s.g_bar, n);
  s.exponent = powerlaw_exponent(p, q);
  s.diagonal_condition = diagonal_condition(p, q);
  return s;
}

}  // namespace degreeflow
