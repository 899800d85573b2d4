#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "degreeflow/error.hpp"

namespace degreeflow {

/// Probability mass over degrees 1..D. Entry k-1 holds the mass of degree k.
struct DegreeDistribution {
  Eigen::VectorXd mass;

  DegreeDistribution() = default;
  explicit DegreeDistribution(Eigen::VectorXd m) : mass(std::move(m)) {}

  static DegreeDistribution zeros(std::size_t max_degree) {
    return DegreeDistribution(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(max_degree)));
  }

  static DegreeDistribution uniform(std::size_t max_degree) {
    auto d = static_cast<Eigen::Index>(max_degree);
    return DegreeDistribution(Eigen::VectorXd::Constant(d, 1.0 / static_cast<double>(d)));
  }

  static DegreeDistribution point_mass(std::size_t degree, std::size_t max_degree) {
    auto dist = zeros(max_degree);
    dist.mass(static_cast<Eigen::Index>(degree) - 1) = 1.0;
    return dist;
  }

  std::size_t max_degree() const { return static_cast<std::size_t>(mass.size()); }

  /// Mass at `degree`; zero outside the tracked range.
  double at(std::size_t degree) const {
    if (degree == 0 || degree > max_degree()) return 0.0;
    return mass(static_cast<Eigen::Index>(degree) - 1);
  }

  double total() const { return mass.sum(); }

  /// Copy with dimension `max_degree`: zero padded, or with the tail folded into the last bin.
  DegreeDistribution resized(std::size_t max_degree) const {
    auto out = zeros(max_degree);
    if (max_degree == 0) return out;
    for (Eigen::Index k = 0; k < mass.size(); ++k) {
      auto dst = std::min<Eigen::Index>(k, static_cast<Eigen::Index>(max_degree) - 1);
      out.mass(dst) += mass(k);
    }
    return out;
  }

  bool is_valid(double tol = 1e-9) const {
    if (mass.size() == 0) return false;
    return mass.minCoeff() >= -tol && std::abs(total() - 1.0) <= tol;
  }
};

/// Distribution over non-isolated nodes from a degree histogram f (index = degree):
/// g[i] = f[i] / (N - f[0]). Degrees above `max_degree` fold into the last bin.
inline DegreeDistribution distribution_from_histogram(const std::vector<std::size_t>& hist,
                                                      std::size_t max_degree) {
  std::size_t count = 0;
  for (std::size_t deg = 1; deg < hist.size(); ++deg) count += hist[deg];
  if (count == 0) throw Error("graph has no edges, degree distribution undefined");
  auto out = DegreeDistribution::zeros(max_degree);
  const double n = static_cast<double>(count);
  for (std::size_t deg = 1; deg < hist.size(); ++deg) {
    if (hist[deg] == 0) continue;
    auto idx = static_cast<Eigen::Index>(std::min(deg, max_degree) - 1);
    out.mass(idx) += static_cast<double>(hist[deg]) / n;
  }
  return out;
}

inline double total_variation(const DegreeDistribution& a, const DegreeDistribution& b) {
  const std::size_t d = std::max(a.max_degree(), b.max_degree());
  return 0.5 * (a.resized(d).mass - b.resized(d).mass).cwiseAbs().sum();
}

}  // namespace degreeflow
