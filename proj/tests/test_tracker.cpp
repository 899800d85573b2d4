#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "degreeflow/tracker.hpp"

using namespace degreeflow;

namespace {

DynamicGraph sample_graph(std::uint64_t seed, std::size_t n0 = 60) {
  GraphParams params;
  params.initial.size = n0;
  auto g = make_initial_graph(params);
  Rng rng = make_stream(seed);
  for (int n = 0; n < 5000; ++n) evolve_step(g, params, 0, rng);
  return g;
}

GraphParams small_fast(double q = 0.5) {
  GraphParams params;
  params.initial.size = 20;
  params.p = {0.4};
  params.q = {q};
  return params;
}

double tail_mean(const std::vector<double>& xs, std::size_t from) {
  return std::accumulate(xs.begin() + static_cast<long>(from), xs.end(), 0.0) /
         static_cast<double>(xs.size() - from);
}

}  // namespace

TEST(Observe, WithoutNoiseEqualsEmpirical) {
  const auto g = sample_graph(1);
  Rng rng = make_stream(2);
  const auto y = observe(g, NoiseModel::none(), rng);
  EXPECT_EQ((y.mass - empirical_distribution(g).mass).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Observe, SwapNoiseIsZeroSumAndFeasible) {
  const auto g = sample_graph(3);
  Rng rng = make_stream(4);
  std::vector<std::size_t> counts(g.degree_histogram().begin() + 1, g.degree_histogram().end());
  for (int t = 0; t < 2000; ++t) {
    const auto w = swap_noise(counts, 3.0, rng);
    EXPECT_EQ(std::accumulate(w.begin(), w.end(), 0LL), 0);
    for (std::size_t k = 0; k < counts.size(); ++k) ASSERT_GE(static_cast<long long>(counts[k]) + w[k], 0);
    const auto y = observe(g, NoiseModel::swaps(3.0), rng);
    ASSERT_NEAR(y.total(), 1.0, 1e-12);
    ASSERT_GE(y.mass.minCoeff(), 0.0);
  }
}

TEST(Observe, NoiseHasZeroMean) {
  const auto g = sample_graph(5);
  const auto truth = empirical_distribution(g);
  Rng rng = make_stream(6);
  const int draws = 100000;
  const auto d = static_cast<Eigen::Index>(truth.max_degree());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d), sq = Eigen::VectorXd::Zero(d);
  for (int t = 0; t < draws; ++t) {
    const auto y = observe(g, NoiseModel::swaps(3.0), rng, truth.max_degree());
    sum += y.mass;
    sq += y.mass.cwiseProduct(y.mass);
  }
  const Eigen::VectorXd mean = sum / draws;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double var = sq(k) / draws - mean(k) * mean(k);
    const double se = std::sqrt(std::max(var, 0.0) / draws);
    EXPECT_LE(std::abs(mean(k) - truth.mass(k)), 3.0 * se + 1e-15) << "degree " << k + 1;
  }
}

TEST(SaUpdate, HalfStepBetweenUnitVectors) {
  TrackerState s{DegreeDistribution::point_mass(1, 4), 0.5, 0};
  s = sa_update(s, DegreeDistribution::point_mass(2, 4));
  EXPECT_DOUBLE_EQ(s.g_hat.at(1), 0.5);
  EXPECT_DOUBLE_EQ(s.g_hat.at(2), 0.5);
  EXPECT_EQ(s.step_count, 1u);
}

TEST(SaUpdate, PadsShorterVector) {
  TrackerState s{DegreeDistribution::point_mass(1, 2), 0.5, 0};
  s = sa_update(s, DegreeDistribution::point_mass(4, 4));
  EXPECT_EQ(s.g_hat.max_degree(), 4u);
  EXPECT_DOUBLE_EQ(s.g_hat.at(4), 0.5);
}

TEST(SaUpdate, RejectsStepOutsideUnitInterval) {
  for (double eps : {0.0, 1.0, -0.1}) {
    TrackerState s{DegreeDistribution::uniform(3), eps, 0};
    EXPECT_THROW(sa_update(s, DegreeDistribution::uniform(3)), Error);
  }
}

TEST(SaUpdate, GeometricClosedForm) {
  const auto g0 = DegreeDistribution::point_mass(1, 3);
  const auto y = DegreeDistribution::uniform(3);
  TrackerState s{g0, 0.1, 0};
  for (int n = 0; n < 10; ++n) s = sa_update(s, y);
  const double w = std::pow(0.9, 10);
  const Eigen::VectorXd expected = w * g0.mass + (1 - w) * y.mass;
  EXPECT_LT((s.g_hat.mass - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TrackerProperties, DiscountingIdentityAndConvexity) {
  Rng rng = make_stream(7);
  for (int trial = 0; trial < 20; ++trial) {
    const double eps = 0.01 + 0.5 * uniform01(rng);
    std::vector<DegreeDistribution> ys;
    for (int n = 0; n < 50; ++n) {
      Eigen::VectorXd m(6);
      for (Eigen::Index k = 0; k < 6; ++k) m(k) = uniform01(rng);
      ys.emplace_back(m / m.sum());
    }
    TrackerState s{DegreeDistribution::uniform(6), eps, 0};
    for (const auto& y : ys) {
      s = sa_update(s, y);
      ASSERT_NEAR(s.g_hat.total(), 1.0, 1e-9);
      ASSERT_GE(s.g_hat.mass.minCoeff(), -1e-12);
    }
    const double n = static_cast<double>(ys.size());
    Eigen::VectorXd closed = std::pow(1 - eps, n) * DegreeDistribution::uniform(6).mass;
    for (std::size_t k = 0; k < ys.size(); ++k) {
      closed += eps * std::pow(1 - eps, n - 1 - static_cast<double>(k)) * ys[k].mass;
    }
    EXPECT_LT((s.g_hat.mass - closed).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(TrackerProperties, ObliviousToTheta) {
  // sa_update sees only (g_hat, y, eps): two runs fed the same observations
  // agree bitwise whatever produced them.
  Rng rng = make_stream(8);
  std::vector<DegreeDistribution> ys;
  for (int n = 0; n < 200; ++n) ys.push_back(observe(sample_graph(9 + n % 3), NoiseModel::swaps(2), rng, 30));
  TrackerState a{DegreeDistribution::uniform(30), 0.05, 0}, b = a;
  for (const auto& y : ys) {
    a = sa_update(a, y);
    b = sa_update(b, y);
  }
  EXPECT_EQ(a.g_hat.mass, b.g_hat.mass);
}

TEST(RunTracking, StaticGraphConvergesToItsDistribution) {
  auto params = small_fast(0.0);
  params.initial.size = 30;
  Rng rng = make_stream(10);
  TrackingOptions opts;
  const auto run = run_tracking(params, 0.05, NoiseModel::none(), 2000, rng, opts);
  const auto g = empirical_distribution(DynamicGraph::cycle(30), run.dim);
  EXPECT_LT((run.final_estimate.mass - g.mass).cwiseAbs().maxCoeff(), 1e-12);
  const double gap = (g.mass - run.targets[0].mass).squaredNorm();
  EXPECT_NEAR(run.series.mse.back(), gap, 1e-12);
  EXPECT_EQ(run.deletions, 0u);
}

TEST(RunTracking, RejectsGrowingMode) {
  auto params = small_fast();
  params.r = 1.0;
  Rng rng = make_stream(11);
  EXPECT_THROW(run_tracking(params, 0.01, NoiseModel::none(), 10, rng), Error);
}

TEST(RunTracking, ScaledErrorIdentity) {
  auto params = small_fast();
  Rng rng = make_stream(12);
  TrackingOptions opts;
  opts.stride = 7;
  const auto run = run_tracking(params, 0.02, NoiseModel::swaps(2), 500, rng, opts);
  for (std::size_t i = 0; i < run.series.errors.size(); ++i) {
    const auto n = run.series.sample_steps[i];
    EXPECT_NEAR(run.series.scaled_error(i).norm(), run.series.nu_norm[n], 1e-12);
    EXPECT_LT((run.series.scaled_error(i) * std::sqrt(0.02) - run.series.errors[i]).cwiseAbs().maxCoeff(),
              1e-15);
  }
}

TEST(RunTracking, MseShrinksWithStepSize) {
  TrackingOptions opts;
  opts.keep_error_vectors = false;
  opts.stride = 1u << 30;
  opts.warmup = 20000;
  auto steady = [&](double eps) {
    double total = 0.0;
    for (std::uint64_t rep = 0; rep < 4; ++rep) {
      Rng rng = make_stream(13, rep);
      const auto run = run_tracking(small_fast(), eps, NoiseModel::swaps(2), 100000, rng, opts);
      total += tail_mean(run.series.mse, 90000);
    }
    return total / 4.0;
  };
  EXPECT_LT(steady(0.01), 10.0 * steady(0.001));
  EXPECT_GT(steady(0.02), steady(0.005));
}

TEST(OdeReference, EquilibriumStaysPut) {
  const auto g = DegreeDistribution::uniform(4);
  const auto traj = ode_reference(std::vector<std::size_t>(100, 0), {g}, 0.01, g.mass);
  ASSERT_EQ(traj.size(), 101u);
  EXPECT_LT((traj.back() - g.mass).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(OdeReference, ExponentialApproach) {
  const auto target = DegreeDistribution::uniform(4);
  const Eigen::VectorXd e1 = DegreeDistribution::point_mass(1, 4).mass;
  const auto traj = ode_reference(std::vector<std::size_t>(100, 0), {target}, 0.01, e1);
  const Eigen::VectorXd expected = target.mass + std::exp(-1.0) * (e1 - target.mass);
  EXPECT_LT((traj[100] - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(OdeReference, SaGapShrinksWithStepSize) {
  // Sup-norm gap over t in [0, 20] between the iterates and the ODE started at the same point.
  auto gap = [](double eps) {
    TrackingOptions opts;
    opts.keep_error_vectors = false;
    opts.warmup = 20000;
    const auto steps = static_cast<std::size_t>(std::lround(20.0 / eps));
    double total = 0.0;
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
      Rng rng = make_stream(14, rep);
      const auto run = run_tracking(small_fast(), eps, NoiseModel::swaps(2), steps, rng, opts);
      const auto ode = ode_reference(run.theta_path, run.targets, eps, run.g_hat_trajectory.front());
      double sup = 0.0;
      for (std::size_t n = 0; n < steps; ++n) {
        sup = std::max(sup, (run.g_hat_trajectory[n] - ode[n]).cwiseAbs().maxCoeff());
      }
      total += sup;
    }
    return total / 20.0;
  };
  EXPECT_GT(gap(0.005) / gap(0.005 / 4), 1.5);
}

TEST(ScaledCovariance, ZeroErrorsGiveZeroMatrix) {
  ErrorSeries s;
  s.epsilon = 0.01;
  for (std::size_t n = 0; n < 2000; ++n) {
    s.mse.push_back(0.0);
    s.sample_steps.push_back(n);
    s.errors.push_back(Eigen::VectorXd::Zero(3));
  }
  EXPECT_EQ(scaled_error_covariance(s, 100).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(scaled_error_covariance(s, 1500), Error);
}

TEST(ScaledCovariance, SymmetricAndPsd) {
  Rng rng = make_stream(15);
  TrackingOptions opts;
  opts.warmup = 2000;
  const auto run = run_tracking(small_fast(), 0.05, NoiseModel::swaps(2), 5000, rng, opts);
  const auto c = scaled_error_covariance(run.series, 100);
  EXPECT_EQ((c - c.transpose()).cwiseAbs().maxCoeff(), 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9);
}

TEST(TargetDistribution, ZeroDeletionFallsBackToRate) {
  const auto a = target_distribution(0.4, 0.0, 100, 50);
  const auto b = target_distribution(0.4, 0.1, 100, 50);
  EXPECT_LT(total_variation(a, b), 1e-8);
}
