#include <vector>

#include <gtest/gtest.h>

#include "degreeflow/chain.hpp"
#include "oracles.hpp"

using namespace degreeflow;

namespace {

Eigen::MatrixXd two_state(double a, double b) {
  Eigen::MatrixXd q(2, 2);
  q << -a, a, b, -b;
  return q;
}

}  // namespace

TEST(ThetaChain, SingleStateNeverMoves) {
  ThetaChain chain;
  Rng rng = make_stream(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(step_theta(chain, rng), 0u);
  EXPECT_TRUE(validate(chain).empty());
  EXPECT_DOUBLE_EQ(stationary_pi(chain)(0), 1.0);
}

TEST(ThetaChain, TransitionIsIdentityPlusRhoQ) {
  const auto chain = ThetaChain::from_generator(two_state(1, 1), 0.1, Eigen::Vector2d(0.5, 0.5));
  Eigen::Matrix2d expected;
  expected << 0.9, 0.1, 0.1, 0.9;
  EXPECT_LT((chain.transition() - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ThetaChain, GeneratorRecoveredFromTransition) {
  Eigen::Matrix2d a;
  a << 0.8, 0.2, 0.1, 0.9;
  const auto chain = ThetaChain::from_transition(a, 0.1, Eigen::Vector2d(1, 0));
  EXPECT_LT((chain.generator() - two_state(2, 1)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(ThetaChain::from_transition(a, 0.0, Eigen::Vector2d(1, 0)), ConfigError);
}

TEST(ThetaChain, SymmetricOccupancyIsHalf) {
  auto chain = ThetaChain::from_generator(two_state(1, 1), 0.1, Eigen::Vector2d(0.5, 0.5));
  Rng rng = make_stream(2);
  chain.reset(rng);
  std::size_t first = 0;
  const int steps = 100000;
  for (int i = 0; i < steps; ++i) first += step_theta(chain, rng) == 0 ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(first) / steps, 0.5, 0.02);
}

TEST(StationaryPi, KnownCases) {
  const auto sym = ThetaChain::from_generator(two_state(1, 1), 0.1, Eigen::Vector2d(1, 0));
  EXPECT_NEAR(stationary_pi(sym)(0), 0.5, 1e-14);
  const auto skew = ThetaChain::from_generator(two_state(2, 1), 0.1, Eigen::Vector2d(1, 0));
  const auto pi = stationary_pi(skew);
  EXPECT_NEAR(pi(0), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(pi(1), 2.0 / 3.0, 1e-14);
  EXPECT_LT((skew.transition().transpose() * pi - pi).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(StationaryPi, RejectsReducibleGenerator) {
  Eigen::Matrix3d q;
  q << -1, 1, 0, 1, -1, 0, 0, 0, 0;
  const auto chain = ThetaChain::from_generator(q, 0.1, Eigen::Vector3d(1, 0, 0));
  EXPECT_THROW(stationary_pi(chain), Error);
}

TEST(Validate, ReportsEachViolation) {
  EXPECT_TRUE(validate(ThetaChain::from_generator(two_state(1, 1), 0.1, Eigen::Vector2d(1, 0))).empty());

  Eigen::Matrix2d bad_row;
  bad_row << -1, 1.1, 1, -1;
  EXPECT_EQ(validate(ThetaChain::from_generator(bad_row, 0.1, Eigen::Vector2d(1, 0))),
            std::vector<std::string>{"row-sum"});

  EXPECT_EQ(validate(ThetaChain::from_generator(two_state(2, 2), 0.6, Eigen::Vector2d(1, 0))),
            std::vector<std::string>{"A-entry-range"});

  Eigen::Matrix2d neg;
  neg << 1, -1, 1, -1;
  const auto v = validate(ThetaChain::from_generator(neg, 0.1, Eigen::Vector2d(1, 0)));
  EXPECT_NE(std::find(v.begin(), v.end(), "off-diagonal-negative"), v.end());

  EXPECT_EQ(validate(ThetaChain::from_generator(two_state(1, 1), 0.1, Eigen::Vector2d(0.7, 0.7))),
            std::vector<std::string>{"pi0"});
  EXPECT_EQ(validate(ThetaChain::from_generator(two_state(1, 0), 0.1, Eigen::Vector2d(1, 0))),
            std::vector<std::string>{"not-irreducible"});
}

TEST(ChainProperties, TransitionFrequenciesMatchA) {
  Eigen::Matrix3d q;
  q << -3, 1, 2, 1, -2, 1, 2, 2, -4;
  auto chain = ThetaChain::from_generator(q, 0.2, Eigen::Vector3d(1, 0, 0));
  ASSERT_TRUE(validate(chain).empty());
  Rng rng = make_stream(3);
  chain.reset(rng);
  Eigen::Matrix3d counts = Eigen::Matrix3d::Zero();
  std::size_t prev = chain.state();
  for (int i = 0; i < 200000; ++i) {
    const auto next = step_theta(chain, rng);
    counts(static_cast<Eigen::Index>(prev), static_cast<Eigen::Index>(next)) += 1.0;
    prev = next;
  }
  for (Eigen::Index i = 0; i < 3; ++i) {
    const double n = counts.row(i).sum();
    std::vector<double> obs, exp;
    for (Eigen::Index j = 0; j < 3; ++j) {
      obs.push_back(counts(i, j));
      exp.push_back(n * chain.transition()(i, j));
    }
    EXPECT_LT(oracle::chi_square(obs, exp), oracle::chi_square_critical_01(2.0)) << "row " << i;
  }
}

TEST(ChainProperties, DoublingRhoHalvesSojourn) {
  auto mean_sojourn = [](double rho) {
    auto chain = ThetaChain::from_generator(two_state(1, 1), rho, Eigen::Vector2d(1, 0));
    Rng rng = make_stream(4);
    chain.reset(rng);
    std::size_t switches = 0, prev = chain.state();
    const int steps = 100000;
    for (int i = 0; i < steps; ++i) {
      const auto s = step_theta(chain, rng);
      switches += s != prev ? 1 : 0;
      prev = s;
    }
    return static_cast<double>(steps) / static_cast<double>(switches);
  };
  const double ratio = mean_sojourn(0.01) / mean_sojourn(0.02);
  EXPECT_NEAR(ratio, 2.0, 0.4);
}
