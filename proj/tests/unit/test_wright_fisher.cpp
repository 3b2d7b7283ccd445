#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "wflab/error.hpp"
#include "wflab/statistics.hpp"
#include "wflab/wright_fisher.hpp"

using namespace wflab;

namespace {

double beta_fn(double a, double b) { return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b)); }

const std::vector<WFParams> kPoints{{0, 1, 1}, {4, 2, 2}, {-3, 0.5, 2}, {7, 0.3, 0.8}, {-9, 3, 1.2}, {0.5, 5, 0.4}};

}  // namespace

TEST(Params, Validation) {
  EXPECT_NO_THROW((WFParams{4, 2, 2}.validate()));
  for (WFParams bad : {WFParams{0, 0, 1}, WFParams{0, 1, -1}, WFParams{NAN, 1, 1}}) {
    try {
      bad.validate();
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidParameters);
    }
  }
  EXPECT_TRUE((WFParams{0, 1, 1}.lan_regime()));
  EXPECT_FALSE((WFParams{0, 0.9, 2}.lan_regime()));
}

TEST(Coefficients, Examples) {
  auto c = wf_coefficients({0, 1, 1}, 0.5);
  EXPECT_DOUBLE_EQ(c.drift, 0.0);
  EXPECT_DOUBLE_EQ(c.diffusion_sq, 0.25);
  c = wf_coefficients({4, 2, 2}, 0.25);
  EXPECT_DOUBLE_EQ(c.drift, 0.875);
  EXPECT_DOUBLE_EQ(c.diffusion_sq, 0.1875);
  c = wf_coefficients({0, 2, 1}, 0.0);
  EXPECT_DOUBLE_EQ(c.drift, 1.0);
  EXPECT_DOUBLE_EQ(c.diffusion_sq, 0.0);
}

TEST(Coefficients, OutOfRange) {
  try {
    wf_coefficients({0, 1, 1}, 1.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StateOutOfRange);
  }
}

TEST(Coefficients, DriftPointsInwardAtBoundaries) {
  for (const auto& p : kPoints) {
    EXPECT_DOUBLE_EQ(wf_coefficients(p, 0.0).drift, p.theta1 / 2);
    EXPECT_DOUBLE_EQ(wf_coefficients(p, 1.0).drift, -p.theta2 / 2);
  }
}

TEST(StationaryDensity, BetaCases) {
  EXPECT_NEAR(StationaryLaw({0, 2.5, 0.7}).normalizer() / beta_fn(2.5, 0.7), 1.0, 1e-12);
  EXPECT_NEAR(stationary_density({0, 2, 2}, 0.5), 1.5, 1e-12);
}

TEST(StationaryDensity, NormalizerMatchesSimpsonAndBound) {
  const double G = oracle::simpson([](double x) { return oracle::wf_weight(4, 2, 2, x); }, 0, 1, 1000000);
  const double g = StationaryLaw({4, 2, 2}).normalizer();
  EXPECT_NEAR(g / G, 1.0, 1e-10);
  EXPECT_LE(g, std::exp(4.0) / 6.0);
}

TEST(StationaryDensity, NormalizerBoundEverywhere) {
  for (const auto& p : kPoints) {
    const double bound = std::max(std::exp(p.s), 1.0) * beta_fn(p.theta1, p.theta2);
    EXPECT_LE(StationaryLaw(p).normalizer(), bound * (1 + 1e-9));
  }
}

TEST(StationaryDensity, ReflectionSymmetry) {
  for (const auto& p : kPoints) {
    for (double x : {0.01, 0.3, 0.77, 0.999}) {
      const double a = stationary_density(p, x);
      const double b = stationary_density({-p.s, p.theta2, p.theta1}, 1 - x);
      EXPECT_NEAR(a / b, 1.0, 1e-10);
    }
  }
}

TEST(StationaryDensity, NegativeSelectionUsesKummerTransform) {
  // Large negative s: compare with direct Simpson in log-safe form.
  const WFParams p{-40, 2, 3};
  const double G = oracle::simpson([&](double x) { return oracle::wf_weight(p.s, 2, 3, x); }, 0, 1, 1000000);
  EXPECT_NEAR(std::exp(log_wf_normalizer(p.s, 2, 3)) / G, 1.0, 1e-9);
}

TEST(StationaryExpectation, Examples) {
  EXPECT_NEAR(stationary_expectation({4, 2, 2}, [](double) { return 1.0; }), 1.0, 1e-10);
  EXPECT_NEAR(stationary_expectation({0, 2, 2}, [](double x) { return x * (1 - x); }), 0.2, 1e-12);
  const double v = stationary_expectation({4, 2, 2}, [](double x) { return x * (1 - x); });
  const double ref = oracle::simpson([](double x) { return oracle::wf_weight(4, 2, 2, x, 1, 1); }, 0, 1) /
                     oracle::simpson([](double x) { return oracle::wf_weight(4, 2, 2, x); }, 0, 1);
  EXPECT_GT(v, 0.15);
  EXPECT_LT(v, 0.25);
  EXPECT_NEAR(v / ref, 1.0, 1e-8);
}

TEST(StationaryExpectation, DivergentMoment) {
  try {
    stationary_expectation({0, 1, 2}, [](double x) { return (1 - x) / x; });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MomentInfinite);
  }
}

TEST(Fisher, Examples) {
  const auto f = fisher_matrix({0, 2, 2});
  EXPECT_NEAR(f(0, 0), 0.05, 1e-12);
  EXPECT_NEAR(f(0, 1), 0.125, 1e-12);
  EXPECT_EQ(f(1, 2), -0.25);
  EXPECT_NEAR(selection_information({0, 2, 2}), 0.05, 1e-12);
  // E[(1-x)/x] under Beta(2,2) = 2, so the (theta1, theta1) entry is 1/2.
  EXPECT_NEAR(f(1, 1), 0.5, 1e-10);
}

TEST(Fisher, MutationEntriesInfiniteAtOrBelowOne) {
  const auto f = fisher_matrix({1, 1, 3});
  EXPECT_TRUE(std::isinf(f(1, 1)));
  EXPECT_TRUE(std::isfinite(f(2, 2)));
  EXPECT_FALSE(f.all_finite());
  EXPECT_EQ(f(1, 2), -0.25);
  EXPECT_TRUE(std::isinf(fisher_matrix({0, 2, 0.5})(2, 2)));
}

TEST(Fisher, SymmetricPositiveSemidefinite) {
  for (const WFParams p : {WFParams{4, 2, 2}, WFParams{-2, 1.3, 4}, WFParams{6, 3, 1.1}}) {
    const auto f = fisher_matrix(p);
    ASSERT_TRUE(f.all_finite());
    Eigen::Matrix3d m;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        m(i, j) = f(i, j);
        EXPECT_NEAR(f(i, j), f(j, i), 1e-12);
      }
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(m);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
  }
}

TEST(Fisher, AgreesWithSimpsonOracle) {
  const WFParams p{4, 2, 2};
  const auto f = fisher_matrix(p);
  auto E = [&](double i, double j) {
    return oracle::simpson([&](double x) { return oracle::wf_weight(4, 2, 2, x, i, j); }, 0, 1) /
           oracle::simpson([&](double x) { return oracle::wf_weight(4, 2, 2, x); }, 0, 1);
  };
  EXPECT_NEAR(f(0, 0) / (0.25 * E(1, 1)), 1, 1e-8);
  EXPECT_NEAR(f(0, 1) / (0.25 * E(0, 1)), 1, 1e-8);
  EXPECT_NEAR(f(0, 2) / (-0.25 * E(1, 0)), 1, 1e-8);
  EXPECT_NEAR(f(1, 1) / (0.25 * E(-1, 1)), 1, 1e-8);
  EXPECT_NEAR(f(2, 2) / (0.25 * E(1, -1)), 1, 1e-8);
}

TEST(Sampler, NeutralIsPlainBeta) {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_stationary({0, 2, 3}, a), b.beta(2, 3));
}

TEST(Sampler, ReproducibleBitForBit) {
  Rng a(99), b(99);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_stationary({4, 2, 2}, a), sample_stationary({4, 2, 2}, b));
}

TEST(Sampler, AcceptanceRateMatchesEnvelope) {
  // Acceptance probability of the exp(4x - 4) envelope over Beta(2,2) proposals.
  Rng rng(3);
  const int n = 100000;
  int accepted = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.beta(2, 2);
    if (rng.uniform() < std::exp(4 * x - 4)) ++accepted;
  }
  const double p = oracle::simpson([](double x) { return 6 * x * (1 - x) * std::exp(4 * x); }, 0, 1) / std::exp(4.0);
  const double rate = static_cast<double>(accepted) / n;
  EXPECT_LE(std::abs(rate - p), 3 * std::sqrt(p * (1 - p) / n));
}

TEST(Sampler, KolmogorovSmirnovAgainstQuadratureCdf) {
  const WFParams p{4, 2, 2};
  const int cells = 200000;
  std::vector<double> cdf(cells + 1, 0.0);
  for (int i = 1; i <= cells; ++i) {
    const double x0 = double(i - 1) / cells, x1 = double(i) / cells;
    cdf[i] = cdf[i - 1] + 0.5 * (oracle::wf_weight(4, 2, 2, x0) + oracle::wf_weight(4, 2, 2, x1)) / cells;
  }
  for (double& c : cdf) c /= cdf.back();
  auto F = [&](double x) {
    const double pos = x * cells;
    const int i = std::min(cells - 1, static_cast<int>(pos));
    return cdf[i] + (pos - i) * (cdf[i + 1] - cdf[i]);
  };
  Rng rng(2024);
  std::vector<double> draws(100000);
  for (double& d : draws) d = sample_stationary(p, rng);
  EXPECT_LT(ks_distance(draws, F), 1.628 / std::sqrt(100000.0));
  // The library CDF agrees with the oracle.
  for (double x : {0.1, 0.5, 0.9}) EXPECT_NEAR(StationaryLaw(p).cdf(x), F(x), 1e-9);
}

TEST(Boundaries, Classification) {
  auto c = classify_boundaries({0, 0.5, 2});
  EXPECT_EQ(c.at_zero, BoundaryType::Regular);
  EXPECT_EQ(c.at_one, BoundaryType::Entrance);
  c = classify_boundaries({0, 1, 1});
  EXPECT_EQ(c.at_zero, BoundaryType::Entrance);
  EXPECT_EQ(c.at_one, BoundaryType::Entrance);
  EXPECT_EQ(to_string(BoundaryType::Regular), "regular");
  try {
    classify_boundaries({0, 0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidParameters);
  }
}
