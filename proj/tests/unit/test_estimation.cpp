#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "wflab/error.hpp"
#include "wflab/estimation.hpp"
#include "wflab/statistics.hpp"

using namespace wflab;

namespace {

SamplePath make_path(std::vector<double> values, double dt = 1.0, double t0 = 0.0) {
  SamplePath p;
  p.t0 = t0;
  p.dt = dt;
  p.values = std::move(values);
  p.T = dt * static_cast<double>(p.values.size() - 1);
  return p;
}

SamplePath two_point() { return make_path({0.5, 0.6}); }

SamplePath sim(double T, std::uint64_t seed, StartSpec start = StartSpec::fixed(0.25)) {
  return simulate_path({4, 2, 2}, {T, 1e-3, start, seed});
}

}  // namespace

TEST(SufficientStatsTest, TwoPointPath) {
  const auto st = sufficient_stats(two_point(), 1, 1);
  EXPECT_NEAR(st.delta_x, 0.1, 1e-15);
  EXPECT_NEAR(st.mut_integral, -0.2, 1e-15);
  EXPECT_NEAR(st.sel_integral, 0.24, 1e-15);
  EXPECT_NEAR(st.A, 0.1, 1e-15);
  EXPECT_NEAR(st.B, 0.06, 1e-15);
}

TEST(SufficientStatsTest, ConstantSymmetricPath) {
  const auto path = make_path(std::vector<double>(11, 0.5), 0.1);
  EXPECT_EQ(sufficient_stats(path, 1, 1).A, 0.0);
  EXPECT_EQ(mle_riemann(path, 1, 1).estimate, 0.0);
  EXPECT_EQ(mle_score(path, 1, 1).estimate, 0.0);
}

TEST(SufficientStatsTest, TimeShiftInvariance) {
  auto path = sim(2.0, 4);
  const auto a = sufficient_stats(path, 2, 2);
  path.t0 = 37.5;
  const auto b = sufficient_stats(path, 2, 2);
  EXPECT_EQ(a.A, b.A);
  EXPECT_EQ(a.B, b.B);
  EXPECT_EQ(a.mut_integral, b.mut_integral);
}

TEST(SufficientStatsTest, DegeneratePath) {
  try {
    sufficient_stats(make_path({0.0, 0.0, 0.0}), 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegeneratePath);
  }
}

TEST(Mle, TwoPointExamples) {
  EXPECT_NEAR(mle_riemann(two_point(), 1, 1).estimate, 1.25, 1e-14);
  EXPECT_NEAR(mle_score(two_point(), 1, 1).estimate, 0.1 / 0.06, 1e-14);
  EXPECT_EQ(mle_riemann(two_point(), 1, 1).method, EstimatorKind::MleRiemann);
}

TEST(Mle, ScoreMinusRiemannIdentity) {
  for (std::uint64_t r = 0; r < 50; ++r) {
    const auto path = sim(r % 2 ? 1.0 : 7.0, r);
    const auto st = sufficient_stats(path, 2, 2);
    const double d = mle_score(path, 2, 2).estimate - mle_riemann(path, 2, 2).estimate;
    EXPECT_NEAR(d, st.delta_x / st.sel_integral, 1e-12);
  }
}

TEST(Mle, GridArgmaxOfLogLikelihood) {
  for (std::uint64_t r = 0; r < 5; ++r) {
    const auto path = sim(10.0, 100 + r);
    const auto st = sufficient_stats(path, 2, 2);
    const double step = 1e-4;
    double best = 0.0, best_ll = -INFINITY;
    for (int k = -100000; k <= 150000; ++k) {
      const double s = k * step;
      const double ll = log_likelihood_ratio(st, s, 0.0);
      if (ll > best_ll) {
        best_ll = ll;
        best = s;
      }
    }
    EXPECT_LE(std::abs(best - st.A / st.B), step);
  }
}

TEST(Mle, JsonKeys) {
  const auto j = to_json(mle_riemann(two_point(), 1, 1));
  for (const char* k : {"method", "estimate", "T", "A", "B", "delta_x", "mut_integral", "sel_integral"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  EXPECT_EQ(j["method"], "mle_riemann");
  EXPECT_EQ(estimator_from_string("mle_score"), EstimatorKind::MleScore);
  EXPECT_THROW(estimator_from_string("mle"), Error);
}

TEST(LogLikelihood, Examples) {
  const auto path = two_point();
  EXPECT_EQ(log_likelihood_ratio(path, 2.0, 2.0, 1, 1), 0.0);
  EXPECT_NEAR(log_likelihood_ratio(path, 1.0, 0.0, 1, 1), 0.07, 1e-15);
  EXPECT_NEAR(log_likelihood_ratio(path, 1.0, 3.0, 1, 1), -log_likelihood_ratio(path, 3.0, 1.0, 1, 1), 1e-15);
}

TEST(LogLikelihood, CocycleIdentity) {
  for (auto start : {StartSpec::fixed(0.25), StartSpec::stationary()}) {
    const auto path = sim(3.0, 9, start);
    for (auto [a, b, c] : {std::tuple{1.0, 4.0, 7.0}, std::tuple{-2.0, 0.5, 3.3}}) {
      const double lhs = log_likelihood_ratio(path, a, c, 2, 2);
      const double rhs = log_likelihood_ratio(path, a, b, 2, 2) + log_likelihood_ratio(path, b, c, 2, 2);
      EXPECT_NEAR(lhs, rhs, 1e-12);
    }
  }
}

TEST(LogLikelihood, StationaryStartAddsDensityRatio) {
  auto path = sim(3.0, 10, StartSpec::stationary());
  const double x0 = path.values.front();
  auto G = [](double s) {
    return oracle::simpson([&](double x) { return oracle::wf_weight(s, 2, 2, x); }, 0, 1);
  };
  const double nu = 1.5 * x0 - std::log(G(5.5) / G(4.0));
  const double quad = log_likelihood_ratio(sufficient_stats(path, 2, 2), 5.5, 4.0);
  EXPECT_NEAR(log_likelihood_ratio(path, 5.5, 4.0, 2, 2), quad + nu, 1e-9);
}

TEST(ZProcess, ZeroAndOutOfRange) {
  const auto path = sim(1.0, 2);
  EXPECT_EQ(likelihood_ratio_Z(path, 4, 0, 2, 2), 1.0);
  EXPECT_NEAR(likelihood_ratio_Z(path, 4, 1, 2, 2), std::exp(log_likelihood_ratio(path, 5, 4, 2, 2)), 1e-12);
  try {
    likelihood_ratio_Z(path, 4, 10, 2, 2, Support{0, 8});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LocalParameterOutOfRange);
  }
}

TEST(Posterior, FlatPriorGaussianShape) {
  const auto st = sufficient_stats(sim(20.0, 12), 2, 2);
  const auto curve = posterior_density(st, Prior::uniform(-40, 50), 4001);
  const auto it = std::max_element(curve.density.begin(), curve.density.end());
  const double mode = curve.s[it - curve.density.begin()];
  EXPECT_NEAR(mode, st.A / st.B, 90.0 / 4000);
  const Posterior post(st, Prior::uniform(-40, 50));
  const double mass = adaptive_quad([&](double s) { return post.density(s); }, -40, 50).value;
  EXPECT_NEAR(mass, 1.0, 1e-8);
}

TEST(Posterior, ZeroInformationIsExponential) {
  SufficientStats st;
  st.A = 0.3;
  st.B = 0.0;
  const Posterior post(st, Prior::uniform(0, 10));
  const double ratio = post.density(7.0) / post.density(2.0);
  EXPECT_NEAR(ratio, std::exp(0.3 * 5.0), 1e-10);
}

TEST(Bayes, SharpPosteriorGivesMle) {
  SufficientStats st;
  st.B = 400.0;
  st.A = 4.0 * st.B;
  EXPECT_NEAR(bayes_estimator(st, Prior::uniform(0, 8), Loss::quadratic(), 10).estimate, 4.0, 0.01);
}

TEST(Bayes, PeakedPriorDominates) {
  SufficientStats st;
  st.B = 0.05;
  st.A = 6.0 * st.B;
  const auto r = bayes_estimator(st, Prior::gaussian(2.0, 0.01, 0, 8), Loss::quadratic(), 1.0);
  EXPECT_NEAR(r.estimate, 2.0, 0.01);
}

TEST(Bayes, QuadraticLossGivesPosteriorMean) {
  const auto st = sufficient_stats(sim(2.0, 31), 2, 2);
  const auto prior = Prior::gaussian(3.0, 2.0, -2.0, 10.0);
  auto w = [&](double s) {
    return prior.density(s) * std::exp(-0.5 * st.B * (s - st.A / st.B) * (s - st.A / st.B));
  };
  const double mean = oracle::simpson([&](double s) { return s * w(s); }, -2, 10, 400000) /
                      oracle::simpson(w, -2, 10, 400000);
  EXPECT_NEAR(bayes_estimator(st, prior, Loss::quadratic(), 2.0).estimate, mean, 1e-6);
}

TEST(Bayes, AbsoluteLossGivesPosteriorMedian) {
  const auto st = sufficient_stats(sim(2.0, 32), 2, 2);
  const auto prior = Prior::uniform(-5.0, 15.0);
  const Posterior post(st, prior);
  const double est = bayes_estimator(st, prior, Loss::absolute(), 2.0).estimate;
  const double below = adaptive_quad([&](double s) { return post.density(s); }, -5.0, est).value;
  EXPECT_NEAR(below, 0.5, 1e-6);
}

TEST(Bayes, FlatPriorAgreesWithMleUpToTruncation) {
  const auto st = sufficient_stats(sim(50.0, 33), 2, 2);
  const double sd = 1.0 / std::sqrt(st.B);
  const double mle = st.A / st.B;
  const auto prior = Prior::uniform(mle - 12 * sd, mle + 12 * sd);
  EXPECT_NEAR(bayes_estimator(st, prior, Loss::quadratic(), 50).estimate, mle, 1e-6);
}

TEST(Bayes, RejectsInadmissibleLoss) {
  const auto st = sufficient_stats(sim(2.0, 34), 2, 2);
  Loss odd{[](double u) { return u; }, 1.0, 1.0, "odd"};
  try {
    bayes_estimator(st, Prior::uniform(0, 8), odd, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ValidationFailed);
  }
}

TEST(LossValidation, Examples) {
  std::vector<double> grid;
  for (int i = -500; i <= 500; ++i) grid.push_back(i * 0.1);
  EXPECT_TRUE(validate_loss(Loss::quadratic(), 10, 0.5, grid).pass());
  EXPECT_TRUE(validate_loss(Loss::absolute(), 10, 0.5, grid).pass());
  const auto odd = validate_loss({[](double u) { return u; }, 1, 1, "odd"}, 10, 0.5, grid);
  EXPECT_FALSE(odd.a1);
  EXPECT_FALSE(odd.pass());
}

TEST(PriorValidation, Examples) {
  std::vector<double> grid;
  for (int i = 0; i <= 800; ++i) grid.push_back(i * 0.01);
  EXPECT_TRUE(validate_prior(Prior::uniform(0, 8), grid).pass());

  Prior negative = Prior::uniform(0, 8);
  negative.density = [](double s) { return s == 4.0 ? -1.0 : 0.125; };
  EXPECT_FALSE(validate_prior(negative, grid).nonnegative);

  Prior half = Prior::uniform(0, 8);
  half.density = [](double) { return 0.0625; };
  const auto rep = validate_prior(half, grid);
  EXPECT_FALSE(rep.unit_mass);
  EXPECT_NEAR(rep.mass, 0.5, 1e-10);
}

TEST(Lan, NoiseFreePathGivesZero) {
  const WFParams p{4, 2, 2};
  const double dt = 1e-3;
  std::vector<double> v{0.3};
  for (int i = 0; i < 2000; ++i) v.push_back(v.back() + wf_coefficients(p, v.back()).drift * dt);
  const auto lan = lan_statistic(make_path(v, dt), p);
  for (double d : lan.delta) EXPECT_NEAR(d, 0.0, 1e-12);
  EXPECT_TRUE(lan.mutation_valid);
}

TEST(Lan, OutsideRegimeFlagsMutation) {
  const WFParams p{1, 0.5, 2};
  const auto lan = lan_statistic(simulate_path(p, {1.0, 1e-3, StartSpec::fixed(0.5), 3}), p);
  EXPECT_FALSE(lan.mutation_valid);
  EXPECT_TRUE(std::isnan(lan.delta[1]));
  EXPECT_TRUE(std::isfinite(lan.delta[0]));
}

TEST(Lan, Reproducible) {
  const WFParams p{4, 2, 2};
  const auto a = lan_statistic(sim(2.0, 5), p);
  const auto b = lan_statistic(sim(2.0, 5), p);
  EXPECT_EQ(a.delta, b.delta);
}

TEST(LanRemainder, ZeroDirection) {
  EXPECT_EQ(lan_remainder(sim(2.0, 6, StartSpec::stationary()), {4, 2, 2}, {0, 0, 0}), 0.0);
}

TEST(LanRemainder, SelectionOnlyOutsideRegime) {
  const WFParams p{1, 0.5, 0.7};
  const auto path = simulate_path(p, {2.0, 1e-3, StartSpec::fixed(0.5), 3});
  EXPECT_TRUE(std::isfinite(lan_remainder(path, p, {1, 0, 0})));
  try {
    lan_remainder(path, p, {0, 1, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LanRegimeRequired);
  }
}

TEST(LanRemainder, MedianShrinksWithHorizon) {
  const WFParams p{4, 2, 2};
  std::vector<double> medians;
  for (double T : {5.0, 20.0, 80.0}) {
    std::vector<double> r;
    for (std::uint64_t k = 0; k < 200; ++k) {
      r.push_back(std::abs(lan_remainder(sim(T, mix_seed(8, k)), p, {1, 0, 0})));
    }
    std::sort(r.begin(), r.end());
    medians.push_back(quantile_sorted(r, 0.5));
  }
  EXPECT_LT(medians[1], medians[0]);
  EXPECT_LT(medians[2], medians[1]);
}
