#include <cmath>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/tools/roots.hpp>
#include <gtest/gtest.h>

#include "lgdcap/capital.hpp"

using namespace lgdcap;

namespace {

const ModelParams kA{0.0133, 0.0623, 0.456, 0.457, 0.032};
const ModelParams kB{0.03, 0.15, 0.35, 0.3, 0.3};

PosteriorSamples two_atoms() {
    PosteriorSamples s;
    for (const auto& th : {kA, kB})
        for (std::size_t k = 0; k < ModelParams::size; ++k) s.draws.push_back(th[k]);
    return s;
}

// Limiting loss at X = x, recomputed from boost's normal distribution.
double limit_loss(const ModelParams& th, double x) {
    const boost::math::normal n;
    const double lam =
        boost::math::cdf(n, (boost::math::quantile(n, th.p) - std::sqrt(th.rho) * x) / std::sqrt(1 - th.rho));
    return lam * (1 - th.mu - th.sigma * std::sqrt(th.omega) * x);
}

// P(L <= v) for one parameter set: the loss decreases in X over the
// relevant range, so the event is X >= x(v).
double limit_cdf(const ModelParams& th, double v) {
    if (v >= limit_loss(th, -8.0)) return 1.0;
    if (v <= limit_loss(th, 8.0)) return 0.0;
    const auto f = [&](double x) { return limit_loss(th, x) - v; };
    boost::uintmax_t it = 200;
    const auto r = boost::math::tools::bisect(f, -8.0, 8.0, boost::math::tools::eps_tolerance<double>(50), it);
    return boost::math::cdf(complement(boost::math::normal(), 0.5 * (r.first + r.second)));
}

} // namespace

TEST(PointQuantile, DegeneratePosteriorMatchesAnalyticLimit) {
    const auto samples = PosteriorSamples::degenerate(kA);
    const auto est = full_predictive_quantile(samples, std::nullopt, 0.999, 1000000, 3);
    EXPECT_NEAR(est.value, analytic_limit_quantile(kA, 0.999), 3 * est.std_error);
    EXPECT_GT(est.std_error, 0.0);
}

TEST(PredictiveQuantile, TwoAtomMixtureMatchesRootOfMixtureCdf) {
    const auto samples = two_atoms();
    const auto mix_cdf = [&](double v) { return 0.5 * limit_cdf(kA, v) + 0.5 * limit_cdf(kB, v) - 0.999; };
    boost::uintmax_t it = 200;
    const auto r = boost::math::tools::bisect(mix_cdf, 1e-4, 0.5, boost::math::tools::eps_tolerance<double>(50), it);
    const double expect = 0.5 * (r.first + r.second);
    const auto est = full_predictive_quantile(samples, std::nullopt, 0.999, 1000000, 4);
    EXPECT_NEAR(est.value, expect, 3 * est.std_error);
    // The mixture quantile lies between the two component quantiles.
    EXPECT_GT(expect, analytic_limit_quantile(kA, 0.999));
    EXPECT_LT(expect, analytic_limit_quantile(kB, 0.999));
}

TEST(PredictiveQuantile, ThreadIndependent) {
    const auto samples = two_atoms();
    const auto pf = Portfolio::equal_weights(500);
    EXPECT_EQ(predictive_losses(samples, pf, 50000, 9, false, {1}), predictive_losses(samples, pf, 50000, 9, false, {4}));
}

TEST(PredictiveQuantile, LargePortfolioApproachesLimit) {
    const auto samples = PosteriorSamples::degenerate(kB);
    const auto fin = full_predictive_quantile(samples, Portfolio::equal_weights(100000), 0.999, 200000, 5);
    const auto lim = full_predictive_quantile(samples, std::nullopt, 0.999, 200000, 5);
    EXPECT_NEAR(fin.value / lim.value, 1.0, 0.02);
}

TEST(QuantileDistribution, EqualsAnalyticQuantilePerDraw) {
    const auto samples = two_atoms();
    const auto q = quantile_distribution(samples, 0.999);
    ASSERT_EQ(q.size(), 2u);
    EXPECT_DOUBLE_EQ(q[0], analytic_limit_quantile(kA, 0.999));
    EXPECT_DOUBLE_EQ(q[1], analytic_limit_quantile(kB, 0.999));
    EXPECT_NEAR(q[0], limit_loss(kA, boost::math::quantile(boost::math::normal(), 0.001)), 1e-14);
}

TEST(QuantileDistribution, FloorClipsNegativeLossRate) {
    const ModelParams th{0.02, 0.1, 1.5, 0.3, 0.2};
    const auto s = PosteriorSamples::degenerate(th);
    EXPECT_LT(quantile_distribution(s, 0.999)[0], 0.0);
    EXPECT_EQ(quantile_distribution(s, 0.999, true)[0], 0.0);
}

TEST(QuantileDistribution, FiniteVariantIsDeterministicAndThreadIndependent) {
    const auto samples = two_atoms();
    const auto pf = Portfolio::equal_weights(50);
    const auto a = quantile_distribution_finite(samples, pf, 0.99, 20000, 7, {1});
    const auto b = quantile_distribution_finite(samples, pf, 0.99, 20000, 7, {2});
    ASSERT_EQ(a.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(a[i].value, b[i].value);
        EXPECT_EQ(a[i].std_error, b[i].std_error);
    }
}

TEST(StressedSummaries, UpliftAgainstReference) {
    PosteriorSamples s;
    for (int i = 0; i < 10; ++i) {
        ModelParams th = kA;
        th.p = 0.01 + 0.001 * i;
        for (std::size_t k = 0; k < ModelParams::size; ++k) s.draws.push_back(th[k]);
    }
    const double ref = 0.05;
    const auto r = stressed_summaries(s, 0.999, ref);
    ASSERT_EQ(r.ec.size(), 10u);
    double mean = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_DOUBLE_EQ(r.ec[i], r.pd[i] * r.lgd[i]);
        EXPECT_DOUBLE_EQ(r.ec[i], analytic_limit_quantile(s.params(i), 0.999));
        mean += r.ec[i] / 10;
    }
    EXPECT_NEAR(r.delta_mean, 100.0 * (mean / ref - 1.0), 1e-10);
    EXPECT_NEAR(r.delta_q50, 100.0 * (r.ec_summary.q50 / ref - 1.0), 1e-12);
    EXPECT_THROW(stressed_summaries(s, 0.999, 0.0), InvalidParameter);
}

TEST(PosteriorMean, AveragesParameters) {
    const auto m = posterior_mean_params(two_atoms());
    for (std::size_t k = 0; k < ModelParams::size; ++k) EXPECT_DOUBLE_EQ(m[k], 0.5 * (kA[k] + kB[k]));
    EXPECT_THROW(posterior_mean_params(PosteriorSamples{}), InvalidParameter);
}

TEST(PointQuantile, FixedParameterMonteCarlo) {
    const auto est = quantile_given_params(kB, Portfolio::equal_weights(1000), 0.99, 100000, 8);
    const auto again = quantile_given_params(kB, Portfolio::equal_weights(1000), 0.99, 100000, 8);
    EXPECT_EQ(est.value, again.value);
    EXPECT_NEAR(est.value, analytic_limit_quantile(kB, 0.99), 0.05 * est.value);
}
