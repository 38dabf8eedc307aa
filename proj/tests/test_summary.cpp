#include <cmath>
#include <vector>

#include <boost/math/statistics/univariate_statistics.hpp>
#include <gtest/gtest.h>

#include "lgdcap/random.hpp"
#include "lgdcap/summary.hpp"

using namespace lgdcap;

namespace {

std::vector<double> gamma_like(std::size_t n, std::uint64_t seed) {
    Stream rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) {
        const double a = rng.normal(), b = rng.normal(), c = rng.normal();
        x = a * a + b * b + c * c; // chi-square(3)
    }
    return v;
}

} // namespace

TEST(Summary, MomentsMatchBoostStatistics) {
    const auto v = gamma_like(5000, 1);
    const auto s = summarize_values(v);
    namespace st = boost::math::statistics;
    EXPECT_NEAR(s.mean, st::mean(v), 1e-12);
    EXPECT_NEAR(s.stdev, std::sqrt(st::sample_variance(v)), 1e-12);
    EXPECT_NEAR(s.skewness, st::skewness(v), 1e-10);
    EXPECT_NEAR(s.kurtosis, st::kurtosis(v), 1e-10);
    EXPECT_NEAR(s.cv, s.stdev / s.mean, 1e-15);
    EXPECT_EQ(s.n, 5000u);
}

TEST(Summary, LargeSampleChiSquareShape) {
    // chi-square(3): skewness sqrt(8/3), kurtosis 3 + 4.
    const auto s = summarize_values(gamma_like(400000, 2));
    EXPECT_NEAR(s.mean, 3.0, 0.02);
    EXPECT_NEAR(s.skewness, std::sqrt(8.0 / 3.0), 0.05);
    EXPECT_NEAR(s.kurtosis, 7.0, 0.3);
    EXPECT_NEAR(s.mode, 1.0, 0.25);
    EXPECT_NEAR(s.q50, 2.365973884375338, 0.02);
}

TEST(Summary, HistogramModePicksTallestBin) {
    std::vector<double> v{0.0, 10.0};
    for (int i = 0; i < 5; ++i) v.push_back(3.02);
    EXPECT_NEAR(histogram_mode(v, 100), 3.05, 1e-12);
    EXPECT_EQ(histogram_mode(std::vector<double>{2.0, 2.0}), 2.0);
}

TEST(Summary, ConstantSampleHasUndefinedShape) {
    const std::vector<double> v(50, 1.5);
    const auto s = summarize_values(v, 2);
    EXPECT_EQ(s.stdev, 0.0);
    EXPECT_TRUE(std::isnan(s.skewness));
    EXPECT_TRUE(std::isnan(s.kurtosis));
    EXPECT_EQ(s.mode, 1.5);
}

TEST(Summary, RefusesShortSamples) {
    const std::vector<double> v(999, 1.0);
    EXPECT_THROW(summarize_values(v), InvalidParameter);
    EXPECT_NO_THROW(summarize_values(v, 10));
}

TEST(BatchMeans, MatchesIidStandardErrorAndCatchesCorrelation) {
    Stream rng(3);
    std::vector<double> iid(100000), ar(100000);
    double a = 0.0;
    for (std::size_t i = 0; i < iid.size(); ++i) {
        iid[i] = rng.normal();
        a = 0.9 * a + rng.normal();
        ar[i] = a;
    }
    EXPECT_NEAR(batch_means_se(iid) / (1.0 / std::sqrt(1e5)), 1.0, 0.45);
    // AR(1) with phi = 0.9: long-run sd = 1 / (1 - 0.9).
    EXPECT_NEAR(batch_means_se(ar) / (10.0 / std::sqrt(1e5)), 1.0, 0.45);
    EXPECT_LT(std::abs(half_split_z(iid)), 4.0);
    std::vector<double> drift(iid);
    for (std::size_t i = 0; i < drift.size(); ++i) drift[i] += i * 1e-4;
    EXPECT_GT(std::abs(half_split_z(drift)), 10.0);
}
