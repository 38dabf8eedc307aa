#ifndef LGDCAP_SUMMARY_HPP
#define LGDCAP_SUMMARY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "error.hpp"
#include "simulate.hpp"

namespace lgdcap {

/// Distributional summary of one posterior quantity.
struct PosteriorSummary {
    std::size_t n = 0;
    double mode = 0.0;
    double mean = 0.0;
    double stdev = 0.0;    ///< 1/(n-1) normalisation
    double skewness = 0.0; ///< standardised third central moment
    double kurtosis = 0.0; ///< standardised fourth central moment (normal = 3)
    double cv = 0.0;       ///< stdev / mean
    double q25 = 0.0;
    double q50 = 0.0;
    double q75 = 0.0;
};

/// Midpoint of the tallest of `bins` equal-width bins spanning the sample
/// range; the first tallest bin wins ties.
inline double histogram_mode(std::span<const double> v, std::size_t bins = 100) {
    if (v.empty()) throw InvalidParameter("histogram_mode: empty sample");
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) return lo;
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<std::size_t> counts(bins, 0);
    for (double x : v) {
        auto b = static_cast<std::size_t>((x - lo) / width);
        counts[std::min(b, bins - 1)]++;
    }
    const auto top = std::max_element(counts.begin(), counts.end()) - counts.begin();
    return lo + (static_cast<double>(top) + 0.5) * width;
}

inline PosteriorSummary summarize_values(std::span<const double> v, std::size_t min_draws = 1000) {
    if (v.size() < std::max<std::size_t>(min_draws, 2))
        throw InvalidParameter("summarize: need at least " + std::to_string(std::max<std::size_t>(min_draws, 2)) +
                               " draws");
    PosteriorSummary s;
    s.n = v.size();
    const auto n = static_cast<double>(v.size());
    for (double x : v) s.mean += x;
    s.mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : v) {
        const double d = x - s.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    s.stdev = std::sqrt(m2 / (n - 1.0));
    m2 /= n;
    m3 /= n;
    m4 /= n;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : nan;
    s.kurtosis = m2 > 0.0 ? m4 / (m2 * m2) : nan;
    s.cv = s.mean != 0.0 ? s.stdev / s.mean : nan;
    s.mode = histogram_mode(v);
    s.q25 = empirical_quantile(v, 0.25);
    s.q50 = empirical_quantile(v, 0.50);
    s.q75 = empirical_quantile(v, 0.75);
    return s;
}

/// Standard error of the mean of a correlated series by non-overlapping
/// batch means.
inline double batch_means_se(std::span<const double> v, std::size_t batches = 20) {
    if (v.size() < 2 * batches) throw InvalidParameter("batch_means_se: series too short");
    const std::size_t len = v.size() / batches;
    std::vector<double> means(batches, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
        for (std::size_t i = 0; i < len; ++i) means[b] += v[b * len + i];
        means[b] /= static_cast<double>(len);
    }
    double mean = 0.0;
    for (double m : means) mean += m;
    mean /= static_cast<double>(batches);
    double ss = 0.0;
    for (double m : means) ss += (m - mean) * (m - mean);
    return std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
}

/// Geweke-style check: difference of first-half and second-half means in
/// units of its batch-means standard error.
inline double half_split_z(std::span<const double> v, std::size_t batches = 20) {
    const std::size_t half = v.size() / 2;
    const auto a = v.subspan(0, half);
    const auto b = v.subspan(half, half);
    double ma = 0.0, mb = 0.0;
    for (double x : a) ma += x;
    for (double x : b) mb += x;
    ma /= static_cast<double>(half);
    mb /= static_cast<double>(half);
    const double sa = batch_means_se(a, batches), sb = batch_means_se(b, batches);
    const double se = std::sqrt(sa * sa + sb * sb);
    if (se == 0.0) return ma == mb ? 0.0 : std::numeric_limits<double>::infinity();
    return (ma - mb) / se;
}

} // namespace lgdcap

#endif
