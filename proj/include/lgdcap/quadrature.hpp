#ifndef LGDCAP_QUADRATURE_HPP
#define LGDCAP_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "error.hpp"

namespace lgdcap {

/// Gauss-Hermite rule for the weight exp(-t^2). Weights are kept as logs.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> log_weights;
};

/// Nodes by Newton iteration on the orthonormal Hermite recurrence with
/// the usual asymptotic starting guesses.
inline GaussHermiteRule gauss_hermite(std::size_t n) {
    if (n == 0) throw InvalidParameter("gauss_hermite: need at least one node");
    constexpr double pim4 = 0.75112554446494248286; // pi^-1/4
    const double nd = static_cast<double>(n);
    GaussHermiteRule rule;
    rule.nodes.assign(n, 0.0);
    rule.log_weights.assign(n, 0.0);
    const std::size_t half = (n + 1) / 2;
    double z = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * nd + 1.0) - 1.85575 * std::pow(2.0 * nd + 1.0, -1.0 / 6.0);
        else if (i == 1)
            z -= 1.14 * std::pow(nd, 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * rule.nodes[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * rule.nodes[1];
        else
            z = 2.0 * z - rule.nodes[i - 2];
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = pim4, p2 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                const double jd = static_cast<double>(j);
                p1 = z * std::sqrt(2.0 / jd) * p2 - std::sqrt((jd - 1.0) / jd) * p3;
            }
            pp = std::sqrt(2.0 * nd) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        if (2 * i + 1 == n) z = 0.0;
        rule.nodes[i] = z;
        rule.nodes[n - 1 - i] = -z;
        const double lw = std::log(2.0) - 2.0 * std::log(std::abs(pp));
        rule.log_weights[i] = lw;
        rule.log_weights[n - 1 - i] = lw;
    }
    return rule;
}

/// log(sum(exp(v))) with max subtraction; -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

/// log of the integral of exp(log_f) over the real line by adaptive
/// Gauss-Hermite: the rule is centred at `mode` and scaled by `scale`
/// (the curvature-implied standard deviation of the integrand).
template <class LogF>
double adaptive_gh_log_integral(LogF&& log_f, const GaussHermiteRule& rule, double mode, double scale) {
    std::vector<double> terms(rule.nodes.size());
    const double s2 = std::numbers::sqrt2 * scale;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double t = rule.nodes[i];
        terms[i] = rule.log_weights[i] + t * t + std::log(s2) + log_f(mode + s2 * t);
    }
    return log_sum_exp(terms);
}

} // namespace lgdcap

#endif
