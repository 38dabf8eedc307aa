#ifndef LGDCAP_SIMULATE_HPP
#define LGDCAP_SIMULATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "error.hpp"
#include "model.hpp"
#include "observations.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace lgdcap {

/// Binomial(n, prob) variate.
///
/// Sequential inversion when n * min(p, 1-p) < 10, otherwise the
/// BTRS transformed rejection (exact, O(1) expected time).
inline std::int64_t sample_binomial(std::int64_t n, double prob, Stream& rng) {
    if (n < 0 || !(prob >= 0.0 && prob <= 1.0)) throw InvalidParameter("binomial: invalid arguments");
    if (n == 0 || prob == 0.0) return 0;
    if (prob == 1.0) return n;
    if (prob > 0.5) return n - sample_binomial(n, 1.0 - prob, rng);

    const double nd = static_cast<double>(n);
    const double q = 1.0 - prob;
    if (nd * prob < 10.0) {
        const double s = prob / q;
        const double a = (nd + 1.0) * s;
        const double r0 = std::exp(nd * std::log1p(-prob));
        for (;;) {
            double r = r0;
            double u = rng.uniform();
            std::int64_t k = 0;
            while (u > r) {
                u -= r;
                ++k;
                if (k > n) break;
                r *= a / static_cast<double>(k) - s;
                if (r <= 0.0) break;
            }
            if (k <= n && u <= r) return k;
        }
    }

    const double spq = std::sqrt(nd * prob * q);
    const double b = 1.15 + 2.53 * spq;
    const double a = -0.0873 + 0.0248 * b + 0.01 * prob;
    const double c = nd * prob + 0.5;
    const double v_r = 0.92 - 4.2 / b;
    const double alpha = (2.83 + 5.1 / b) * spq;
    const double lpq = std::log(prob / q);
    const double m = std::floor((nd + 1.0) * prob);
    const double h = std::lgamma(m + 1.0) + std::lgamma(nd - m + 1.0);
    for (;;) {
        const double u = rng.uniform() - 0.5;
        double v = rng.uniform();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + c);
        if (k < 0.0 || k > nd) continue;
        if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(k);
        v = std::log(v * alpha / (a / (us * us) + b));
        const double bound = h - std::lgamma(k + 1.0) - std::lgamma(nd - k + 1.0) + (k - m) * lpq;
        if (v <= bound) return static_cast<std::int64_t>(k);
    }
}

/// How Algorithm-1 draws are generated.
enum class LossMethod {
    /// Equal weights use the exact conditional reduction: given X the
    /// default count is Binomial(J, Lambda(X)) and only defaulted loans
    /// draw a recovery (identity link without floor sums them in closed
    /// form). Unequal weights fall back to per_borrower.
    automatic,
    /// Literal per-borrower simulation of C_j, I_j and R_j.
    per_borrower,
};

struct SimulationOptions {
    unsigned threads = 1;
    LossMethod method = LossMethod::automatic;
};

/// Portfolio loss rates from repeated Algorithm-1 draws.
struct LossSample {
    std::vector<double> losses;
    std::uint64_t seed = 0;
    std::size_t n = 0;
};

namespace detail {

/// Parameter-derived constants shared by every draw.
struct LoanModel {
    double threshold, sqrt_rho, sqrt_1m_rho, mu, sys_rec, idio_rec;

    explicit LoanModel(const ModelParams& params)
        : threshold(params.default_threshold()), sqrt_rho(std::sqrt(params.rho)),
          sqrt_1m_rho(std::sqrt(1.0 - params.rho)), mu(params.mu),
          sys_rec(params.sigma * std::sqrt(params.omega)),
          idio_rec(params.sigma * std::sqrt(1.0 - params.omega)) {}

    double default_prob(double x) const { return norm_cdf((threshold - sqrt_rho * x) / sqrt_1m_rho); }
};

inline double loan_loss(const Portfolio& pf, double recovery) {
    const double l = 1.0 - recovery;
    return pf.floor_loss ? std::max(l, 0.0) : l;
}

/// `reduce`: take the binomial shortcut (caller checked equal weights).
inline double draw_loss(const LoanModel& m, const Portfolio& pf, bool reduce, Stream& rng) {
    const double x = rng.normal();
    const double rec_mean = m.mu + m.sys_rec * x;

    if (reduce) {
        const auto borrowers = static_cast<std::int64_t>(pf.size());
        const std::int64_t defaults = sample_binomial(borrowers, m.default_prob(x), rng);
        if (defaults == 0) return 0.0;
        const double dd = static_cast<double>(defaults);
        double total;
        if (pf.link == RecoveryLink::identity && !pf.floor_loss) {
            // Sum of d iid N(rec_mean, idio^2) recoveries.
            total = dd * (1.0 - rec_mean) - m.idio_rec * std::sqrt(dd) * rng.normal();
        } else {
            total = 0.0;
            for (std::int64_t i = 0; i < defaults; ++i)
                total += loan_loss(pf, apply_recovery_link(pf.link, rec_mean + m.idio_rec * rng.normal()));
        }
        return total / static_cast<double>(borrowers);
    }

    double loss = 0.0;
    for (double w : pf.weights) {
        const double c = m.sqrt_rho * x + m.sqrt_1m_rho * rng.normal();
        if (c < m.threshold) {
            const double r = apply_recovery_link(pf.link, rec_mean + m.idio_rec * rng.normal());
            loss += w * loan_loss(pf, r);
        }
    }
    return loss;
}

} // namespace detail

/// Default indicator and recovery of one borrower given X = x.
struct BorrowerOutcome {
    bool defaulted;
    double recovery;
};

/// Draws (I_j, R_j) for a single borrower at a fixed systematic factor.
/// The recovery is drawn whether or not the borrower defaults.
inline BorrowerOutcome draw_borrower(const ModelParams& params, RecoveryLink link, double x, Stream& rng) {
    params.validate();
    const detail::LoanModel m(params);
    const double c = m.sqrt_rho * x + m.sqrt_1m_rho * rng.normal();
    const double r = apply_recovery_link(link, m.mu + m.sys_rec * x + m.idio_rec * rng.normal());
    return {c < m.threshold, r};
}

/// One draw of the portfolio loss rate L.
inline double draw_portfolio_loss(const ModelParams& params, const Portfolio& portfolio, Stream& rng,
                                  LossMethod method = LossMethod::automatic) {
    return detail::draw_loss(detail::LoanModel(params), portfolio,
                             method == LossMethod::automatic && portfolio.has_equal_weights(), rng);
}

/// n independent draws of the portfolio loss (Algorithm 1, steps 1-5).
/// Draw i uses Stream::substream(seed, i), so the sample is a function of
/// (seed, n) only.
inline LossSample simulate_losses(const ModelParams& params, const Portfolio& portfolio, std::size_t n,
                                  std::uint64_t seed, const SimulationOptions& options = {}) {
    params.validate();
    portfolio.validate();
    if (n == 0) throw InvalidParameter("simulate_losses: n must be >= 1");
    const detail::LoanModel model(params);
    const bool reduce = options.method == LossMethod::automatic && portfolio.has_equal_weights();
    LossSample out;
    out.seed = seed;
    out.n = n;
    out.losses.resize(n);
    parallel_for(n, options.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Stream rng = Stream::substream(seed, i);
            out.losses[i] = detail::draw_loss(model, portfolio, reduce, rng);
        }
    });
    return out;
}

namespace detail {

inline std::size_t order_statistic_rank(std::size_t n, double q) {
    // ceil(q n) with a relative guard: 0.999 * 1000 must give 999, not 1000.
    const double qn = q * static_cast<double>(n);
    auto k = static_cast<std::size_t>(std::ceil(qn - 1e-9 * std::max(1.0, qn)));
    return std::clamp<std::size_t>(k, 1, n);
}

} // namespace detail

/// The ceil(q n)-th order statistic (1-indexed) of the values.
inline double empirical_quantile(std::span<const double> values, double q) {
    if (values.empty()) throw InvalidParameter("empirical_quantile: empty sample");
    if (!(q > 0.0 && q < 1.0)) throw InvalidParameter("empirical_quantile: q must lie in (0, 1)");
    std::vector<double> work(values.begin(), values.end());
    const std::size_t k = detail::order_statistic_rank(work.size(), q);
    std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(k - 1), work.end());
    return work[k - 1];
}

inline double empirical_quantile(const LossSample& sample, double q) {
    return empirical_quantile(std::span<const double>(sample.losses), q);
}

/// Quantile estimate with a distribution-free standard error.
struct QuantileEstimate {
    double value = 0.0;
    /// Half the spread between the order statistics sqrt(n q (1-q)) ranks
    /// either side of the estimate: the binomial one-sigma band.
    double std_error = 0.0;
};

inline QuantileEstimate quantile_with_error(std::span<const double> values, double q) {
    if (values.empty()) throw InvalidParameter("quantile_with_error: empty sample");
    if (!(q > 0.0 && q < 1.0)) throw InvalidParameter("quantile_with_error: q must lie in (0, 1)");
    std::vector<double> work(values.begin(), values.end());
    std::sort(work.begin(), work.end());
    const std::size_t n = work.size();
    const std::size_t k = detail::order_statistic_rank(n, q);
    const auto band = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n) * q * (1.0 - q))));
    const std::size_t lo = k > band ? k - band : 1;
    const std::size_t hi = std::min(n, k + band);
    return {work[k - 1], 0.5 * (work[hi - 1] - work[lo - 1])};
}

/// Simulated history plus the truth that generated it.
struct SyntheticDataset {
    YearlyObservations data;
    ModelParams true_params;
    LatentPath true_latent;
};

/// Draws T periods: X_t ~ N(0,1), d_t ~ Binomial(J_t, Lambda(X_t)) and,
/// when d_t >= 1, the average recovery ~ N(mu + sigma sqrt(omega) X_t,
/// sigma^2 (1 - omega) / d_t). Years are labelled first_year, first_year+1, ...
inline SyntheticDataset simulate_dataset(const ModelParams& params, const std::vector<std::int64_t>& firm_counts,
                                         std::uint64_t seed, std::int64_t first_year = 1) {
    params.validate();
    if (firm_counts.empty()) throw InvalidParameter("simulate_dataset: need at least one period");
    const detail::LoanModel m(params);
    SyntheticDataset out;
    out.true_params = params;
    for (std::size_t t = 0; t < firm_counts.size(); ++t) {
        if (firm_counts[t] < 1) throw InvalidParameter("simulate_dataset: firm counts must be >= 1");
        Stream rng = Stream::substream(seed, t);
        const double x = rng.normal();
        PeriodRecord rec;
        rec.year = first_year + static_cast<std::int64_t>(t);
        rec.obligors = firm_counts[t];
        rec.defaults = sample_binomial(firm_counts[t], m.default_prob(x), rng);
        if (rec.defaults > 0) {
            const double sd = m.idio_rec / std::sqrt(static_cast<double>(rec.defaults));
            rec.avg_recovery = m.mu + m.sys_rec * x + sd * rng.normal();
        }
        out.data.records.push_back(rec);
        out.true_latent.x.push_back(x);
    }
    return out;
}

} // namespace lgdcap

#endif
