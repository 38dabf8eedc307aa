#ifndef LGDCAP_CAPITAL_HPP
#define LGDCAP_CAPITAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "error.hpp"
#include "mcmc.hpp"
#include "mle.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "simulate.hpp"
#include "summary.hpp"

namespace lgdcap {

/// Monte Carlo q-quantile of the portfolio loss at fixed parameters.
inline QuantileEstimate quantile_given_params(const ModelParams& params, const Portfolio& portfolio, double q,
                                              std::size_t n, std::uint64_t seed,
                                              const SimulationOptions& options = {}) {
    const LossSample s = simulate_losses(params, portfolio, n, seed, options);
    return quantile_with_error(s.losses, q);
}

namespace detail {

inline void check_posterior(const PosteriorSamples& samples) {
    if (samples.rows() == 0) throw InvalidParameter("posterior sample is empty");
}

inline double floored_limit_loss(const ModelParams& params, double x, bool floor_loss) {
    const double s = conditional_loss_rate(params, x);
    return conditional_default_prob(params, x) * (floor_loss ? std::max(s, 0.0) : s);
}

} // namespace detail

/// Loss draws from the full predictive distribution: each draw picks a
/// stored posterior state uniformly (with replacement) and simulates one
/// portfolio loss under it. An empty optional portfolio means the
/// infinitely granular limit, where the loss is Lambda(X) S(X) at a fresh X.
inline std::vector<double> predictive_losses(const PosteriorSamples& samples,
                                             const std::optional<Portfolio>& portfolio, std::size_t n,
                                             std::uint64_t seed, bool floor_loss = false,
                                             const SimulationOptions& options = {}) {
    detail::check_posterior(samples);
    if (n == 0) throw InvalidParameter("predictive_losses: n must be >= 1");
    if (portfolio) portfolio->validate();
    for (std::size_t i = 0; i < samples.rows(); ++i) samples.params(i).validate();
    std::vector<double> losses(n);
    const std::uint64_t rows = samples.rows();
    const bool reduce = portfolio && options.method == LossMethod::automatic && portfolio->has_equal_weights();
    parallel_for(n, options.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Stream rng = Stream::substream(seed, i);
            const ModelParams theta = samples.params(rng.below(rows));
            if (portfolio) {
                losses[i] = detail::draw_loss(detail::LoanModel(theta), *portfolio, reduce, rng);
            } else {
                losses[i] = detail::floored_limit_loss(theta, rng.normal(), floor_loss);
            }
        }
    });
    return losses;
}

/// q-quantile of the full predictive loss distribution.
inline QuantileEstimate full_predictive_quantile(const PosteriorSamples& samples,
                                                 const std::optional<Portfolio>& portfolio, double q, std::size_t n,
                                                 std::uint64_t seed, bool floor_loss = false,
                                                 const SimulationOptions& options = {}) {
    const auto losses = predictive_losses(samples, portfolio, n, seed, floor_loss, options);
    return quantile_with_error(losses, q);
}

/// Limiting-portfolio alpha-quantile Lambda(x*) S(x*), x* = Phi^-1(1 - alpha),
/// for every stored posterior draw.
inline std::vector<double> quantile_distribution(const PosteriorSamples& samples, double alpha,
                                                 bool floor_loss = false) {
    detail::check_posterior(samples);
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("quantile level must lie in (0, 1)");
    const double x = norm_quantile(1.0 - alpha);
    std::vector<double> out(samples.rows());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = detail::floored_limit_loss(samples.params(i), x, floor_loss);
    return out;
}

/// Finite-portfolio variant: each stored draw gets its own Monte Carlo
/// quantile from `inner_n` loss draws, seeded by (seed, draw index).
inline std::vector<QuantileEstimate> quantile_distribution_finite(const PosteriorSamples& samples,
                                                                  const Portfolio& portfolio, double alpha,
                                                                  std::size_t inner_n, std::uint64_t seed,
                                                                  const SimulationOptions& options = {}) {
    detail::check_posterior(samples);
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("quantile level must lie in (0, 1)");
    std::vector<QuantileEstimate> out(samples.rows());
    SimulationOptions inner = options;
    inner.threads = 1;
    parallel_for(out.size(), options.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            out[i] = quantile_given_params(samples.params(i), portfolio, alpha, inner_n, mix64(seed ^ mix64(i)), inner);
    });
    return out;
}

/// Posterior summaries of stressed PD, LGD and EC plus the relative
/// capital uplift against a reference EC.
struct StressedReport {
    std::vector<double> pd, lgd, ec;
    PosteriorSummary pd_summary, lgd_summary, ec_summary;
    double reference_ec = 0.0;
    double delta_mean = 0.0; ///< 100 (mean / reference - 1)
    double delta_q25 = 0.0;
    double delta_q50 = 0.0;
    double delta_q75 = 0.0;
};

inline double relative_difference_pct(double value, double reference) {
    return 100.0 * (value / reference - 1.0);
}

inline StressedReport stressed_summaries(const PosteriorSamples& samples, double alpha, double reference_ec,
                                         bool floor_loss = false, std::size_t min_draws = 2) {
    detail::check_posterior(samples);
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("quantile level must lie in (0, 1)");
    if (!(reference_ec > 0.0)) throw InvalidParameter("reference EC must be positive");
    const double x = norm_quantile(1.0 - alpha);
    StressedReport r;
    r.reference_ec = reference_ec;
    for (std::size_t i = 0; i < samples.rows(); ++i) {
        const ModelParams theta = samples.params(i);
        const double pd = conditional_default_prob(theta, x);
        double lgd = conditional_loss_rate(theta, x);
        if (floor_loss) lgd = std::max(lgd, 0.0);
        r.pd.push_back(pd);
        r.lgd.push_back(lgd);
        r.ec.push_back(pd * lgd);
    }
    r.pd_summary = summarize_values(r.pd, min_draws);
    r.lgd_summary = summarize_values(r.lgd, min_draws);
    r.ec_summary = summarize_values(r.ec, min_draws);
    r.delta_mean = relative_difference_pct(r.ec_summary.mean, reference_ec);
    r.delta_q25 = relative_difference_pct(r.ec_summary.q25, reference_ec);
    r.delta_q50 = relative_difference_pct(r.ec_summary.q50, reference_ec);
    r.delta_q75 = relative_difference_pct(r.ec_summary.q75, reference_ec);
    return r;
}

/// Posterior-mean parameters.
inline ModelParams posterior_mean_params(const PosteriorSamples& samples) {
    detail::check_posterior(samples);
    ModelParams m;
    for (std::size_t k = 0; k < ModelParams::size; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < samples.rows(); ++i) s += samples.row(i)[k];
        m[k] = s / static_cast<double>(samples.rows());
    }
    return m;
}

} // namespace lgdcap

#endif
