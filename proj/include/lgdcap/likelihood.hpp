#ifndef LGDCAP_LIKELIHOOD_HPP
#define LGDCAP_LIKELIHOOD_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "error.hpp"
#include "model.hpp"
#include "normal.hpp"
#include "observations.hpp"
#include "quadrature.hpp"

namespace lgdcap {

/// Density used for the default count given X.
enum class DefaultDensity {
    normal_approx, ///< N(J Lambda, J Lambda (1 - Lambda)), no continuity correction
    binomial,      ///< exact Binomial(J, Lambda)
};

/// Parameters plus the latent path: the full state sampled by MCMC.
struct AugmentedState {
    ModelParams params;
    LatentPath latent;

    void validate(std::size_t periods) const {
        params.validate();
        latent.validate(periods);
    }
};

namespace detail {

/// Per-parameter constants for repeated period evaluations.
class PeriodKernel {
  public:
    explicit PeriodKernel(const ModelParams& params)
        : threshold_(params.default_threshold()), sqrt_rho_(std::sqrt(params.rho)),
          sqrt_1m_rho_(std::sqrt(1.0 - params.rho)), mu_(params.mu),
          sys_(params.sigma * std::sqrt(params.omega)),
          idio_var_(params.sigma * params.sigma * (1.0 - params.omega)) {}

    double log_default(double x, const PeriodRecord& rec, DefaultDensity kind) const {
        const double z = (threshold_ - sqrt_rho_ * x) / sqrt_1m_rho_;
        const double lam = norm_cdf(z);
        const double surv = norm_cdf(-z);
        const auto j = static_cast<double>(rec.obligors);
        const auto d = static_cast<double>(rec.defaults);
        if (kind == DefaultDensity::normal_approx) {
            const double var = j * lam * surv;
            if (!(var > 0.0) || !std::isfinite(var)) return -std::numeric_limits<double>::infinity();
            const double dev = d - j * lam;
            return -0.5 * std::log(var) - log_sqrt_2pi - dev * dev / (2.0 * var);
        }
        double ll = std::lgamma(j + 1.0) - std::lgamma(d + 1.0) - std::lgamma(j - d + 1.0);
        if (d > 0.0) ll += d * std::log(lam);
        if (j - d > 0.0) ll += (j - d) * std::log(surv);
        return ll;
    }

    double log_recovery(double x, const PeriodRecord& rec) const {
        if (!rec.avg_recovery || rec.defaults == 0) return 0.0;
        const double var = idio_var_ / static_cast<double>(rec.defaults);
        if (!(var > 0.0)) throw NumericalError("recovery density is degenerate (omega = 1 or sigma = 0)");
        const double dev = *rec.avg_recovery - mu_ - sys_ * x;
        return -0.5 * std::log(var) - log_sqrt_2pi - dev * dev / (2.0 * var);
    }

    double log_period(double x, const PeriodRecord& rec, DefaultDensity kind) const {
        return log_default(x, rec, kind) + log_recovery(x, rec);
    }

  private:
    double threshold_, sqrt_rho_, sqrt_1m_rho_, mu_, sys_, idio_var_;
};

inline void check_period(const PeriodRecord& rec) {
    if (rec.obligors < 1 || rec.defaults < 0 || rec.defaults > rec.obligors)
        throw DataError("period record violates 0 <= defaults <= obligors");
}

} // namespace detail

/// log f(d_t | x_t) + log f(rbar_t | d_t, x_t). The recovery term is
/// omitted when the period has no defaults.
inline double log_joint_density_period(const ModelParams& params, double x, const PeriodRecord& rec,
                                       DefaultDensity kind = DefaultDensity::normal_approx) {
    params.validate();
    detail::check_period(rec);
    if (!std::isfinite(x)) throw InvalidParameter("latent value must be finite");
    return detail::PeriodKernel(params).log_period(x, rec, kind);
}

/// Latent-augmented log-likelihood, summed over periods in ascending t.
inline double log_likelihood_augmented(const AugmentedState& state, const YearlyObservations& data,
                                       DefaultDensity kind = DefaultDensity::normal_approx) {
    state.validate(data.size());
    const detail::PeriodKernel kernel(state.params);
    double ll = 0.0;
    for (std::size_t t = 0; t < data.size(); ++t) {
        detail::check_period(data[t]);
        ll += kernel.log_period(state.latent.x[t], data[t], kind);
    }
    return ll;
}

/// Result of the quadrature-marginalised likelihood.
struct MarginalLikelihood {
    double value = 0.0;   ///< log-likelihood at the requested node count
    double refined = 0.0; ///< same with twice the nodes
    bool converged = true; ///< |value - refined| <= 1e-6
};

namespace detail {

/// log of the integral over x of f(d, rbar | x) phi(x) for one period.
inline double log_period_marginal(const PeriodKernel& kernel, const PeriodRecord& rec, DefaultDensity kind,
                                  const GaussHermiteRule& rule) {
    auto log_f = [&](double x) { return kernel.log_period(x, rec, kind) + norm_logpdf(x); };

    // Locate the mode on a grid, then polish with Brent.
    double best_x = 0.0, best = -std::numeric_limits<double>::infinity();
    constexpr double lo = -12.0, hi = 12.0, step = 0.02;
    for (double x = lo; x <= hi + 1e-12; x += step) {
        const double v = log_f(x);
        if (v > best) {
            best = v;
            best_x = x;
        }
    }
    if (!std::isfinite(best)) return -std::numeric_limits<double>::infinity();
    const auto res = boost::math::tools::brent_find_minima([&](double x) { return -log_f(x); },
                                                           best_x - step, best_x + step, 40);
    const double mode = res.first;
    const double h = 1e-3;
    const double f0 = log_f(mode);
    const double curv = (log_f(mode + h) - 2.0 * f0 + log_f(mode - h)) / (h * h);
    const double scale = (std::isfinite(curv) && curv < -1e-8) ? 1.0 / std::sqrt(-curv) : 1.0;
    return adaptive_gh_log_integral(log_f, rule, mode, scale);
}

} // namespace detail

/// Marginal log-likelihood with the latent factors integrated out
/// against the standard normal, one adaptive Gauss-Hermite integral per
/// period, each evaluated with log-sum-exp.
inline MarginalLikelihood log_likelihood_marginal(const ModelParams& params, const YearlyObservations& data,
                                                  std::size_t nodes = 64,
                                                  DefaultDensity kind = DefaultDensity::normal_approx) {
    params.validate();
    if (nodes < 8) throw InvalidParameter("log_likelihood_marginal: need at least 8 nodes");
    if (data.size() == 0) throw DataError("dataset has no periods");
    const detail::PeriodKernel kernel(params);
    const auto rule = gauss_hermite(nodes);
    const auto rule2 = gauss_hermite(2 * nodes);
    MarginalLikelihood out;
    for (std::size_t t = 0; t < data.size(); ++t) {
        detail::check_period(data[t]);
        out.value += detail::log_period_marginal(kernel, data[t], kind, rule);
        out.refined += detail::log_period_marginal(kernel, data[t], kind, rule2);
    }
    out.converged = std::abs(out.value - out.refined) <= 1e-6;
    return out;
}

/// Log-density of the transformed default rate delta = Phi^-1(psi) under
/// (p, rho), in the form of the large-portfolio default-rate law.
inline double log_default_rate_density(double delta, double p, double rho) {
    const double g = norm_quantile(p);
    return 0.5 * std::log((1.0 - rho) / rho) -
           (g * g + (1.0 - 2.0 * rho) * delta * delta - 2.0 * std::sqrt(1.0 - rho) * g * delta) / (2.0 * rho);
}

/// delta_t = Phi^-1(d_t / J_t) for every period; throws when a default
/// rate is 0 or 1.
inline std::vector<double> transformed_default_rates(const YearlyObservations& data) {
    std::vector<double> delta;
    delta.reserve(data.size());
    for (const auto& rec : data.records) {
        detail::check_period(rec);
        const double psi = rec.default_rate();
        if (!(psi > 0.0 && psi < 1.0))
            throw NumericalError("default rate of year " + std::to_string(rec.year) +
                                 " is 0 or 1; Phi^-1 transform undefined");
        delta.push_back(norm_quantile(psi));
    }
    return delta;
}

/// Approximate default-process log-likelihood of (p, rho) treating the
/// observed default rates as the conditional default probabilities.
inline double log_likelihood_default_approx(double p, double rho, const YearlyObservations& data) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("p must lie in (0, 1)");
    if (rho == 0.0) throw NumericalError("default-rate density is degenerate at rho = 0");
    if (!(rho > 0.0 && rho < 1.0)) throw InvalidParameter("rho must lie in (0, 1)");
    double ll = 0.0;
    for (double delta : transformed_default_rates(data)) ll += log_default_rate_density(delta, p, rho);
    return ll;
}

/// Recovery-process log-likelihood given a latent path; periods without
/// defaults are skipped.
inline double log_likelihood_recovery_approx(double mu, double sigma, double omega, const LatentPath& latent,
                                             const YearlyObservations& data) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw NumericalError("recovery density is degenerate: sigma must be > 0");
    if (!(omega >= 0.0 && omega < 1.0)) throw NumericalError("recovery density is degenerate: omega must lie in [0, 1)");
    latent.validate(data.size());
    const double sys = sigma * std::sqrt(omega);
    const double base_var = sigma * sigma * (1.0 - omega);
    double ll = 0.0;
    for (std::size_t t = 0; t < data.size(); ++t) {
        const auto& rec = data[t];
        if (!rec.avg_recovery || rec.defaults == 0) continue;
        const auto d = static_cast<double>(rec.defaults);
        const double dev = *rec.avg_recovery - mu - sys * latent.x[t];
        ll += 0.5 * std::log(d / (2.0 * std::numbers::pi * base_var)) - d * dev * dev / (2.0 * base_var);
    }
    return ll;
}

} // namespace lgdcap

#endif
