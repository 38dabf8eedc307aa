#ifndef LGDCAP_MLE_HPP
#define LGDCAP_MLE_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "error.hpp"
#include "likelihood.hpp"
#include "model.hpp"
#include "normal.hpp"
#include "observations.hpp"

namespace lgdcap {

/// Closed-form default-stage estimates and the statistics behind them.
struct DefaultFit {
    double p = 0.0;
    double rho = 0.0;
    std::vector<double> delta; ///< Phi^-1 of the observed default rates
    double delta_bar = 0.0;
    double delta_var = 0.0; ///< 1/T-normalised variance of delta
};

/// rho_hat = s^2 / (1 + s^2), p_hat = Phi(mean / sqrt(1 + s^2)) with s^2 the
/// ML variance of delta_t = Phi^-1(d_t / J_t).
inline DefaultFit fit_default_closed_form(const YearlyObservations& data) {
    if (data.size() == 0) throw DataError("dataset has no periods");
    DefaultFit fit;
    fit.delta = transformed_default_rates(data);
    const auto t = static_cast<double>(fit.delta.size());
    for (double d : fit.delta) fit.delta_bar += d;
    fit.delta_bar /= t;
    for (double d : fit.delta) fit.delta_var += (d - fit.delta_bar) * (d - fit.delta_bar);
    fit.delta_var /= t;
    fit.rho = fit.delta_var / (1.0 + fit.delta_var);
    fit.p = norm_cdf(fit.delta_bar / std::sqrt(1.0 + fit.delta_var));
    return fit;
}

/// Systematic factors implied by the default rates:
/// x_t = (Phi^-1(p) - sqrt(1 - rho) delta_t) / sqrt(rho).
inline LatentPath backout_latent(double p, double rho, std::span<const double> delta) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("p must lie in (0, 1)");
    if (rho == 0.0) throw NumericalError("latent factors are unidentified at rho = 0");
    if (!(rho > 0.0 && rho < 1.0)) throw InvalidParameter("rho must lie in (0, 1)");
    const double g = norm_quantile(p);
    const double a = std::sqrt(1.0 - rho);
    const double b = std::sqrt(rho);
    LatentPath path;
    path.x.reserve(delta.size());
    for (double d : delta) path.x.push_back((g - a * d) / b);
    return path;
}

/// Recovery-stage estimates from the two-step feasible procedure.
struct RecoveryFit {
    double mu = 0.0;
    double sigma_h = 0.0; ///< historical volatility of the yearly averages, 1/(T-1)
    double omega = 0.0;
    double log_likelihood = 0.0;
    bool at_upper_bound = false;
};

/// Largest omega the recovery search may visit.
inline constexpr double omega_search_cap = 1.0 - 1e-6;

namespace detail {

struct RecoveryProfile {
    const YearlyObservations& data;
    const LatentPath& latent;
    double sigma;

    // Work in u = sqrt(omega): the profile is smooth in u at omega = 0.
    double mu_hat(double u) const {
        double num = 0.0, den = 0.0;
        for (std::size_t t = 0; t < data.size(); ++t) {
            const auto& rec = data[t];
            if (!rec.avg_recovery || rec.defaults == 0) continue;
            const auto d = static_cast<double>(rec.defaults);
            num += d * (*rec.avg_recovery - sigma * u * latent.x[t]);
            den += d;
        }
        return num / den;
    }

    double log_lik(double u) const {
        return log_likelihood_recovery_approx(mu_hat(u), sigma, u * u, latent, data);
    }

    /// d/du of the profile log-likelihood (envelope theorem in mu).
    double slope(double u) const {
        const double mu = mu_hat(u);
        const double one_m = 1.0 - u * u;
        const double s2 = sigma * sigma;
        double g = 0.0;
        for (std::size_t t = 0; t < data.size(); ++t) {
            const auto& rec = data[t];
            if (!rec.avg_recovery || rec.defaults == 0) continue;
            const auto d = static_cast<double>(rec.defaults);
            const double x = latent.x[t];
            const double e = *rec.avg_recovery - mu - sigma * u * x;
            g += u / one_m + d * e * sigma * x / (s2 * one_m) - d * e * e * u / (s2 * one_m * one_m);
        }
        return g;
    }
};

} // namespace detail

/// Historical volatility (1/(T-1)) of the observed yearly average recoveries.
inline double historical_recovery_volatility(const YearlyObservations& data) {
    std::vector<double> r;
    for (const auto& rec : data.records)
        if (rec.avg_recovery) r.push_back(*rec.avg_recovery);
    if (r.size() < 2) throw DataError("need at least two periods with recovery observations");
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    double ss = 0.0;
    for (double v : r) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(r.size() - 1));
}

/// sigma fixed at the historical volatility, then (mu, omega) maximise the
/// recovery log-likelihood at the given latent path. mu is profiled out in
/// closed form; omega is searched by 16 bounded Brent runs over equal
/// slices of [0, 1 - 1e-6] and the best slice is polished by root-finding
/// on the analytic slope. Ties within 1e-12 go to the smallest omega.
inline RecoveryFit fit_recovery_feasible(const YearlyObservations& data, const LatentPath& latent) {
    latent.validate(data.size());
    RecoveryFit fit;
    fit.sigma_h = historical_recovery_volatility(data);
    if (!(fit.sigma_h > 0.0)) throw NumericalError("historical recovery volatility is zero; recovery model degenerate");

    const detail::RecoveryProfile prof{data, latent, fit.sigma_h};
    const double u_max = std::sqrt(omega_search_cap);
    constexpr int starts = 16;

    double best_u = 0.0;
    double best_ll = prof.log_lik(0.0);
    auto consider = [&](double u) {
        const double ll = prof.log_lik(u);
        if (ll > best_ll + 1e-12 || (std::abs(ll - best_ll) <= 1e-12 && u < best_u)) {
            best_ll = ll;
            best_u = u;
        }
    };
    for (int k = 0; k < starts; ++k) {
        const double lo = std::sqrt(omega_search_cap * k / starts);
        const double hi = std::sqrt(omega_search_cap * (k + 1) / starts);
        const auto r = boost::math::tools::brent_find_minima([&](double u) { return -prof.log_lik(u); }, lo, hi,
                                                             std::numeric_limits<double>::digits / 2);
        consider(r.first);
    }
    consider(u_max);

    // Polish an interior optimum on the slope.
    if (best_u > 0.0 && best_u < u_max) {
        const double a = std::max(0.0, best_u - 1e-5);
        const double b = std::min(u_max, best_u + 1e-5);
        const double ga = prof.slope(a), gb = prof.slope(b);
        if (ga > 0.0 && gb < 0.0) {
            boost::uintmax_t iters = 200;
            const auto root = boost::math::tools::toms748_solve(
                [&](double u) { return prof.slope(u); }, a, b, ga, gb,
                boost::math::tools::eps_tolerance<double>(50), iters);
            const double u = 0.5 * (root.first + root.second);
            if (prof.log_lik(u) >= best_ll - 1e-12) {
                best_u = u;
                best_ll = prof.log_lik(u);
            }
        }
    }

    fit.omega = best_u * best_u;
    fit.mu = prof.mu_hat(best_u);
    fit.log_likelihood = best_ll;
    fit.at_upper_bound = fit.omega >= omega_search_cap * (1.0 - 1e-9);
    return fit;
}

/// Stressed default probability, loss rate and their product at
/// X = Phi^-1(1 - alpha).
struct CapitalPoint {
    double pd = 0.0;
    double lgd = 0.0;
    double ec = 0.0;
};

inline CapitalPoint stressed_capital(const ModelParams& params, double alpha = 0.999) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("quantile level must lie in (0, 1)");
    const double x = norm_quantile(1.0 - alpha);
    CapitalPoint c;
    c.pd = conditional_default_prob(params, x);
    c.lgd = conditional_loss_rate(params, x);
    c.ec = c.pd * c.lgd;
    return c;
}

/// Full two-stage fit.
struct MleFit {
    ModelParams params;
    LatentPath latent_hat;
    std::vector<double> delta;
    double delta_bar = 0.0;
    double delta_var = 0.0;
    double sigma_hist = 0.0;
    double recovery_log_likelihood = 0.0;
    std::vector<std::string> notes;
};

/// Default stage in closed form, latent back-out, then the feasible
/// recovery stage. When rho_hat = 0 the latent path is unidentified: it is
/// set to zero, omega_hat to 0 and mu_hat to the default-weighted mean
/// recovery, and a note says so.
inline MleFit fit_mle(const YearlyObservations& data) {
    data.validate();
    const DefaultFit def = fit_default_closed_form(data);
    MleFit fit;
    fit.delta = def.delta;
    fit.delta_bar = def.delta_bar;
    fit.delta_var = def.delta_var;
    fit.params.p = def.p;
    fit.params.rho = def.rho;

    if (def.rho > 0.0) {
        fit.latent_hat = backout_latent(def.p, def.rho, def.delta);
        const RecoveryFit rec = fit_recovery_feasible(data, fit.latent_hat);
        fit.params.mu = rec.mu;
        fit.params.sigma = rec.sigma_h;
        fit.params.omega = rec.omega;
        fit.sigma_hist = rec.sigma_h;
        fit.recovery_log_likelihood = rec.log_likelihood;
        if (rec.at_upper_bound) fit.notes.push_back("omega estimate hit the upper search bound (boundary solution)");
    } else {
        fit.notes.push_back("rho_hat = 0: latent factors unidentified; omega_hat fixed at 0");
        fit.latent_hat.x.assign(data.size(), 0.0);
        fit.sigma_hist = historical_recovery_volatility(data);
        if (!(fit.sigma_hist > 0.0)) throw NumericalError("historical recovery volatility is zero; recovery model degenerate");
        const detail::RecoveryProfile prof{data, fit.latent_hat, fit.sigma_hist};
        fit.params.mu = prof.mu_hat(0.0);
        fit.params.sigma = fit.sigma_hist;
        fit.params.omega = 0.0;
        fit.recovery_log_likelihood = prof.log_lik(0.0);
    }
    return fit;
}

/// PD, LGD and EC at the fitted parameters.
inline CapitalPoint mle_capital_report(const MleFit& fit, double alpha = 0.999) {
    return stressed_capital(fit.params, alpha);
}

} // namespace lgdcap

#endif
