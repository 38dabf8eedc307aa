#ifndef LGDCAP_MODEL_HPP
#define LGDCAP_MODEL_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "normal.hpp"

/// One-factor default model with systematically correlated recoveries.
///
/// A borrower defaults when sqrt(rho) X + sqrt(1 - rho) Z_C falls below
/// Phi^-1(p); its recovery is driven by
/// V = mu + sigma sqrt(omega) X + sigma sqrt(1 - omega) Z through one of
/// three link functions. X is the systematic factor shared by all
/// borrowers in a period.
namespace lgdcap {

/// The five model parameters (p, rho, mu, sigma, omega).
struct ModelParams {
    double p = 0.0;     ///< unconditional default probability per period
    double rho = 0.0;   ///< asset correlation
    double mu = 0.0;    ///< mean recovery
    double sigma = 0.0; ///< recovery volatility
    double omega = 0.0; ///< share of recovery variance loaded on X

    static constexpr std::size_t size = 5;

    /// Phi^-1(p), the default threshold.
    double default_threshold() const { return norm_quantile(p); }

    double operator[](std::size_t k) const {
        switch (k) {
        case 0: return p;
        case 1: return rho;
        case 2: return mu;
        case 3: return sigma;
        default: return omega;
        }
    }
    double& operator[](std::size_t k) {
        switch (k) {
        case 0: return p;
        case 1: return rho;
        case 2: return mu;
        case 3: return sigma;
        default: return omega;
        }
    }

    bool is_valid() const {
        return std::isfinite(p) && std::isfinite(rho) && std::isfinite(mu) &&
               std::isfinite(sigma) && std::isfinite(omega) && p > 0.0 && p < 1.0 &&
               rho >= 0.0 && rho < 1.0 && sigma > 0.0 && omega >= 0.0 && omega <= 1.0;
    }

    void validate() const {
        if (!is_valid())
            throw InvalidParameter(
                "invalid model parameters: need 0<p<1, 0<=rho<1, sigma>0, 0<=omega<=1, all finite");
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

inline constexpr const char* param_names[ModelParams::size] = {"p", "rho", "mu", "sigma", "omega"};

enum class RecoveryLink { identity, logit, exp };

inline std::string_view to_string(RecoveryLink link) {
    switch (link) {
    case RecoveryLink::identity: return "identity";
    case RecoveryLink::logit: return "logit";
    case RecoveryLink::exp: return "exp";
    }
    return "identity";
}

inline RecoveryLink parse_link(std::string_view s) {
    if (s == "identity" || s == "normal") return RecoveryLink::identity;
    if (s == "logit") return RecoveryLink::logit;
    if (s == "exp" || s == "lognormal") return RecoveryLink::exp;
    throw InvalidParameter("unknown recovery link '" + std::string(s) + "'");
}

/// Maps the recovery driver V to a recovery rate.
inline double apply_recovery_link(RecoveryLink link, double v) {
    if (!std::isfinite(v)) throw InvalidParameter("recovery driver is not finite");
    switch (link) {
    case RecoveryLink::identity: return v;
    case RecoveryLink::logit:
        // Both branches stay in (0, 1) and never overflow.
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        return std::exp(v) / (1.0 + std::exp(v));
    case RecoveryLink::exp: {
        const double r = std::exp(v);
        if (!std::isfinite(r)) throw NumericalError("exp recovery link overflows");
        return r;
    }
    }
    return v;
}

/// Loan weights of a homogeneous portfolio plus how losses are formed.
struct Portfolio {
    std::vector<double> weights;
    RecoveryLink link = RecoveryLink::identity;
    /// Use max(1 - R, 0) per loan instead of 1 - R.
    bool floor_loss = false;

    static Portfolio equal_weights(std::size_t borrowers, RecoveryLink link = RecoveryLink::identity,
                                   bool floor_loss = false) {
        if (borrowers == 0) throw InvalidParameter("portfolio needs at least one borrower");
        Portfolio pf;
        pf.weights.assign(borrowers, 1.0 / static_cast<double>(borrowers));
        pf.link = link;
        pf.floor_loss = floor_loss;
        return pf;
    }

    /// Weights w_j = A_j / sum A from loan amounts.
    static Portfolio from_amounts(const std::vector<double>& amounts,
                                  RecoveryLink link = RecoveryLink::identity, bool floor_loss = false) {
        double total = 0.0;
        for (double a : amounts) {
            if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidParameter("loan amounts must be finite and >= 0");
            total += a;
        }
        if (amounts.empty() || !(total > 0.0)) throw InvalidParameter("portfolio needs a positive total amount");
        Portfolio pf;
        pf.weights.reserve(amounts.size());
        for (double a : amounts) pf.weights.push_back(a / total);
        pf.link = link;
        pf.floor_loss = floor_loss;
        return pf;
    }

    std::size_t size() const { return weights.size(); }

    bool has_equal_weights() const {
        if (weights.empty()) return false;
        for (double w : weights)
            if (w != weights.front()) return false;
        return true;
    }

    void validate() const {
        if (weights.empty()) throw InvalidParameter("portfolio needs at least one borrower");
        // Neumaier summation: J = 1e5 equal weights would otherwise drift ~1e-11.
        double sum = 0.0, comp = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidParameter("portfolio weights must be finite and >= 0");
            const double t = sum + w;
            comp += std::abs(sum) >= std::abs(w) ? (sum - t) + w : (w - t) + sum;
            sum = t;
        }
        if (std::abs(sum + comp - 1.0) > 1e-12) throw InvalidParameter("portfolio weights must sum to 1");
    }
};

/// Systematic factor realisations X_1..X_T.
struct LatentPath {
    std::vector<double> x;

    std::size_t size() const { return x.size(); }

    void validate(std::size_t periods) const {
        if (x.size() != periods) throw InvalidParameter("latent path length does not match the number of periods");
        for (double v : x)
            if (!std::isfinite(v)) throw InvalidParameter("latent path entries must be finite");
    }
};

namespace detail {

inline double default_argument(const ModelParams& params, double x) {
    return (params.default_threshold() - std::sqrt(params.rho) * x) / std::sqrt(1.0 - params.rho);
}

} // namespace detail

/// Lambda(x) = P[default | X = x].
inline double conditional_default_prob(const ModelParams& params, double x) {
    params.validate();
    return norm_cdf(detail::default_argument(params, x));
}

/// 1 - Lambda(x), evaluated without cancellation.
inline double conditional_survival_prob(const ModelParams& params, double x) {
    params.validate();
    return norm_cdf(-detail::default_argument(params, x));
}

/// Expected loss rate of a defaulted loan given X = x, linearised as
/// E[1 - R | x] = 1 - mu - sigma sqrt(omega) x.
inline double conditional_loss_rate(const ModelParams& params, double x) {
    params.validate();
    return 1.0 - params.mu - params.sigma * std::sqrt(params.omega) * x;
}

/// Loss rate of the infinitely granular portfolio at X = x.
inline double limiting_loss(const ModelParams& params, double x) {
    return conditional_default_prob(params, x) * conditional_loss_rate(params, x);
}

/// alpha-quantile of the limiting loss. The loss is decreasing in X, so
/// the quantile is attained at X = Phi^-1(1 - alpha).
inline double analytic_limit_quantile(const ModelParams& params, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("quantile level must lie in (0, 1)");
    return limiting_loss(params, norm_quantile(1.0 - alpha));
}

} // namespace lgdcap

#endif
