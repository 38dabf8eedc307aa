#ifndef LGDCAP_MCMC_HPP
#define LGDCAP_MCMC_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "likelihood.hpp"
#include "model.hpp"
#include "normal.hpp"
#include "observations.hpp"
#include "random.hpp"
#include "summary.hpp"

namespace lgdcap {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

struct Bounds {
    double lower;
    double upper;

    bool contains(double v) const { return v > lower && v < upper; }
    double width() const { return upper - lower; }
};

/// Independent uniform priors on the five parameters, standard normal on
/// each latent factor.
struct PriorSpec {
    std::array<Bounds, ModelParams::size> bounds{{{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}, {0.01, 1.0}, {0.0, 1.0}}};

    void validate() const {
        for (std::size_t k = 0; k < bounds.size(); ++k)
            if (!(bounds[k].lower < bounds[k].upper) || !std::isfinite(bounds[k].lower) ||
                !std::isfinite(bounds[k].upper))
                throw InvalidParameter(std::string("prior bounds for ") + param_names[k] + " must be finite with a < b");
        const auto inside = [](const Bounds& b, double lo, double hi) { return b.lower >= lo && b.upper <= hi; };
        if (!inside(bounds[0], 0.0, 1.0) || !inside(bounds[1], 0.0, 1.0) || !inside(bounds[4], 0.0, 1.0) ||
            bounds[3].lower < 0.0)
            throw InvalidParameter("prior bounds exceed the legal parameter domain");
    }

    bool contains(const ModelParams& params) const {
        for (std::size_t k = 0; k < bounds.size(); ++k)
            if (!bounds[k].contains(params[k])) return false;
        return true;
    }

    double log_normaliser() const {
        double s = 0.0;
        for (const auto& b : bounds) s -= std::log(b.width());
        return s;
    }
};

/// Unnormalised log posterior of the augmented state: augmented
/// log-likelihood + standard normal latent prior + uniform parameter
/// prior. -inf outside the prior support.
inline double log_posterior(const AugmentedState& state, const YearlyObservations& data, const PriorSpec& prior,
                            DefaultDensity kind = DefaultDensity::normal_approx) {
    if (!prior.contains(state.params)) return neg_inf;
    double lp = log_likelihood_augmented(state, data, kind);
    for (double x : state.latent.x) lp += norm_logpdf(x);
    return lp + prior.log_normaliser();
}

/// log q(to | from) for a N(from, sd^2) proposal truncated to [a, b].
inline double truncated_gaussian_proposal_logdensity(double from, double to, double sd, double a, double b) {
    if (!(a < b) || !(sd > 0.0)) throw InvalidParameter("truncated proposal needs a < b and sd > 0");
    if (!(to >= a && to <= b)) throw InvalidParameter("truncated proposal evaluated outside its support");
    const double log_mass = log_norm_interval((a - from) / sd, (b - from) / sd);
    if (!std::isfinite(log_mass)) throw NumericalError("truncated proposal window carries no probability mass");
    return normal_logpdf(to, from, sd) - log_mass;
}

/// Draw from N(from, sd^2) truncated to [a, b] by inversion.
inline double sample_truncated_gaussian(double from, double sd, double a, double b, Stream& rng) {
    if (std::isinf(a) && std::isinf(b)) return from + sd * rng.normal();
    const double lo = (a - from) / sd, hi = (b - from) / sd;
    const double u = rng.uniform();
    double z;
    if (lo > 0.0) {
        // Upper tail: invert the survival function.
        const double slo = norm_cdf(-lo), shi = norm_cdf(-hi);
        z = -norm_quantile(slo - u * (slo - shi));
    } else {
        const double plo = norm_cdf(lo), phi = norm_cdf(hi);
        z = norm_quantile(plo + u * (phi - plo));
    }
    if (!std::isfinite(z)) throw NumericalError("truncated proposal window carries no probability mass");
    return std::clamp(from + sd * z, a, b);
}

/// A log density over a state vector that supports single-component
/// updates. evaluate() scores a full state and primes any cache;
/// propose() scores the state with component k set to v; accept()
/// commits the most recent proposal.
template <class T>
concept ComponentTarget = requires(T& t, std::span<const double> s, std::size_t k, double v) {
    { t.evaluate(s) } -> std::convertible_to<double>;
    { t.propose(s, k, v) } -> std::convertible_to<double>;
    t.accept();
};

/// Adapts a plain log-density callable to ComponentTarget.
template <class F>
class FunctionTarget {
  public:
    explicit FunctionTarget(F f) : f_(std::move(f)) {}
    double evaluate(std::span<const double> s) { return f_(s); }
    double propose(std::span<const double> s, std::size_t k, double v) {
        scratch_.assign(s.begin(), s.end());
        scratch_[k] = v;
        return f_(std::span<const double>(scratch_));
    }
    void accept() {}

  private:
    F f_;
    std::vector<double> scratch_;
};

/// One Metropolis-Hastings update of component k.
///
/// The proposal is a Gaussian random walk truncated to [lower, upper]
/// (infinite bounds give the plain walk). The acceptance ratio carries the
/// proposal normalisers, which differ between the two directions whenever
/// the truncation binds; `hastings = false` drops them (test switch only).
template <ComponentTarget Target>
bool mh_step_component(std::vector<double>& state, std::size_t k, Target& target, double& log_target, double rw_sd,
                       double lower, double upper, Stream& rng, bool hastings = true) {
    const double current = state[k];
    const double proposal = sample_truncated_gaussian(current, rw_sd, lower, upper, rng);
    const double u = rng.uniform();
    if (proposal == current) {
        (void)target.propose(state, k, proposal);
        target.accept();
        return true;
    }
    const double lp = target.propose(state, k, proposal);
    if (lp == neg_inf || std::isnan(lp)) return false;
    double log_ratio = lp - log_target;
    if (hastings && !(std::isinf(lower) && std::isinf(upper))) {
        log_ratio += truncated_gaussian_proposal_logdensity(proposal, current, rw_sd, lower, upper) -
                     truncated_gaussian_proposal_logdensity(current, proposal, rw_sd, lower, upper);
    }
    if (std::log(u) < log_ratio) {
        state[k] = proposal;
        log_target = lp;
        target.accept();
        return true;
    }
    return false;
}

/// Settings of a tune / burn-in / sample run.
struct ChainConfig {
    std::size_t burn_in = 20000;
    std::size_t samples = 100000;
    std::size_t tune_iters = 20000;
    std::size_t tune_window = 100;
    double target_accept = 0.234;
    std::uint64_t seed = 0;
    /// Starting proposal sds: empty for defaults, 5 entries for the
    /// parameters only, or one per component.
    std::vector<double> initial_rw_sd;
    std::size_t thin = 1;
    /// Components held at their initial value (empty: none).
    std::vector<bool> fixed;
    /// Starting state; by default parameters are drawn uniformly inside
    /// the prior bounds and latent factors start at 0.
    std::optional<AugmentedState> initial_state;
    DefaultDensity density = DefaultDensity::normal_approx;
    /// Test switch: drop the truncated-proposal normalisers.
    bool hastings_correction = true;

    void validate() const {
        if (samples < 1) throw InvalidParameter("chain needs at least one stored sample");
        if (thin < 1) throw InvalidParameter("thinning factor must be >= 1");
        if (tune_window < 1) throw InvalidParameter("tuning window must be >= 1");
        if (!(target_accept > 0.0 && target_accept < 1.0)) throw InvalidParameter("target acceptance must lie in (0, 1)");
        for (double sd : initial_rw_sd)
            if (!(sd > 0.0) || !std::isfinite(sd)) throw InvalidParameter("proposal sds must be positive");
    }
};

/// Output of a generic component-wise chain.
struct ChainResult {
    std::size_t dim = 0;
    std::vector<double> draws; ///< row-major, one row per stored sweep
    std::vector<double> acceptance_rates; ///< sampling phase
    std::vector<double> tuned_rw_sd;
    std::vector<double> tuning_rates; ///< last tuning window
    std::vector<std::string> warnings;

    std::size_t rows() const { return dim == 0 ? 0 : draws.size() / dim; }
    std::span<const double> row(std::size_t i) const { return {draws.data() + i * dim, dim}; }
    std::vector<double> column(std::size_t k) const {
        std::vector<double> c(rows());
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = draws[i * dim + k];
        return c;
    }
};

/// Tuning, burn-in and sampling over every non-fixed component in index
/// order. Tuning multiplies each sd by exp(rate - target), clipped to
/// [0.5, 2], after every window; the sds are frozen afterwards.
template <ComponentTarget Target>
ChainResult run_component_chain(Target& target, std::vector<double> state, std::span<const Bounds> support,
                                std::vector<double> rw_sd, const ChainConfig& config, Stream& rng) {
    config.validate();
    const std::size_t dim = state.size();
    if (support.size() != dim || rw_sd.size() != dim) throw InvalidParameter("chain dimension mismatch");
    std::vector<bool> fixed = config.fixed;
    fixed.resize(dim, false);

    double log_target = target.evaluate(state);
    if (log_target == neg_inf || std::isnan(log_target))
        throw NumericalError("initial state has zero posterior density");

    std::vector<double> max_sd(dim, std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < dim; ++k)
        if (std::isfinite(support[k].lower) && std::isfinite(support[k].upper)) max_sd[k] = 100.0 * support[k].width();

    ChainResult out;
    out.dim = dim;
    out.tuning_rates.assign(dim, std::numeric_limits<double>::quiet_NaN());
    auto sweep = [&](std::vector<std::size_t>& accepted) {
        for (std::size_t k = 0; k < dim; ++k) {
            if (fixed[k]) continue;
            if (mh_step_component(state, k, target, log_target, rw_sd[k], support[k].lower, support[k].upper, rng,
                                  config.hastings_correction))
                ++accepted[k];
        }
    };

    std::vector<std::size_t> accepted(dim, 0);
    for (std::size_t it = 1; it <= config.tune_iters; ++it) {
        sweep(accepted);
        if (it % config.tune_window == 0) {
            for (std::size_t k = 0; k < dim; ++k) {
                if (fixed[k]) continue;
                const double rate = static_cast<double>(accepted[k]) / static_cast<double>(config.tune_window);
                out.tuning_rates[k] = rate;
                rw_sd[k] = std::min(max_sd[k], rw_sd[k] * std::clamp(std::exp(rate - config.target_accept), 0.5, 2.0));
            }
            std::fill(accepted.begin(), accepted.end(), 0);
        }
    }
    if (config.tune_iters >= config.tune_window) {
        for (std::size_t k = 0; k < dim; ++k) {
            if (fixed[k]) continue;
            const double r = out.tuning_rates[k];
            if (!(r >= 0.10 && r <= 0.45))
                out.warnings.push_back("tuning: component " + std::to_string(k) + " ended with acceptance " +
                                       std::to_string(r) + " (sd " + std::to_string(rw_sd[k]) + ")");
        }
    }

    for (std::size_t it = 0; it < config.burn_in; ++it) sweep(accepted);

    std::fill(accepted.begin(), accepted.end(), 0);
    out.draws.reserve((config.samples / config.thin + 1) * dim);
    for (std::size_t it = 0; it < config.samples; ++it) {
        sweep(accepted);
        if (it % config.thin == 0) out.draws.insert(out.draws.end(), state.begin(), state.end());
    }
    out.acceptance_rates.resize(dim);
    for (std::size_t k = 0; k < dim; ++k)
        out.acceptance_rates[k] = fixed[k] ? 0.0 : static_cast<double>(accepted[k]) / static_cast<double>(config.samples);
    out.tuned_rw_sd = std::move(rw_sd);
    return out;
}

/// Posterior of the augmented state with per-period caching: a latent
/// update rescores one period, a parameter update rescores all of them.
class LgdPosterior {
  public:
    LgdPosterior(const YearlyObservations& data, const PriorSpec& prior,
                 DefaultDensity kind = DefaultDensity::normal_approx)
        : data_(data), prior_(prior), kind_(kind), terms_(data.size()), pending_(data.size()) {}

    std::size_t dim() const { return ModelParams::size + data_.size(); }

    double evaluate(std::span<const double> s) {
        const ModelParams params = to_params(s);
        if (!prior_.contains(params)) return neg_inf;
        const detail::PeriodKernel kernel(params);
        for (std::size_t t = 0; t < data_.size(); ++t) terms_[t] = kernel.log_period(s[ModelParams::size + t], data_[t], kind_);
        return total(terms_, s, std::nullopt);
    }

    double propose(std::span<const double> s, std::size_t k, double v) {
        if (k < ModelParams::size) {
            ModelParams params = to_params(s);
            params[k] = v;
            if (!prior_.contains(params)) return neg_inf;
            const detail::PeriodKernel kernel(params);
            for (std::size_t t = 0; t < data_.size(); ++t)
                pending_[t] = kernel.log_period(s[ModelParams::size + t], data_[t], kind_);
            pending_k_ = k;
            return total(pending_, s, std::nullopt);
        }
        const std::size_t t = k - ModelParams::size;
        const detail::PeriodKernel kernel(to_params(s));
        pending_single_ = kernel.log_period(v, data_[t], kind_);
        pending_k_ = k;
        // Score with the one replaced term and latent value.
        std::swap(terms_[t], pending_single_);
        const double lp = total(terms_, s, std::make_pair(t, v));
        std::swap(terms_[t], pending_single_);
        return lp;
    }

    void accept() {
        if (pending_k_ < ModelParams::size)
            terms_.swap(pending_);
        else
            terms_[pending_k_ - ModelParams::size] = pending_single_;
    }

    static ModelParams to_params(std::span<const double> s) { return {s[0], s[1], s[2], s[3], s[4]}; }

  private:
    double total(const std::vector<double>& terms, std::span<const double> s,
                 std::optional<std::pair<std::size_t, double>> replaced) const {
        double lp = 0.0;
        for (double v : terms) lp += v;
        for (std::size_t t = 0; t < data_.size(); ++t) {
            const double x = (replaced && replaced->first == t) ? replaced->second : s[ModelParams::size + t];
            lp += norm_logpdf(x);
        }
        return lp + prior_.log_normaliser();
    }

    const YearlyObservations& data_;
    PriorSpec prior_;
    DefaultDensity kind_;
    std::vector<double> terms_;
    std::vector<double> pending_;
    double pending_single_ = 0.0;
    std::size_t pending_k_ = 0;
};

/// Stored draws of (p, rho, mu, sigma, omega, x_1..x_T).
struct PosteriorSamples {
    std::size_t periods = 0;
    std::vector<double> draws; ///< row-major, (5 + T) columns
    std::vector<double> acceptance_rates;
    std::vector<double> tuned_rw_sd;
    std::vector<double> tuning_rates;
    std::uint64_t seed = 0;
    std::size_t thin = 1;
    std::vector<std::string> warnings;

    std::size_t dim() const { return ModelParams::size + periods; }
    std::size_t rows() const { return dim() == 0 ? 0 : draws.size() / dim(); }
    std::span<const double> row(std::size_t i) const { return {draws.data() + i * dim(), dim()}; }
    ModelParams params(std::size_t i) const { return LgdPosterior::to_params(row(i)); }
    std::vector<double> column(std::size_t k) const {
        std::vector<double> c(rows());
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = draws[i * dim() + k];
        return c;
    }

    /// Single-atom posterior holding `params` (latent path empty).
    static PosteriorSamples degenerate(const ModelParams& params, std::size_t copies = 1) {
        PosteriorSamples s;
        for (std::size_t i = 0; i < copies; ++i)
            for (std::size_t k = 0; k < ModelParams::size; ++k) s.draws.push_back(params[k]);
        return s;
    }
};

/// Default starting proposal sd per parameter; latent factors use 0.5.
inline constexpr std::array<double, ModelParams::size> default_rw_sd{0.005, 0.02, 0.02, 0.05, 0.02};

/// Bayesian posterior sampling of the augmented state. Sweep order is
/// p, rho, mu, sigma, omega, x_1..x_T; parameter proposals are truncated
/// to the prior bounds, latent proposals are not.
inline PosteriorSamples run_chain(const YearlyObservations& data, const PriorSpec& prior, const ChainConfig& config) {
    data.validate();
    prior.validate();
    config.validate();
    if (data.size() < 2) throw DataError("MCMC needs at least two periods");
    const std::size_t periods = data.size();
    const std::size_t dim = ModelParams::size + periods;
    LgdPosterior target(data, prior, config.density);

    std::vector<Bounds> support(dim, Bounds{-std::numeric_limits<double>::infinity(),
                                            std::numeric_limits<double>::infinity()});
    for (std::size_t k = 0; k < ModelParams::size; ++k) support[k] = prior.bounds[k];

    std::vector<double> rw_sd(dim, 0.5);
    for (std::size_t k = 0; k < ModelParams::size; ++k) rw_sd[k] = default_rw_sd[k];
    if (config.initial_rw_sd.size() == ModelParams::size) {
        std::copy(config.initial_rw_sd.begin(), config.initial_rw_sd.end(), rw_sd.begin());
    } else if (config.initial_rw_sd.size() == dim) {
        rw_sd = config.initial_rw_sd;
    } else if (!config.initial_rw_sd.empty()) {
        throw InvalidParameter("initial_rw_sd must have 5 or 5+T entries");
    }
    if (!config.fixed.empty() && config.fixed.size() != dim)
        throw InvalidParameter("fixed mask must have 5+T entries");

    std::vector<double> state(dim, 0.0);
    if (config.initial_state) {
        config.initial_state->validate(periods);
        for (std::size_t k = 0; k < ModelParams::size; ++k) state[k] = config.initial_state->params[k];
        std::copy(config.initial_state->latent.x.begin(), config.initial_state->latent.x.end(),
                  state.begin() + ModelParams::size);
        if (!prior.contains(config.initial_state->params))
            throw InvalidParameter("initial state lies outside the prior support");
    } else {
        Stream init(derive_seed(config.seed, "mcmc-init"));
        for (int attempt = 0;; ++attempt) {
            for (std::size_t k = 0; k < ModelParams::size; ++k)
                state[k] = prior.bounds[k].lower + init.uniform() * prior.bounds[k].width();
            if (std::isfinite(target.evaluate(state))) break;
            if (attempt > 10000) throw NumericalError("could not find a starting state with positive density");
        }
    }

    Stream rng(derive_seed(config.seed, "mcmc-chain"));
    ChainResult res = run_component_chain(target, std::move(state), support, std::move(rw_sd), config, rng);

    PosteriorSamples out;
    out.periods = periods;
    out.draws = std::move(res.draws);
    out.acceptance_rates = std::move(res.acceptance_rates);
    out.tuned_rw_sd = std::move(res.tuned_rw_sd);
    out.tuning_rates = std::move(res.tuning_rates);
    out.warnings = std::move(res.warnings);
    out.seed = config.seed;
    out.thin = config.thin;
    return out;
}

/// Column selector for summaries: 0..4 parameters, 5.. latent factors.
inline PosteriorSummary summarize(const PosteriorSamples& samples, std::size_t column, std::size_t min_draws = 1000) {
    if (column >= samples.dim()) throw InvalidParameter("summarize: column out of range");
    const auto c = samples.column(column);
    return summarize_values(c, min_draws);
}

} // namespace lgdcap

#endif
