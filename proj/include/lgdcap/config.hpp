#ifndef LGDCAP_CONFIG_HPP
#define LGDCAP_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <istream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "io.hpp"
#include "mcmc.hpp"
#include "model.hpp"

namespace lgdcap {

/// Everything a CLI run needs. Filled from defaults, then a flat
/// `key = value` file, then command-line overrides.
struct RunConfig {
    std::filesystem::path data;
    std::filesystem::path chain;
    std::filesystem::path out = ".";
    std::uint64_t seed = 1;
    unsigned threads = 1;

    PriorSpec prior;
    ChainConfig mcmc;
    /// Start the chain at the two-stage MLE instead of a uniform draw.
    bool init_from_mle = false;

    // Portfolio used for finite-J simulations.
    std::size_t borrowers = 5350;
    std::filesystem::path weights_file;
    RecoveryLink link = RecoveryLink::identity;
    bool floor_loss = false;

    // Capital stage.
    std::vector<double> q_levels{0.999};
    std::size_t capital_n = 1'000'000;
    /// Portfolio sizes for the predictive quantile; nullopt is J = infinity.
    std::vector<std::optional<std::size_t>> capital_borrowers{50, 500, 5350, std::nullopt};
    std::optional<double> reference_ec;
    std::optional<ModelParams> point_params;
    std::size_t inner_n = 200'000;
    bool finite_distribution = false;

    // Synthetic data.
    ModelParams sim_params{0.0133, 0.0623, 0.456, 0.457, 0.032};
    std::vector<std::int64_t> firm_counts = std::vector<std::int64_t>(18, 5350);
    std::int64_t first_year = 1982;
};

namespace detail {

inline std::string bad_value(std::string_view key, std::string_view value) {
    return "invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'";
}

inline double config_double(std::string_view key, std::string_view v) {
    const auto d = to_double(v);
    if (!d) throw InvalidParameter(bad_value(key, v));
    return *d;
}

inline std::uint64_t config_uint(std::string_view key, std::string_view v) {
    const auto i = to_int(v);
    if (!i || *i < 0) throw InvalidParameter(bad_value(key, v));
    return static_cast<std::uint64_t>(*i);
}

inline bool config_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw InvalidParameter(bad_value(key, v));
}

inline std::vector<double> config_doubles(std::string_view key, std::string_view v) {
    std::vector<double> out;
    for (auto f : split(v)) out.push_back(config_double(key, f));
    return out;
}

inline ModelParams config_params(std::string_view key, std::string_view v) {
    const auto d = config_doubles(key, v);
    if (d.size() != ModelParams::size) throw InvalidParameter(bad_value(key, v) + " (need p,rho,mu,sigma,omega)");
    ModelParams p{d[0], d[1], d[2], d[3], d[4]};
    p.validate();
    return p;
}

} // namespace detail

/// Applies one setting. Unknown keys are rejected.
inline void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
    using namespace detail;
    key = trim(key);
    value = trim(value);
    if (key == "data") cfg.data = std::string(value);
    else if (key == "chain") cfg.chain = std::string(value);
    else if (key == "out") cfg.out = std::string(value);
    else if (key == "seed") cfg.seed = config_uint(key, value);
    else if (key == "threads") cfg.threads = static_cast<unsigned>(config_uint(key, value));
    else if (key.starts_with("prior.")) {
        const auto rest = key.substr(6);
        const auto dot = rest.find('.');
        const auto name = rest.substr(0, dot);
        const auto side = dot == std::string_view::npos ? std::string_view{} : rest.substr(dot + 1);
        std::size_t k = ModelParams::size;
        for (std::size_t i = 0; i < ModelParams::size; ++i)
            if (name == param_names[i]) k = i;
        if (k == ModelParams::size || (side != "lower" && side != "upper"))
            throw InvalidParameter("unknown configuration key '" + std::string(key) + "'");
        (side == "lower" ? cfg.prior.bounds[k].lower : cfg.prior.bounds[k].upper) = config_double(key, value);
    }
    else if (key == "mcmc.burn_in") cfg.mcmc.burn_in = config_uint(key, value);
    else if (key == "mcmc.samples") cfg.mcmc.samples = config_uint(key, value);
    else if (key == "mcmc.tune_iters") cfg.mcmc.tune_iters = config_uint(key, value);
    else if (key == "mcmc.tune_window") cfg.mcmc.tune_window = config_uint(key, value);
    else if (key == "mcmc.target_accept") cfg.mcmc.target_accept = config_double(key, value);
    else if (key == "mcmc.thin") cfg.mcmc.thin = config_uint(key, value);
    else if (key == "mcmc.rw_sd") cfg.mcmc.initial_rw_sd = config_doubles(key, value);
    else if (key == "mcmc.init") {
        if (value == "uniform") cfg.init_from_mle = false;
        else if (value == "mle") cfg.init_from_mle = true;
        else throw InvalidParameter(bad_value(key, value));
    }
    else if (key == "mcmc.density") {
        if (value == "normal") cfg.mcmc.density = DefaultDensity::normal_approx;
        else if (value == "binomial") cfg.mcmc.density = DefaultDensity::binomial;
        else throw InvalidParameter(bad_value(key, value));
    }
    else if (key == "portfolio.borrowers") cfg.borrowers = config_uint(key, value);
    else if (key == "portfolio.weights_file") cfg.weights_file = std::string(value);
    else if (key == "portfolio.link") cfg.link = parse_link(value);
    else if (key == "portfolio.floor_loss") cfg.floor_loss = config_bool(key, value);
    else if (key == "capital.q") {
        cfg.q_levels = config_doubles(key, value);
        for (double q : cfg.q_levels)
            if (!(q > 0.0 && q < 1.0)) throw InvalidParameter(bad_value(key, value));
    }
    else if (key == "capital.n") cfg.capital_n = config_uint(key, value);
    else if (key == "capital.borrowers") {
        cfg.capital_borrowers.clear();
        for (auto f : split(value)) {
            if (f == "inf" || f == "infinity") cfg.capital_borrowers.push_back(std::nullopt);
            else cfg.capital_borrowers.push_back(config_uint(key, f));
        }
    }
    else if (key == "capital.reference_ec") cfg.reference_ec = config_double(key, value);
    else if (key == "capital.params") cfg.point_params = config_params(key, value);
    else if (key == "capital.inner_n") cfg.inner_n = config_uint(key, value);
    else if (key == "capital.finite_distribution") cfg.finite_distribution = config_bool(key, value);
    else if (key == "simulate.params") cfg.sim_params = config_params(key, value);
    else if (key == "simulate.firm_counts") {
        cfg.firm_counts.clear();
        for (auto f : split(value)) cfg.firm_counts.push_back(static_cast<std::int64_t>(config_uint(key, f)));
    }
    else if (key == "simulate.first_year") {
        const auto y = to_int(value);
        if (!y) throw InvalidParameter(bad_value(key, value));
        cfg.first_year = *y;
    }
    else throw InvalidParameter("unknown configuration key '" + std::string(key) + "'");
}

/// Applies a `key=value` string as given on the command line.
inline void apply_assignment(RunConfig& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw InvalidParameter("expected key=value, got '" + std::string(assignment) + "'");
    apply_setting(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

/// Reads `key = value` lines; '#' starts a comment.
inline void apply_config(RunConfig& cfg, std::istream& in, const std::string& source = "<config>") {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view v = line;
        if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
        v = detail::trim(v);
        if (v.empty()) continue;
        try {
            apply_assignment(cfg, v);
        } catch (const InvalidParameter& e) {
            throw InvalidParameter(source + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

inline void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    apply_config(cfg, in, path.string());
}

} // namespace lgdcap

#endif
