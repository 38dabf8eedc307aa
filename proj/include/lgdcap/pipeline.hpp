#ifndef LGDCAP_PIPELINE_HPP
#define LGDCAP_PIPELINE_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "capital.hpp"
#include "config.hpp"
#include "io.hpp"
#include "mcmc.hpp"
#include "mle.hpp"
#include "simulate.hpp"
#include "summary.hpp"

/// The CLI stages as library calls. Every stage seeds itself with
/// derive_seed(config.seed, <stage tag>).
namespace lgdcap {

namespace detail {

inline std::string borrowers_label(const std::optional<std::size_t>& j) {
    return j ? "J=" + std::to_string(*j) : std::string("J=inf");
}

inline std::string level_label(double q) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", q);
    return buf;
}

inline Portfolio portfolio_for(const RunConfig& cfg, std::size_t borrowers) {
    if (!cfg.weights_file.empty()) return Portfolio::from_amounts(read_values(cfg.weights_file), cfg.link, cfg.floor_loss);
    return Portfolio::equal_weights(borrowers, cfg.link, cfg.floor_loss);
}

inline void add_summary_rows(std::vector<ReportRow>& rows, const std::string& name, const PosteriorSummary& s) {
    rows.push_back({name, "mode", s.mode});
    rows.push_back({name, "mean", s.mean});
    rows.push_back({name, "stdev", s.stdev});
    rows.push_back({name, "skewness", s.skewness});
    rows.push_back({name, "kurtosis", s.kurtosis});
    rows.push_back({name, "cv", s.cv});
    rows.push_back({name, "q25", s.q25});
    rows.push_back({name, "q50", s.q50});
    rows.push_back({name, "q75", s.q75});
}

inline std::vector<std::string> column_names(std::size_t periods) {
    std::vector<std::string> names(param_names, param_names + ModelParams::size);
    for (std::size_t t = 0; t < periods; ++t) names.push_back("x" + std::to_string(t + 1));
    return names;
}

} // namespace detail

/// Synthetic dataset plus truth sidecar: dataset.csv, truth.csv.
inline SyntheticDataset run_simulate(const RunConfig& cfg) {
    const auto ds = simulate_dataset(cfg.sim_params, cfg.firm_counts, derive_seed(cfg.seed, "simulate"), cfg.first_year);
    write_dataset(cfg.out / "dataset.csv", ds.data);
    write_truth(cfg.out / "truth.csv", ds.true_params, ds.true_latent);
    return ds;
}

/// Two-stage approximate MLE: mle.csv (p,rho,mu,sigma,omega,PD,LGD,EC),
/// mle_latent.csv and, when there is anything to say, mle_notes.txt.
inline MleFit run_fit_mle(const RunConfig& cfg) {
    const YearlyObservations data = load_dataset(cfg.data);
    MleFit fit = fit_mle(data);
    write_mle(cfg.out / "mle.csv", fit.params, mle_capital_report(fit));
    {
        auto out = detail::open_out(cfg.out / "mle_latent.csv");
        out << "year,delta,x_hat\n";
        for (std::size_t t = 0; t < data.size(); ++t)
            out << data[t].year << ',' << format_double(fit.delta[t]) << ',' << format_double(fit.latent_hat.x[t]) << '\n';
    }
    std::filesystem::remove(cfg.out / "mle_notes.txt");
    if (!fit.notes.empty()) {
        auto out = detail::open_out(cfg.out / "mle_notes.txt");
        for (const auto& n : fit.notes) out << n << '\n';
    }
    return fit;
}

inline std::vector<PosteriorSummary> summarize_all(const PosteriorSamples& samples) {
    std::vector<PosteriorSummary> rows;
    for (std::size_t k = 0; k < samples.dim(); ++k) rows.push_back(summarize(samples, k, 2));
    return rows;
}

/// Tune, burn in and sample: chain.csv, summary.csv, diagnostics.txt.
inline PosteriorSamples run_fit_mcmc(const RunConfig& cfg) {
    const YearlyObservations data = load_dataset(cfg.data);
    ChainConfig cc = cfg.mcmc;
    cc.seed = derive_seed(cfg.seed, "fit-mcmc");
    std::string init_note;
    if (cfg.init_from_mle && !cc.initial_state) {
        try {
            const MleFit fit = fit_mle(data);
            if (cfg.prior.contains(fit.params)) cc.initial_state = AugmentedState{fit.params, fit.latent_hat};
            else init_note = "MLE start lies outside the prior bounds; drew the start uniformly";
        } catch (const Error& e) {
            init_note = std::string("MLE start unavailable (") + e.what() + "); drew the start uniformly";
        }
    }
    PosteriorSamples samples = run_chain(data, cfg.prior, cc);
    write_chain(cfg.out / "chain.csv", samples);

    const auto names = detail::column_names(samples.periods);
    if (samples.rows() >= 2) write_summary(cfg.out / "summary.csv", names, summarize_all(samples));

    auto diag = detail::open_out(cfg.out / "diagnostics.txt");
    diag << "stored_draws " << samples.rows() << "\nthin " << samples.thin << "\n";
    diag << "component acceptance_rate tuned_rw_sd last_tuning_rate half_split_z\n";
    for (std::size_t k = 0; k < samples.dim(); ++k) {
        diag << names[k] << ' ' << format_double(samples.acceptance_rates[k]) << ' '
             << format_double(samples.tuned_rw_sd[k]) << ' ' << format_double(samples.tuning_rates[k]) << ' ';
        if (samples.rows() >= 40) {
            const auto col = samples.column(k);
            const double z = half_split_z(col);
            diag << format_double(z) << (std::abs(z) < 3.0 ? "" : " (non-stationary?)");
        } else {
            diag << "nan";
        }
        diag << '\n';
    }
    for (const auto& w : samples.warnings) diag << "warning: " << w << '\n';
    if (!init_note.empty()) diag << "warning: " << init_note << '\n';
    return samples;
}

/// Summary table for every column of an existing chain file.
inline std::vector<PosteriorSummary> run_summarize(const std::filesystem::path& chain_path,
                                                   const std::filesystem::path& out_path) {
    const PosteriorSamples samples = read_chain(chain_path);
    const auto rows = summarize_all(samples);
    write_summary(out_path, detail::column_names(samples.periods), rows);
    return rows;
}

/// Everything the capital stage computes.
struct CapitalReport {
    ModelParams point_params;
    CapitalPoint point;
    std::vector<ReportRow> point_rows;
    std::vector<ReportRow> predictive_rows;
    std::vector<ReportRow> distribution_rows;
    std::vector<double> ec_samples;
    std::vector<double> predictive_limit_losses;
    std::optional<StressedReport> stressed;
};

/// Capital estimates from a stored chain: capital_point.csv,
/// capital_predictive.csv, capital_distribution.csv, ec_samples.txt and
/// predictive_limit_losses.txt.
inline CapitalReport run_capital(const RunConfig& cfg, const std::filesystem::path& samples_path) {
    const PosteriorSamples samples = read_chain(samples_path);
    if (samples.rows() == 0) throw DataError(samples_path.string() + ": chain has no draws");
    const SimulationOptions sim{cfg.threads, LossMethod::automatic};
    CapitalReport rep;
    rep.point_params = cfg.point_params ? *cfg.point_params : posterior_mean_params(samples);

    if (cfg.q_levels.empty()) throw InvalidParameter("capital.q: no quantile levels");
    rep.point = stressed_capital(rep.point_params, cfg.q_levels.front());
    for (double q : cfg.q_levels) {
        const std::string ql = detail::level_label(q);
        const CapitalPoint cp = stressed_capital(rep.point_params, q);
        rep.point_rows.push_back({"PD", "q" + ql, cp.pd});
        rep.point_rows.push_back({"LGD", "q" + ql, cp.lgd});
        rep.point_rows.push_back({"Q", "q" + ql + "_J=inf", cp.ec});
        for (const auto& j : cfg.capital_borrowers) {
            if (!j) continue;
            const auto est = quantile_given_params(rep.point_params, detail::portfolio_for(cfg, *j), q, cfg.capital_n,
                                                   derive_seed(cfg.seed, "capital-point-" + detail::borrowers_label(j)),
                                                   sim);
            rep.point_rows.push_back({"Q", "q" + ql + "_" + detail::borrowers_label(j), est.value});
            rep.point_rows.push_back({"Q_se", "q" + ql + "_" + detail::borrowers_label(j), est.std_error});
        }
    }
    for (std::size_t k = 0; k < ModelParams::size; ++k) rep.point_rows.push_back({param_names[k], "value", rep.point_params[k]});

    for (const auto& j : cfg.capital_borrowers) {
        const std::optional<Portfolio> pf = j ? std::optional<Portfolio>(detail::portfolio_for(cfg, *j)) : std::nullopt;
        const auto losses = predictive_losses(samples, pf, cfg.capital_n,
                                              derive_seed(cfg.seed, "capital-predictive-" + detail::borrowers_label(j)),
                                              cfg.floor_loss, sim);
        for (double q : cfg.q_levels) {
            const auto est = quantile_with_error(losses, q);
            rep.predictive_rows.push_back({detail::borrowers_label(j), "QP_" + detail::level_label(q), est.value});
            rep.predictive_rows.push_back({detail::borrowers_label(j), "QP_" + detail::level_label(q) + "_se", est.std_error});
        }
        if (!j) rep.predictive_limit_losses = losses;
    }

    const double alpha = cfg.q_levels.front();
    rep.ec_samples = quantile_distribution(samples, alpha, cfg.floor_loss);
    std::optional<double> reference = cfg.reference_ec;
    if (!reference && !cfg.data.empty()) reference = mle_capital_report(fit_mle(load_dataset(cfg.data)), alpha).ec;
    if (!reference) reference = rep.point.ec;
    if (samples.rows() >= 2 && *reference > 0.0) {
        rep.stressed = stressed_summaries(samples, alpha, *reference, cfg.floor_loss);
        detail::add_summary_rows(rep.distribution_rows, "PD", rep.stressed->pd_summary);
        detail::add_summary_rows(rep.distribution_rows, "LGD", rep.stressed->lgd_summary);
        detail::add_summary_rows(rep.distribution_rows, "Q_inf", rep.stressed->ec_summary);
        rep.distribution_rows.push_back({"deltaEC_pct", "reference_ec", *reference});
        rep.distribution_rows.push_back({"deltaEC_pct", "mean", rep.stressed->delta_mean});
        rep.distribution_rows.push_back({"deltaEC_pct", "q25", rep.stressed->delta_q25});
        rep.distribution_rows.push_back({"deltaEC_pct", "q50", rep.stressed->delta_q50});
        rep.distribution_rows.push_back({"deltaEC_pct", "q75", rep.stressed->delta_q75});
    }
    if (cfg.finite_distribution) {
        const auto pf = detail::portfolio_for(cfg, cfg.borrowers);
        const auto fin = quantile_distribution_finite(samples, pf, alpha, cfg.inner_n,
                                                      derive_seed(cfg.seed, "capital-distribution-finite"), sim);
        std::vector<double> values, errors;
        for (const auto& e : fin) {
            values.push_back(e.value);
            errors.push_back(e.std_error);
        }
        const std::string name = "Q_" + detail::borrowers_label(pf.size());
        if (values.size() >= 2) detail::add_summary_rows(rep.distribution_rows, name, summarize_values(values, 2));
        double mean_se = 0.0;
        for (double e : errors) mean_se += e;
        rep.distribution_rows.push_back({name, "mean_mc_se", mean_se / static_cast<double>(errors.size())});
    }

    write_report(cfg.out / "capital_point.csv", rep.point_rows);
    write_report(cfg.out / "capital_predictive.csv", rep.predictive_rows);
    write_report(cfg.out / "capital_distribution.csv", rep.distribution_rows);
    write_values(cfg.out / "ec_samples.txt", rep.ec_samples);
    write_values(cfg.out / "predictive_limit_losses.txt", rep.predictive_limit_losses);
    return rep;
}

} // namespace lgdcap

#endif
