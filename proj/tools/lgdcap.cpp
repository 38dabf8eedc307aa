#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lgdcap.hpp"

namespace {

enum ExitCode : int { ok = 0, usage = 1, data_error = 2, numerical = 3 };

struct CommonFlags {
    std::string config;
    std::vector<std::string> settings;
    std::optional<std::string> data;
    std::optional<std::string> out;
    std::optional<std::string> chain;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "key = value configuration file");
    cmd->add_option("--set", f.settings, "override a configuration key (key=value), repeatable");
    cmd->add_option("--data", f.data, "yearly dataset CSV (year,obligors,defaults,avg_recovery)");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--seed", f.seed, "master random seed");
    cmd->add_option("--threads", f.threads, "worker threads for Monte Carlo stages")->check(CLI::PositiveNumber);
}

lgdcap::RunConfig resolve(const CommonFlags& f) {
    lgdcap::RunConfig cfg;
    if (!f.config.empty()) lgdcap::apply_config_file(cfg, f.config);
    for (const auto& s : f.settings) lgdcap::apply_assignment(cfg, s);
    if (f.data) cfg.data = *f.data;
    if (f.out) cfg.out = *f.out;
    if (f.chain) cfg.chain = *f.chain;
    if (f.seed) cfg.seed = *f.seed;
    if (f.threads) cfg.threads = *f.threads;
    return cfg;
}

void require_path(const std::filesystem::path& p, const char* what) {
    if (p.empty()) throw lgdcap::InvalidParameter(std::string("missing ") + what);
}

void print_summary_table(const std::vector<std::string>& names, const std::vector<lgdcap::PosteriorSummary>& rows) {
    std::printf("%-8s %12s %12s %12s %10s %10s %10s\n", "", "Mode", "Mean", "Stdev", "Skewness", "Kurtosis", "CV");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        std::printf("%-8s %12.6g %12.6g %12.6g %10.4g %10.4g %10.4g\n", names[i].c_str(), r.mode, r.mean, r.stdev,
                    r.skewness, r.kurtosis, r.cv);
    }
}

int run(int argc, char** argv) {
    CLI::App app{"Economic capital under the one-factor default/recovery model"};
    app.require_subcommand(1);
    CommonFlags flags;

    auto* sim = app.add_subcommand("simulate", "simulate a yearly dataset from known parameters");
    auto* mle = app.add_subcommand("fit-mle", "two-stage approximate maximum likelihood fit");
    auto* mcmc = app.add_subcommand("fit-mcmc", "posterior sampling by Metropolis-within-Gibbs");
    auto* cap = app.add_subcommand("capital", "capital estimates from a stored chain");
    auto* sum = app.add_subcommand("summarize", "summary statistics of a stored chain");
    for (auto* c : {sim, mle, mcmc, cap, sum}) add_common(c, flags);
    cap->add_option("--chain", flags.chain, "chain CSV written by fit-mcmc");
    sum->add_option("--chain", flags.chain, "chain CSV written by fit-mcmc");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : usage;
    }

    lgdcap::RunConfig cfg = resolve(flags);
    std::filesystem::create_directories(cfg.out);

    if (sim->parsed()) {
        const auto ds = lgdcap::run_simulate(cfg);
        std::printf("wrote %zu periods to %s\n", ds.data.size(), (cfg.out / "dataset.csv").c_str());
    } else if (mle->parsed()) {
        require_path(cfg.data, "--data");
        const auto fit = lgdcap::run_fit_mle(cfg);
        const auto cp = lgdcap::mle_capital_report(fit);
        std::printf("p=%.6g rho=%.6g mu=%.6g sigma=%.6g omega=%.6g\nPD=%.6g LGD=%.6g EC=%.6g\n", fit.params.p,
                    fit.params.rho, fit.params.mu, fit.params.sigma, fit.params.omega, cp.pd, cp.lgd, cp.ec);
        for (const auto& n : fit.notes) std::printf("note: %s\n", n.c_str());
    } else if (mcmc->parsed()) {
        require_path(cfg.data, "--data");
        const auto samples = lgdcap::run_fit_mcmc(cfg);
        if (samples.rows() >= 2) {
            std::vector<std::string> names(lgdcap::param_names, lgdcap::param_names + lgdcap::ModelParams::size);
            std::vector<lgdcap::PosteriorSummary> rows;
            for (std::size_t k = 0; k < lgdcap::ModelParams::size; ++k) rows.push_back(lgdcap::summarize(samples, k, 2));
            print_summary_table(names, rows);
        }
        for (const auto& w : samples.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    } else if (cap->parsed()) {
        require_path(cfg.chain, "--chain");
        const auto rep = lgdcap::run_capital(cfg, cfg.chain);
        std::printf("PD=%.6g LGD=%.6g EC=%.6g at the point estimate\n", rep.point.pd, rep.point.lgd, rep.point.ec);
        for (const auto& r : rep.predictive_rows)
            std::printf("%s %s %.6g\n", r.quantity.c_str(), r.statistic.c_str(), r.value);
    } else if (sum->parsed()) {
        require_path(cfg.chain, "--chain");
        const auto path = cfg.out / "summary.csv";
        const auto rows = lgdcap::run_summarize(cfg.chain, path);
        const auto samples_dim = rows.size();
        std::vector<std::string> names(lgdcap::param_names, lgdcap::param_names + lgdcap::ModelParams::size);
        for (std::size_t t = lgdcap::ModelParams::size; t < samples_dim; ++t)
            names.push_back("x" + std::to_string(t - lgdcap::ModelParams::size + 1));
        print_summary_table(names, rows);
    }
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const lgdcap::InvalidParameter& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    } catch (const lgdcap::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return data_error;
    } catch (const lgdcap::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return numerical;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "file error: " << e.what() << '\n';
        return data_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return numerical;
    }
}
