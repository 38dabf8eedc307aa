// Acceptance suite. Run with no arguments for every criterion or with
// `--criterion N` for one; prints one PASS/FAIL line per criterion and
// exits non-zero when any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <boost/math/tools/minima.hpp>

#include "lgdcap.hpp"

using namespace lgdcap;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const ModelParams kReference{0.0133, 0.0623, 0.456, 0.457, 0.032};

// ---------------------------------------------------------------- 1
Outcome closed_form_table() {
    const ModelParams th{0.0123, 0.0406, 0.438, 0.0845, 0.0998};
    const auto t0 = Clock::now();
    const CapitalPoint c = stressed_capital(th, 0.999);
    const double ms = 1e3 * seconds_since(t0);
    const auto rel = [](double v, double ref) { return std::abs(v / ref - 1.0); };
    const bool ok = rel(c.pd, 0.0476) <= 0.005 && rel(c.lgd, 0.644) <= 0.005 && rel(c.ec, 0.0307) <= 0.005 && ms < 1.0;
    return {ok, fmt("PD=%.6f (rel err %.4f) LGD=%.6f (%.4f) EC=%.6f (%.4f), %.3f ms; tolerance 0.005", c.pd,
                    rel(c.pd, 0.0476), c.lgd, rel(c.lgd, 0.644), c.ec, rel(c.ec, 0.0307), ms)};
}

// ---------------------------------------------------------------- 2
// Nelder-Mead on the unconstrained (logit p, logit rho) scale, then
// alternating one-dimensional Brent polishing on the original scale.
std::array<double, 2> numeric_default_mle(const YearlyObservations& data) {
    const auto logistic = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    const auto f = [&](const std::array<double, 2>& z) {
        return -log_likelihood_default_approx(logistic(z[0]), logistic(z[1]), data);
    };
    double mean_rate = 0.0;
    for (const auto& r : data.records) mean_rate += r.default_rate() / static_cast<double>(data.size());
    std::array<std::array<double, 2>, 3> s{{{std::log(mean_rate / (1 - mean_rate)), std::log(0.1 / 0.9)}}};
    s[1] = {s[0][0] + 0.5, s[0][1]};
    s[2] = {s[0][0], s[0][1] + 0.5};
    std::array<double, 3> fv{f(s[0]), f(s[1]), f(s[2])};
    for (int it = 0; it < 5000; ++it) {
        std::array<int, 3> idx{0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        const auto best = s[idx[0]], mid = s[idx[1]], worst = s[idx[2]];
        const double fb = fv[idx[0]], fm = fv[idx[1]], fw = fv[idx[2]];
        if (std::abs(fw - fb) < 1e-15 * (1 + std::abs(fb))) break;
        const std::array<double, 2> c{(best[0] + mid[0]) / 2, (best[1] + mid[1]) / 2};
        const auto along = [&](double t) { return std::array<double, 2>{c[0] + t * (worst[0] - c[0]), c[1] + t * (worst[1] - c[1])}; };
        const auto r = along(-1.0);
        const double fr = f(r);
        std::array<double, 2> next;
        double fn;
        if (fr < fb) {
            const auto e = along(-2.0);
            const double fe = f(e);
            next = fe < fr ? e : r;
            fn = std::min(fe, fr);
        } else if (fr < fm) {
            next = r;
            fn = fr;
        } else {
            const auto k = fr < fw ? along(-0.5) : along(0.5);
            const double fk = f(k);
            if (fk < std::min(fr, fw)) {
                next = k;
                fn = fk;
            } else {
                for (int j : {idx[1], idx[2]}) {
                    s[j] = {(s[j][0] + best[0]) / 2, (s[j][1] + best[1]) / 2};
                    fv[j] = f(s[j]);
                }
                continue;
            }
        }
        s[idx[2]] = next;
        fv[idx[2]] = fn;
    }
    const auto i0 = std::min_element(fv.begin(), fv.end()) - fv.begin();
    double p = logistic(s[i0][0]), rho = logistic(s[i0][1]);
    for (int round = 0; round < 500; ++round) {
        const double p_old = p, rho_old = rho;
        p = boost::math::tools::brent_find_minima(
                [&](double v) { return -log_likelihood_default_approx(v, rho, data); }, p * 0.9, std::min(0.999, p * 1.1), 60)
                .first;
        rho = boost::math::tools::brent_find_minima(
                  [&](double v) { return -log_likelihood_default_approx(p, v, data); }, rho * 0.9, std::min(0.999, rho * 1.1), 60)
                  .first;
        if (std::abs(p - p_old) < 1e-13 && std::abs(rho - rho_old) < 1e-13) break;
    }
    return {p, rho};
}

Outcome mle_closed_vs_numeric() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    int used = 0, skipped = 0;
    for (std::uint64_t seed = 1; used < 50; ++seed) {
        const auto data = simulate_dataset(kReference, std::vector<std::int64_t>(18, 5000), derive_seed(seed, "acc2")).data;
        bool zero = false;
        for (const auto& r : data.records) zero |= r.defaults == 0;
        if (zero) {
            ++skipped;
            continue;
        }
        const auto closed = fit_default_closed_form(data);
        const auto num = numeric_default_mle(data);
        worst = std::max({worst, std::abs(closed.p - num[0]), std::abs(closed.rho - num[1])});
        ++used;
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-6 && secs < 30.0,
            fmt("50 datasets (%d skipped for a zero-default year), max |closed - numeric| = %.3g (tol 1e-6), %.2f s",
                skipped, worst, secs)};
}

// ---------------------------------------------------------------- 3
double ks_against_grid(std::vector<double> draws, const std::vector<double>& edges, const std::vector<double>& mass) {
    std::sort(draws.begin(), draws.end());
    // Grid CDF, linear within each cell.
    std::vector<double> cum(mass.size() + 1, 0.0);
    for (std::size_t i = 0; i < mass.size(); ++i) cum[i + 1] = cum[i] + mass[i];
    const auto cdf = [&](double v) {
        if (v <= edges.front()) return 0.0;
        if (v >= edges.back()) return 1.0;
        const auto j = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin()) - 1;
        return cum[j] + mass[j] * (v - edges[j]) / (edges[j + 1] - edges[j]);
    };
    double d = 0.0;
    const double n = static_cast<double>(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double f = cdf(draws[i]);
        d = std::max({d, std::abs(f - (i + 1) / n), std::abs(f - i / n)});
    }
    return d;
}

Outcome reduced_problem_grid() {
    const auto t0 = Clock::now();
    const ModelParams truth{0.02, 0.1, 0.45, 0.3, 0.2};
    const auto ds = simulate_dataset(truth, std::vector<std::int64_t>(6, 1000), derive_seed(3, "acc3"));
    const PriorSpec prior;
    const auto log_post = [&](double p, double rho) {
        ModelParams th = truth;
        th.p = p;
        th.rho = rho;
        if (!prior.contains(th)) return neg_inf;
        return log_posterior({th, ds.true_latent}, ds.data, prior);
    };

    // Coarse log-spaced scan to locate the region holding the mass.
    const int coarse = 400;
    const auto logspace = [](double a, double b, int i, int n) { return a * std::pow(b / a, double(i) / (n - 1)); };
    double top = neg_inf;
    std::vector<double> cv(coarse * coarse);
    for (int i = 0; i < coarse; ++i)
        for (int j = 0; j < coarse; ++j) {
            cv[i * coarse + j] = log_post(logspace(1e-4, 0.5, i, coarse), logspace(1e-4, 0.95, j, coarse));
            top = std::max(top, cv[i * coarse + j]);
        }
    int i_lo = coarse, i_hi = -1, j_lo = coarse, j_hi = -1;
    for (int i = 0; i < coarse; ++i)
        for (int j = 0; j < coarse; ++j)
            if (cv[i * coarse + j] > top - 25.0) {
                i_lo = std::min(i_lo, i), i_hi = std::max(i_hi, i);
                j_lo = std::min(j_lo, j), j_hi = std::max(j_hi, j);
            }
    const double p_lo = logspace(1e-4, 0.5, std::max(0, i_lo - 1), coarse);
    const double p_hi = logspace(1e-4, 0.5, std::min(coarse - 1, i_hi + 1), coarse);
    const double r_lo = logspace(1e-4, 0.95, std::max(0, j_lo - 1), coarse);
    const double r_hi = logspace(1e-4, 0.95, std::min(coarse - 1, j_hi + 1), coarse);

    // 200 x 200 grid of cell masses (midpoint rule).
    const int n = 200;
    std::vector<double> pe(n + 1), re(n + 1), lv(n * n);
    for (int i = 0; i <= n; ++i) {
        pe[i] = p_lo + (p_hi - p_lo) * i / n;
        re[i] = r_lo + (r_hi - r_lo) * i / n;
    }
    double m = neg_inf;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            lv[i * n + j] = log_post(0.5 * (pe[i] + pe[i + 1]), 0.5 * (re[j] + re[j + 1]));
            m = std::max(m, lv[i * n + j]);
        }
    std::vector<double> mp(n, 0.0), mr(n, 0.0);
    double z = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double w = std::exp(lv[i * n + j] - m);
            mp[i] += w;
            mr[j] += w;
            z += w;
        }
    for (auto& v : mp) v /= z;
    for (auto& v : mr) v /= z;

    ChainConfig cfg;
    cfg.seed = derive_seed(3, "acc3-chain");
    cfg.samples = 100000;
    cfg.burn_in = 5000;
    cfg.tune_iters = 5000;
    cfg.initial_state = AugmentedState{truth, ds.true_latent};
    cfg.fixed.assign(ModelParams::size + 6, true);
    cfg.fixed[0] = cfg.fixed[1] = false;
    const auto chain = run_chain(ds.data, prior, cfg);
    const double ks_p = ks_against_grid(chain.column(0), pe, mp);
    const double ks_r = ks_against_grid(chain.column(1), re, mr);
    const double secs = seconds_since(t0);
    return {ks_p < 0.05 && ks_r < 0.05 && secs < 120.0,
            fmt("KS(p)=%.4f KS(rho)=%.4f (tol 0.05) on grid p in [%.4g, %.4g], rho in [%.4g, %.4g]; %zu draws, %.2f s",
                ks_p, ks_r, p_lo, p_hi, r_lo, r_hi, chain.rows(), secs)};
}

// ---------------------------------------------------------------- 4
struct EdgeBias {
    double z;
    double mass;
};

EdgeBias uniform_edge_bias(bool hastings) {
    auto flat = [](std::span<const double>) { return 0.0; };
    FunctionTarget<decltype(flat)> target(flat);
    ChainConfig cfg;
    cfg.tune_iters = 0;
    cfg.burn_in = 1000;
    cfg.samples = 1000000;
    cfg.hastings_correction = hastings;
    Stream rng(derive_seed(4, hastings ? "acc4-on" : "acc4-off"));
    const std::vector<Bounds> support{{0.0, 1.0}};
    const auto res = run_component_chain(target, {0.5}, support, {0.5}, cfg, rng);
    std::vector<double> edge(res.rows());
    const auto col = res.column(0);
    for (std::size_t i = 0; i < col.size(); ++i) edge[i] = (col[i] < 0.1 || col[i] >= 0.9) ? 1.0 : 0.0;
    const auto s = summarize_values(edge);
    return {(s.mean - 0.2) / batch_means_se(edge, 50), s.mean};
}

Outcome hastings_detection() {
    const auto off = uniform_edge_bias(false);
    const auto on = uniform_edge_bias(true);
    return {std::abs(off.z) > 3.0 && std::abs(on.z) < 2.0,
            fmt("edge mass without correction %.4f (z=%.1f, need |z|>3), with correction %.4f (z=%.2f, need |z|<2); "
                "expected 0.2",
                off.mass, off.z, on.mass, on.z)};
}

// ---------------------------------------------------------------- 5
Outcome coverage() {
    const auto t0 = Clock::now();
    std::array<int, ModelParams::size> hits{};
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
        const auto ds = simulate_dataset(kReference, std::vector<std::int64_t>(18, 5350), derive_seed(rep, "acc5-data"));
        ChainConfig cfg;
        cfg.seed = derive_seed(rep, "acc5-chain");
        cfg.burn_in = 5000;
        cfg.samples = 20000;
        const auto chain = run_chain(ds.data, PriorSpec{}, cfg);
        for (std::size_t k = 0; k < ModelParams::size; ++k) {
            const auto c = chain.column(k);
            const double lo = empirical_quantile(c, 0.025), hi = empirical_quantile(c, 0.975);
            hits[k] += (kReference[k] >= lo && kReference[k] <= hi) ? 1 : 0;
        }
    }
    const double secs = seconds_since(t0);
    bool ok = secs < 1800.0;
    std::string d;
    for (std::size_t k = 0; k < ModelParams::size; ++k) {
        ok &= hits[k] >= 17;
        d += fmt("%s %d/20 ", param_names[k], hits[k]);
    }
    return {ok, d + fmt("(need >= 17/20), %.1f s", secs)};
}

// ---------------------------------------------------------------- 6
Outcome mc_vs_limit() {
    const auto t0 = Clock::now();
    Stream rng(derive_seed(6, "acc6-theta"));
    const auto uni = [&](double a, double b) { return a + (b - a) * rng.uniform(); };
    double worst = 0.0;
    std::string d;
    for (int i = 0; i < 3; ++i) {
        const ModelParams th{uni(0.005, 0.03), uni(0.02, 0.10), uni(0.3, 0.6), uni(0.05, 0.5), uni(0.01, 0.3)};
        const auto est = quantile_given_params(th, Portfolio::equal_weights(100000), 0.999, 1000000,
                                               derive_seed(i, "acc6-mc"));
        const double exact = analytic_limit_quantile(th, 0.999);
        const double rel = std::abs(est.value / exact - 1.0);
        worst = std::max(worst, rel);
        d += fmt("[MC %.5f vs %.5f, rel %.4f, MC se %.5f] ", est.value, exact, rel, est.std_error);
    }
    const double secs = seconds_since(t0);
    return {worst <= 0.01 && secs < 120.0, d + fmt("tol 0.01, %.1f s", secs)};
}

// ---------------------------------------------------------------- 7
Outcome diversification() {
    const auto ds = simulate_dataset(kReference, std::vector<std::int64_t>(18, 5350), derive_seed(7, "acc7-data"));
    ChainConfig cfg;
    cfg.seed = derive_seed(7, "acc7-chain");
    cfg.burn_in = 5000;
    cfg.samples = 20000;
    const auto chain = run_chain(ds.data, PriorSpec{}, cfg);
    const std::vector<std::optional<std::size_t>> sizes{50, 500, 5350, std::nullopt};
    std::vector<QuantileEstimate> q;
    std::string d;
    for (const auto& j : sizes) {
        const std::optional<Portfolio> pf = j ? std::optional<Portfolio>(Portfolio::equal_weights(*j)) : std::nullopt;
        q.push_back(full_predictive_quantile(chain, pf, 0.999, 1000000, derive_seed(7, "acc7-pred")));
        d += fmt("J=%s %.5f (se %.5f) ", j ? std::to_string(*j).c_str() : "inf", q.back().value, q.back().std_error);
    }
    bool ok = true;
    for (std::size_t i = 1; i < q.size(); ++i)
        ok &= q[i].value <= q[i - 1].value + 2.0 * std::hypot(q[i].std_error, q[i - 1].std_error);
    ok &= q[1].value > q[3].value;
    return {ok, d};
}

// ---------------------------------------------------------------- 8
Outcome marginal_vs_augmented() {
    YearlyObservations data;
    data.records = {{1, 40, 2, 0.5}, {2, 40, 0, std::nullopt}};
    const ModelParams th{0.04, 0.3, 0.45, 0.3, 0.2};
    const auto kind = DefaultDensity::binomial;
    const auto marg = log_likelihood_marginal(th, data, 64, kind);

    const std::size_t n = 10000000;
    Stream rng(derive_seed(8, "acc8"));
    double sum = 0.0, sum2 = 0.0;
    const double shift = marg.value; // keeps the exponentials near 1
    AugmentedState st{th, LatentPath{{0.0, 0.0}}};
    const detail::PeriodKernel kernel(th);
    for (std::size_t i = 0; i < n; ++i) {
        double ll = 0.0;
        for (std::size_t t = 0; t < 2; ++t) ll += kernel.log_period(rng.normal(), data[t], kind);
        const double w = std::exp(ll - shift);
        sum += w;
        sum2 += w * w;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    const double rel = std::abs(mean - 1.0); // exp(log MC - log quadrature) - 1
    return {rel <= 1e-3, fmt("quadrature log L = %.10f, MC/quadrature - 1 = %.2e (MC rel se %.1e), tol 1e-3",
                             marg.value, mean - 1.0, se / mean)};
}

// ---------------------------------------------------------------- 9
int run_cli(const std::string& args) {
    const std::string cmd = std::string(LGDCAP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    const auto root = fs::temp_directory_path() / "lgdcap_acceptance_9";
    fs::remove_all(root);
    const auto stage_all = [&](const fs::path& dir, int threads) {
        const std::string t = " --threads " + std::to_string(threads) + " --out " + dir.string();
        const std::string data = " --data " + (dir / "dataset.csv").string();
        const std::string chain = " --chain " + (dir / "chain.csv").string();
        int rc = run_cli("simulate --seed 21" + t);
        rc |= run_cli("fit-mle" + data + t);
        rc |= run_cli("fit-mcmc --seed 22 --set mcmc.tune_iters=2000 --set mcmc.burn_in=1000 --set mcmc.samples=4000" +
                      data + t);
        rc |= run_cli("capital --seed 23 --set capital.n=200000 --set capital.finite_distribution=true "
                      "--set capital.inner_n=20000" + chain + data + t);
        rc |= run_cli("summarize" + chain + " --threads " + std::to_string(threads) + " --out " + (dir / "s").string());
        return rc;
    };
    int rc = 0;
    rc |= stage_all(root / "t1a", 1);
    rc |= stage_all(root / "t1b", 1);
    rc |= stage_all(root / "t4", 4);
    if (rc != 0) return {false, "a pipeline stage exited non-zero"};
    int files = 0;
    for (const auto& e : fs::recursive_directory_iterator(root / "t1a")) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), root / "t1a");
        const auto a = slurp(e.path());
        if (a != slurp(root / "t1b" / rel)) return {false, "repeat run differs: " + rel.string()};
        if (a != slurp(root / "t4" / rel)) return {false, "1 vs 4 threads differ: " + rel.string()};
        ++files;
    }
    return {files >= 12, fmt("%d output files bit-identical across repeat runs and 1 vs 4 threads", files)};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "closed-form stressed capital", closed_form_table},
        {2, "closed-form MLE vs numeric optimiser", mle_closed_vs_numeric},
        {3, "MCMC vs grid posterior (reduced problem)", reduced_problem_grid},
        {4, "Hastings correction detection", hastings_detection},
        {5, "synthetic-data coverage", coverage},
        {6, "Monte Carlo vs analytic limit quantile", mc_vs_limit},
        {7, "diversification ordering", diversification},
        {8, "marginal vs augmented likelihood", marginal_vs_augmented},
        {9, "determinism", determinism},
    };
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--criterion" && i + 1 < argc) only = std::atoi(argv[++i]);
        else {
            std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
            return 2;
        }
    }
    int failed = 0, ran = 0;
    for (const auto& c : all) {
        if (only != 0 && c.id != only) continue;
        ++ran;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    if (ran == 0) {
        std::fprintf(stderr, "no such criterion\n");
        return 2;
    }
    return failed == 0 ? 0 : 1;
}
