#ifndef LGDCAP_IO_HPP
#define LGDCAP_IO_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "mcmc.hpp"
#include "mle.hpp"
#include "observations.hpp"
#include "simulate.hpp"
#include "summary.hpp"

namespace lgdcap {

/// Shortest text that reads back to the same double (17 significant digits).
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> to_double(std::string_view s) {
    s = trim(s);
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::optional<std::int64_t> to_int(std::string_view s) {
    s = trim(s);
    std::int64_t v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
    return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    return out;
}

inline std::vector<std::string> read_lines(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    return lines;
}

} // namespace detail

inline constexpr std::string_view dataset_header = "year,obligors,defaults,avg_recovery";

/// Parses `year,obligors,defaults,avg_recovery` CSV. An empty recovery
/// field means missing and is legal only with zero defaults.
inline YearlyObservations parse_dataset(std::istream& in, const std::string& source = "<stream>") {
    const auto lines = detail::read_lines(in);
    if (lines.empty()) throw DataError(source + ": empty file");
    if (detail::trim(lines[0]) != dataset_header)
        throw DataError(source + ":1: expected header '" + std::string(dataset_header) + "'");
    YearlyObservations data;
    std::set<std::int64_t> years;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string where = source + ":" + std::to_string(i + 1) + ": ";
        if (detail::trim(lines[i]).empty()) throw DataError(where + "blank line inside data");
        const auto f = detail::split(lines[i]);
        if (f.size() != 4) throw DataError(where + "expected 4 fields, got " + std::to_string(f.size()));
        const auto year = detail::to_int(f[0]);
        const auto obligors = detail::to_int(f[1]);
        const auto defaults = detail::to_int(f[2]);
        if (!year || !obligors || !defaults) throw DataError(where + "malformed integer field");
        PeriodRecord rec{*year, *obligors, *defaults, std::nullopt};
        if (!f[3].empty()) {
            const auto r = detail::to_double(f[3]);
            if (!r || !std::isfinite(*r)) throw DataError(where + "malformed recovery field");
            rec.avg_recovery = *r;
        }
        try {
            YearlyObservations one{{rec}};
            one.validate();
        } catch (const DataError& e) {
            throw DataError(where + e.what());
        }
        if (!years.insert(rec.year).second)
            throw DataError(where + "duplicate year " + std::to_string(rec.year));
        data.records.push_back(rec);
    }
    if (data.records.empty()) throw DataError(source + ": no data rows");
    data.validate();
    return data;
}

inline YearlyObservations load_dataset(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    return parse_dataset(in, path.string());
}

inline void write_dataset(std::ostream& out, const YearlyObservations& data) {
    out << dataset_header << '\n';
    for (const auto& r : data.records) {
        out << r.year << ',' << r.obligors << ',' << r.defaults << ',';
        if (r.avg_recovery) out << format_double(*r.avg_recovery);
        out << '\n';
    }
}

inline void write_dataset(const std::filesystem::path& path, const YearlyObservations& data) {
    auto out = detail::open_out(path);
    write_dataset(out, data);
}

/// name,value rows: p, rho, mu, sigma, omega, x1..xT.
inline void write_truth(const std::filesystem::path& path, const ModelParams& params, const LatentPath& latent) {
    auto out = detail::open_out(path);
    out << "name,value\n";
    for (std::size_t k = 0; k < ModelParams::size; ++k) out << param_names[k] << ',' << format_double(params[k]) << '\n';
    for (std::size_t t = 0; t < latent.size(); ++t) out << 'x' << t + 1 << ',' << format_double(latent.x[t]) << '\n';
}

inline std::pair<ModelParams, LatentPath> read_truth(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    const auto lines = detail::read_lines(in);
    if (lines.empty() || detail::trim(lines[0]) != "name,value") throw DataError(path.string() + ": bad truth header");
    ModelParams params;
    LatentPath latent;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = detail::split(lines[i]);
        const auto v = f.size() == 2 ? detail::to_double(f[1]) : std::nullopt;
        if (!v) throw DataError(path.string() + ":" + std::to_string(i + 1) + ": malformed row");
        if (i <= ModelParams::size)
            params[i - 1] = *v;
        else
            latent.x.push_back(*v);
    }
    return {params, latent};
}

/// `iter,p,rho,mu,sigma,omega,x1,...,xT`, one row per stored draw.
inline void write_chain(const std::filesystem::path& path, const PosteriorSamples& samples) {
    auto out = detail::open_out(path);
    out << "iter";
    for (const char* n : param_names) out << ',' << n;
    for (std::size_t t = 0; t < samples.periods; ++t) out << ",x" << t + 1;
    out << '\n';
    for (std::size_t i = 0; i < samples.rows(); ++i) {
        out << i * samples.thin;
        for (double v : samples.row(i)) out << ',' << format_double(v);
        out << '\n';
    }
}

inline PosteriorSamples read_chain(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    const auto lines = detail::read_lines(in);
    if (lines.empty()) throw DataError(path.string() + ": empty chain file");
    const auto header = detail::split(lines[0]);
    if (header.size() < 1 + ModelParams::size || header[0] != "iter")
        throw DataError(path.string() + ":1: bad chain header");
    for (std::size_t k = 0; k < ModelParams::size; ++k)
        if (header[1 + k] != param_names[k]) throw DataError(path.string() + ":1: bad chain header");
    PosteriorSamples s;
    s.periods = header.size() - 1 - ModelParams::size;
    for (std::size_t t = 0; t < s.periods; ++t)
        if (header[1 + ModelParams::size + t] != "x" + std::to_string(t + 1))
            throw DataError(path.string() + ":1: bad chain header");
    std::optional<std::int64_t> first_iter, second_iter;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = detail::split(lines[i]);
        if (f.size() != header.size())
            throw DataError(path.string() + ":" + std::to_string(i + 1) + ": wrong number of fields");
        const auto it = detail::to_int(f[0]);
        if (!it) throw DataError(path.string() + ":" + std::to_string(i + 1) + ": malformed iter");
        if (i == 1) first_iter = it;
        if (i == 2) second_iter = it;
        for (std::size_t k = 1; k < f.size(); ++k) {
            const auto v = detail::to_double(f[k]);
            if (!v) throw DataError(path.string() + ":" + std::to_string(i + 1) + ": malformed value");
            s.draws.push_back(*v);
        }
    }
    if (first_iter && second_iter && *second_iter > *first_iter) s.thin = static_cast<std::size_t>(*second_iter - *first_iter);
    return s;
}

/// Parameter table with stressed capital: p,rho,mu,sigma,omega,PD,LGD,EC.
inline void write_mle(const std::filesystem::path& path, const ModelParams& params, const CapitalPoint& cap) {
    auto out = detail::open_out(path);
    out << "p,rho,mu,sigma,omega,PD,LGD,EC\n";
    for (std::size_t k = 0; k < ModelParams::size; ++k) out << format_double(params[k]) << ',';
    out << format_double(cap.pd) << ',' << format_double(cap.lgd) << ',' << format_double(cap.ec) << '\n';
}

inline std::pair<ModelParams, CapitalPoint> read_mle(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    const auto lines = detail::read_lines(in);
    if (lines.size() != 2 || detail::trim(lines[0]) != "p,rho,mu,sigma,omega,PD,LGD,EC")
        throw DataError(path.string() + ": bad mle file");
    const auto f = detail::split(lines[1]);
    if (f.size() != 8) throw DataError(path.string() + ":2: expected 8 fields");
    std::vector<double> v;
    for (auto s : f) {
        const auto d = detail::to_double(s);
        if (!d) throw DataError(path.string() + ":2: malformed value");
        v.push_back(*d);
    }
    return {ModelParams{v[0], v[1], v[2], v[3], v[4]}, CapitalPoint{v[5], v[6], v[7]}};
}

/// quantity,mode,mean,stdev,skewness,kurtosis,cv
inline void write_summary(const std::filesystem::path& path, const std::vector<std::string>& names,
                          const std::vector<PosteriorSummary>& rows) {
    auto out = detail::open_out(path);
    out << "quantity,mode,mean,stdev,skewness,kurtosis,cv\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& s = rows[i];
        out << names[i] << ',' << format_double(s.mode) << ',' << format_double(s.mean) << ','
            << format_double(s.stdev) << ',' << format_double(s.skewness) << ',' << format_double(s.kurtosis) << ','
            << format_double(s.cv) << '\n';
    }
}

/// Long-format report rows: quantity,statistic,value.
struct ReportRow {
    std::string quantity;
    std::string statistic;
    double value;
};

inline void write_report(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
    auto out = detail::open_out(path);
    out << "quantity,statistic,value\n";
    for (const auto& r : rows) out << r.quantity << ',' << r.statistic << ',' << format_double(r.value) << '\n';
}

inline std::vector<ReportRow> read_report(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    const auto lines = detail::read_lines(in);
    if (lines.empty() || detail::trim(lines[0]) != "quantity,statistic,value")
        throw DataError(path.string() + ": bad report header");
    std::vector<ReportRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = detail::split(lines[i]);
        const auto v = f.size() == 3 ? detail::to_double(f[2]) : std::nullopt;
        if (!v) throw DataError(path.string() + ":" + std::to_string(i + 1) + ": malformed row");
        rows.push_back({std::string(f[0]), std::string(f[1]), *v});
    }
    return rows;
}

/// One value per line.
inline void write_values(const std::filesystem::path& path, std::span<const double> values) {
    auto out = detail::open_out(path);
    for (double v : values) out << format_double(v) << '\n';
}

inline std::vector<double> read_values(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    std::vector<double> v;
    const auto lines = detail::read_lines(in);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto d = detail::to_double(lines[i]);
        if (!d) throw DataError(path.string() + ":" + std::to_string(i + 1) + ": malformed value");
        v.push_back(*d);
    }
    return v;
}

} // namespace lgdcap

#endif
