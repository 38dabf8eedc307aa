#ifndef LGDCAP_OBSERVATIONS_HPP
#define LGDCAP_OBSERVATIONS_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "error.hpp"

namespace lgdcap {

/// One period of portfolio history.
struct PeriodRecord {
    std::int64_t year = 0;
    std::int64_t obligors = 0;            ///< J_t
    std::int64_t defaults = 0;            ///< d_t
    std::optional<double> avg_recovery;   ///< mean recovery of the d_t defaults; empty when d_t = 0

    double default_rate() const { return static_cast<double>(defaults) / static_cast<double>(obligors); }
    bool has_recovery() const { return avg_recovery.has_value(); }

    friend bool operator==(const PeriodRecord&, const PeriodRecord&) = default;
};

/// Per-period default counts and average recoveries, t = 1..T.
struct YearlyObservations {
    std::vector<PeriodRecord> records;

    std::size_t size() const { return records.size(); }
    const PeriodRecord& operator[](std::size_t t) const { return records[t]; }

    /// Number of periods carrying a recovery observation.
    std::size_t recovery_count() const {
        std::size_t n = 0;
        for (const auto& r : records) n += r.has_recovery() ? 1 : 0;
        return n;
    }

    void validate() const {
        if (records.empty()) throw DataError("dataset has no periods");
        std::set<std::int64_t> years;
        for (const auto& r : records) {
            const std::string where = "year " + std::to_string(r.year) + ": ";
            if (!years.insert(r.year).second) throw DataError(where + "duplicate year");
            if (r.obligors < 1) throw DataError(where + "obligor count must be >= 1");
            if (r.defaults < 0 || r.defaults > r.obligors)
                throw DataError(where + "default count must lie in [0, obligors]");
            if (r.defaults == 0 && r.avg_recovery)
                throw DataError(where + "recovery present with zero defaults");
            if (r.defaults > 0 && !r.avg_recovery)
                throw DataError(where + "recovery missing although defaults occurred");
            if (r.avg_recovery && !std::isfinite(*r.avg_recovery))
                throw DataError(where + "recovery must be finite");
        }
    }

    friend bool operator==(const YearlyObservations&, const YearlyObservations&) = default;
};

} // namespace lgdcap

#endif
