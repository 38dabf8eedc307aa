#ifndef LGDCAP_RANDOM_HPP
#define LGDCAP_RANDOM_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

#include "normal.hpp"

namespace lgdcap {

/// One step of the splitmix64 sequence; also used as a 64-bit mixer.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t x) {
    return splitmix64(x);
}

/// Seed splitting: (seed, tag) -> independent stream seed.
///
/// The tag is hashed with 64-bit FNV-1a and combined with the seed through
/// two rounds of splitmix64, so stages with different tags never share
/// a stream and adding a stage never shifts another stage's seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix64(mix64(seed) ^ h);
}

/// xoshiro256++ (Blackman & Vigna). Satisfies UniformRandomBitGenerator.
class Xoshiro256pp {
  public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed = 0) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> s_{};
};

/// Random stream with the variates the library needs.
///
/// All transforms are written out here instead of using <random>
/// distributions, whose algorithms differ between standard libraries;
/// draws are therefore identical on every platform with IEEE doubles and
/// a correctly rounded libm.
class Stream {
  public:
    explicit Stream(std::uint64_t seed) : engine_(seed) {}

    /// Substream for item `index` of a computation seeded with `seed`.
    /// Work split over any number of threads draws the same numbers.
    static Stream substream(std::uint64_t seed, std::uint64_t index) {
        return Stream(mix64(seed ^ mix64(index + 0x632be59bd9b4e019ULL)));
    }

    /// Uniform on the open interval (0, 1).
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Lemire's nearly divisionless method.
        unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(engine_()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Standard normal via the Marsaglia polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    Xoshiro256pp& engine() { return engine_; }

  private:
    Xoshiro256pp engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace lgdcap

#endif
