#pragma once

#include <cmath>
#include <cstdint>

namespace augopt {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// xoshiro256** with explicit seeding. Distribution sampling is implemented
/// here rather than with <random> adaptors so that sequences are identical
/// across standard libraries.
class Generator {
  public:
    Generator(std::uint64_t stream_id, std::uint64_t step) {
        std::uint64_t seed = stream_id ^ (step * 0xD1342543DE82EF95ULL + 0x632BE59BD9B4E019ULL);
        for (auto& word : state_) word = splitmix64(seed);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Standard normal via the Marsaglia polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * u01() - 1.0;
            v = 2.0 * u01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    /// Unbiased uniform integer in [0, bound), Lemire's method.
    std::uint64_t uniform_below(std::uint64_t bound) {
        unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    double rademacher() { return (next() >> 63) ? 1.0 : -1.0; }

    /// Zero-mean unit-variance uniform, supported on [-sqrt(3), sqrt(3)].
    double uniform_unit_variance() {
        constexpr double root3 = 1.7320508075688772;
        return root3 * (2.0 * u01() - 1.0);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4]{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// A named random stream. `at(t)` yields a generator that depends only on
/// (stream_id, t), so sampling at step t is reproducible regardless of what
/// was drawn at other steps. Parallel trajectories use disjoint stream ids
/// (master seed XOR trajectory index).
struct RngStream {
    std::uint64_t stream_id = 0;
    Generator at(std::uint64_t step) const { return Generator(stream_id, step); }
};

namespace seed_salt {
// Distinct sub-stream tags derived from one user-facing master seed.
inline constexpr std::uint64_t weights_init = 0xA076'1D64'78BD'642FULL;
inline constexpr std::uint64_t bootstrap = 0xE703'7ED1'A0B4'28DBULL;
inline constexpr std::uint64_t synthetic_data = 0x8EBC'6AF0'9C88'C6E3ULL;
inline constexpr std::uint64_t moment_mc = 0x5899'16CA'F2A8'2D5BULL;
}  // namespace seed_salt

}  // namespace augopt
