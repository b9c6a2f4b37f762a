#pragma once

/// Portable random source.
///
/// The engine draws from std::mt19937_64, whose output sequence is fixed by
/// the standard. Standard distributions are implementation-defined, so the
/// conversions to doubles and bounded integers are done here by hand. That
/// keeps every trajectory bit-identical across compilers and platforms.
///
/// Stream splitting: run `r` of a campaign with master seed `s` uses the
/// generator seeded with splitmix64(splitmix64(s) ^ splitmix64(r + 1)).

#include <cstdint>
#include <random>

namespace cgaode {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30U)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27U)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31U);
}

inline constexpr std::uint64_t derive_stream_seed(std::uint64_t master_seed,
                                                  std::uint64_t run_index) noexcept {
    return splitmix64(splitmix64(master_seed) ^ splitmix64(run_index + 1));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11U) * 0x1.0p-53; }

    /// Uniform integer in [0, bound), rejection-sampled so it is unbiased.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = bound == 0 ? 0 : (~std::uint64_t{0} - bound + 1) % bound;
        for (;;) {
            const std::uint64_t x = engine_();
            if (x >= limit) {
                return x % bound;
            }
        }
    }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace cgaode
