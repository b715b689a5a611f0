#pragma once

#include <cstdint>
#include <string_view>

namespace regulus {

/// Counter-based SplitMix64 stream. Output depends only on (seed, stream name, draw index).
class Rng {
public:
    Rng(std::uint64_t seed, std::string_view stream);

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);
    /// Standard normal via Box-Muller (both variates of a pair are used).
    double normal();

    static std::uint64_t fnv1a(std::string_view s);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace regulus
