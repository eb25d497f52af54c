#pragma once

#include <cstdint>
#include <random>

namespace funcdiff {

// Deterministic random source. Gaussian variates use an explicit Box-Muller
// transform instead of std::normal_distribution so that the draw sequence is
// fully pinned down by the seed, independent of the standard library build.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Standard normal. Generates pairs, caches the spare.
    double normal();

    // Uniform integer on {lo, ..., hi} inclusive, via rejection.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace funcdiff
