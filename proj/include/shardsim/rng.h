#ifndef SHARDSIM_RNG_H
#define SHARDSIM_RNG_H

#include <cstdint>
#include <random>
#include <string_view>

namespace shardsim {

/// Seedable 64-bit generator. The engine is std::mt19937_64, whose output
/// sequence is fixed by the C++ standard; the derived draws below use only
/// integer arithmetic so results are identical across standard libraries.
class Rng {
   public:
    static constexpr std::string_view algorithm_id = "mt19937_64";

    explicit Rng(uint64_t seed = 0) : engine_(seed) {
    }

    uint64_t next_u64() {
        return engine_();
    }

    /// Uniform double on [0, 1) with 53 bits of resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer on [0, n) by rejection sampling; n must be nonzero.
    uint64_t below(uint64_t n) {
        const uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
        uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    bool bit() {
        return (engine_() >> 63) != 0;
    }

   private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive independent per-trial seeds.
constexpr uint64_t mix_seed(uint64_t base, uint64_t index) {
    uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace shardsim

#endif
