#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace ttc {

/** SplitMix64 finalizer. Used to derive independent stream seeds. */
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/** Order-sensitive combination of 64-bit words: h = splitmix64(h ^ w) per word, starting from h = seed. */
constexpr std::uint64_t hash_combine(std::uint64_t seed, std::initializer_list<std::uint64_t> words) noexcept {
    std::uint64_t h = splitmix64(seed);
    for (auto w : words) h = splitmix64(h ^ w);
    return h;
}

/**
 * Deterministic generator with platform-independent variates.
 *
 * The engine is std::mt19937_64, whose output sequence is fixed by the
 * standard. Distributions are implemented here rather than taken from
 * <random>, whose algorithms are implementation-defined:
 *   - uniform():      top 53 bits of one engine draw, scaled to [0, 1)
 *   - below(n):       rejection sampling on the full 64-bit range
 *   - normal():       Box-Muller on two uniforms, u1 mapped to (0, 1];
 *                     both outputs are used, cos branch first
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_{0.0};
    bool has_spare_{false};
};

} // namespace ttc
