#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace srep {

namespace detail {

// splitmix64 finalizer; also used as a stateless mixing function.
inline std::uint64_t splitmix64_step(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Stateless 64-bit mix of two words. Used to derive child stream seeds and
// per-grid-point noise without storing tables.
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    std::uint64_t state = a ^ (detail::rotl(b, 31) + 0x9e3779b97f4a7c15ULL);
    std::uint64_t out = detail::splitmix64_step(state);
    return out ^ detail::splitmix64_step(state);
}

// Deterministic pseudo-random stream: xoshiro256++ seeded through splitmix64.
// The integer and uniform layers produce identical sequences for identical
// seeds on every platform; the Gaussian layer goes through libm and is exact
// per platform. Child streams are decorrelated by construction and safe to
// hand to concurrent workers.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = detail::splitmix64_step(sm);
    }

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t x = next_u64();
            if (x >= threshold) return x % n;
        }
    }

    // Standard Gaussian via Box-Muller; the second deviate of each pair is
    // cached so consecutive calls consume uniforms in a fixed pattern.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Independent stream addressed by index; derivation is pure in
    // (seed, index) so parallel schedules cannot perturb it.
    [[nodiscard]] RngStream child(std::uint64_t index) const {
        return RngStream(mix64(seed_, index));
    }

private:
    std::array<std::uint64_t, 4> state_{};
    std::uint64_t seed_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace srep
