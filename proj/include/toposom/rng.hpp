#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace toposom {

// splitmix64 step, used to derive independent seed streams from one root seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Named seed streams so the same root seed never feeds two consumers the
// same sequence.
enum class SeedStream : std::uint64_t {
    split = 1,
    init = 2,
    sampler = 3,
    synth = 4,
    trial = 5,
};

/// Deterministic random source: mt19937_64 with hand-rolled bounded/real
/// draws. std::mt19937_64 output is fixed by the standard, and none of the
/// distribution adapters below depend on libstdc++ internals, so sequences
/// are reproducible across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    Rng(std::uint64_t seed, SeedStream stream)
        : gen_(mix_seed(seed, static_cast<std::uint64_t>(stream))) {}

    std::uint64_t next() { return gen_(); }

    // Uniform integer in [0, n), unbiased (rejection sampling).
    std::size_t index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("Rng::index: n must be >= 1");
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % un);
    }

    // Uniform real in [0, 1) with 53 random bits.
    double real01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double real(double lo, double hi) { return lo + (hi - lo) * real01(); }

    // Log-uniform on [lo, hi], lo > 0.
    double log_real(double lo, double hi) {
        return std::exp(real(std::log(lo), std::log(hi)));
    }

    // Standard normal via Box-Muller (pairs cached).
    double gaussian() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = 1.0 - real01();  // (0, 1]
        const double u2 = real01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace toposom
