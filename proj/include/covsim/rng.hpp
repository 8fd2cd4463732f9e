#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace covsim {

/// 64-bit finalizer used to derive stream seeds (splitmix64).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for replicate `index` of a run with the given master seed.
inline std::uint64_t replicate_seed(std::uint64_t master_seed, std::uint64_t index) {
    return splitmix64(master_seed + 0x9E3779B97F4A7C15ULL * (index + 1));
}

/// Seeded generator with hand-rolled draws so that identical seeds give
/// identical streams on every platform (std distributions are
/// implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Unbiased integer in [0, bound). bound must be > 0.
    std::uint64_t uniform_below(std::uint64_t bound) {
        // rejection sampling on the top of the range
        const std::uint64_t threshold = -bound % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform_below(n)); }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

    /// Geometric on {0,1,2,...} with success probability p in (0,1].
    std::uint64_t geometric(double p) {
        if (p >= 1.0) return 0;
        double u = uniform01();
        if (u <= 0.0) u = 0x1.0p-53;
        return static_cast<std::uint64_t>(std::floor(std::log1p(-u) / std::log1p(-p)));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace covsim
