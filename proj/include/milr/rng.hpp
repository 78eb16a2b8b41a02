#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace milr {

/// splitmix64 step; used to decorrelate user seeds and replicate indices.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed-splitting rule for parallel work: sub-stream `index` of `base`.
/// Results are identical no matter how the indices are scheduled.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(splitmix64(base) + index);
}

/// Deterministic random source. All distributions are implemented on top of
/// the raw mt19937_64 stream so that draws are identical on every platform
/// with IEEE doubles (the std distribution objects are not portable).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the spare draw is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    bool bernoulli(double prob) { return uniform01() < prob; }

    /// Poisson by CDF inversion; fine for the bag-size means used here.
    int poisson(double mean) {
        const double u = uniform01();
        double term = std::exp(-mean);
        double cdf = term;
        int k = 0;
        while (u > cdf && k < 10000) {
            ++k;
            term *= mean / k;
            cdf += term;
        }
        return k;
    }

    /// Uniform integer in [0, bound) (multiply-high; slight bias irrelevant here).
    std::uint64_t bounded(std::uint64_t bound) {
        const unsigned __int128 m =
            static_cast<unsigned __int128>(engine_()) * bound;
        return static_cast<std::uint64_t>(m >> 64);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace milr
