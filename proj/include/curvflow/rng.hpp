#pragma once

// Counter-friendly deterministic RNG.  Every Monte-Carlo consumer derives an
// independent stream per (seed, item index), so results do not depend on
// thread schedule and witnesses can be replayed from (seed, index) alone.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace curvflow {

class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    double log_uniform(double a, double b) {
        return std::exp(uniform(std::log(a), std::log(b)));
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // Box-Muller; u1 bounded away from 0
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 1e-300) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925287 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t below(std::uint64_t bound) { return next() % bound; }

    // Fisher-Yates permutation of {0, ..., n-1}
    std::vector<int> permutation(int n) {
        std::vector<int> p(n);
        for (int i = 0; i < n; ++i) p[i] = i;
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(below(static_cast<std::uint64_t>(i) + 1));
            std::swap(p[i], p[j]);
        }
        return p;
    }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Independent stream for item `index` under master `seed`.
inline SplitMix64 rng_stream(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 mixer(seed ^ (0x632be59bd9b4e019ull + index * 0x9e3779b97f4a7c15ull));
    const std::uint64_t s = mixer.next() ^ (index + 0x8e9805a0559e7451ull);
    SplitMix64 out(s);
    out.next();
    return out;
}

}  // namespace curvflow
