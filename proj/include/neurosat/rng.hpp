#pragma once
// Seeded RNG with hand-rolled samplers. std::mt19937_64 supplies the bit
// stream; the distributions live here because the std:: ones are not
// specified bit-for-bit across standard libraries, and dataset generation
// must be reproducible from a seed alone.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "neurosat/util.hpp"

namespace neurosat {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

    // Independent stream keyed by (seed, stream). Workers generating item i
    // use substream(seed, i) so output is identical for any worker count.
    static Rng substream(std::uint64_t seed, std::uint64_t stream) {
        return Rng(splitmix64(seed) ^ splitmix64(stream + 0x2545f4914f6cdd1dull));
    }

    std::uint64_t next_u64() { return eng_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased integer in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound) {
        NS_CHECK(bound > 0, "Rng::below: bound must be positive");
        std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // Inclusive range.
    int uniform_int(int lo, int hi) {
        NS_CHECK(lo <= hi, "Rng::uniform_int: empty range");
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Trials-until-first-success geometric, support {1, 2, ...}, mean 1/p.
    int geometric_from_one(double p) {
        NS_CHECK(p > 0.0 && p < 1.0, "geometric_from_one: p outside (0,1)");
        double u = uniform();
        return 1 + static_cast<int>(std::floor(std::log1p(-u) / std::log1p(-p)));
    }

    // Standard normal via Box-Muller, spare value cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace neurosat
