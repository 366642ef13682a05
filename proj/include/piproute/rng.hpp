#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace piproute {

// splitmix64 finalizer; used to derive independent, reproducible streams
// from (seed, index...) tuples.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic RNG wrapper. Uniform doubles are produced from the top 53
// bits of the engine output, so results are identical across platforms and
// standard-library versions.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(mix64(seed)) {}

    // Derives a stream from a seed and an arbitrary tuple of indices.
    template <class... Parts>
    static Rng derive(std::uint64_t seed, Parts... parts) {
        std::uint64_t h = mix64(seed);
        ((h = mix64(h ^ (static_cast<std::uint64_t>(parts) + 0x9e3779b97f4a7c15ULL))), ...);
        return Rng(h);
    }

    std::uint64_t bits() { return eng_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // integer in [lo, hi], inclusive
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = max - max % span;
        std::uint64_t r;
        do {
            r = eng_();
        } while (r >= limit);
        return lo + static_cast<std::int64_t>(r % span);
    }

    // Fisher-Yates over v[begin..end)
    template <class T>
    void shuffle(std::vector<T>& v, std::size_t begin = 0) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > begin; --i) {
            const std::size_t j =
                begin + static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i - begin)));
            std::swap(v[i], v[j]);
        }
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace piproute
