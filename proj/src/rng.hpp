#ifndef MAPOS_RNG_HPP
#define MAPOS_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace mapos {

// Seeded random stream with cheap substream derivation.
//
// The engine is std::mt19937_64 (bit-exact across platforms); uniform and
// Gaussian variates are derived here from raw 64-bit draws rather than
// through std::*_distribution, whose output is implementation-defined.
// Substreams are keyed by (seed, id...) so independent pipeline stages can
// draw without coupling their consumption order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

    // Derived stream for a keyed sub-task, e.g. substream(seed, slot, particle).
    static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
        std::uint64_t s = mix(seed);
        for (std::uint64_t id : ids) s = mix(s ^ mix(id + 0x9e3779b97f4a7c15ULL));
        return Rng(raw_tag{}, s);
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + uniform01() * (b - a); }

    // Standard normal via Box-Muller; two uniforms per variate, no caching.
    double normal() {
        double u1 = 1.0 - uniform01(); // (0, 1]
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Circularly-symmetric complex Gaussian with total variance `var`:
    // real and imaginary parts independent N(0, var/2).
    std::complex<double> complex_normal(double var) {
        double s = std::sqrt(var * 0.5);
        double re = normal() * s;
        double im = normal() * s;
        return {re, im};
    }

    // Fisher-Yates index shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_u64() % i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    struct raw_tag {};
    Rng(raw_tag, std::uint64_t raw_seed) : engine_(raw_seed) {}

    // splitmix64 finalizer; decorrelates adjacent seeds/ids.
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 engine_;
};

} // namespace mapos

#endif
