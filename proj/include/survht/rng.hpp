#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace survht {

/// Counter-based pseudo-random generator.
///
/// State is a (key, counter) pair; each output is a strong 64-bit mix of the
/// two, so the sequence for a given key is a pure function of the counter.
/// Independent streams are derived by hashing a tag into the key, which keeps
/// parallel replicates reproducible: stream r of master seed S is the same no
/// matter which worker draws it, and the normal deviates come from an
/// inverse-CDF transform so two IEEE-754 platforms produce identical doubles.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : key_(mix64(seed ^ kKeyTweak)) {}

    /// Child generator for an independent stream identified by `tag`.
    [[nodiscard]] CounterRng derive(std::uint64_t tag) const {
        CounterRng child(0);
        child.key_ = mix64(key_ ^ mix64(tag ^ kDeriveTweak));
        child.counter_ = 0;
        return child;
    }

    /// Two-level derivation, e.g. (stream kind, replicate index).
    [[nodiscard]] CounterRng derive(std::uint64_t tag_a, std::uint64_t tag_b) const {
        return derive(tag_a).derive(tag_b);
    }

    std::uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double strictly inside (0, 1); safe as a quantile argument.
    double uniform_open01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    /// Standard normal deviate via the inverse-CDF transform.
    double normal() { return normal_quantile(uniform_open01()); }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Unbiased integer in [0, bound); Lemire's multiply-shift with rejection.
    std::uint64_t uniform_below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
        std::uint64_t x = next_u64();
        unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<unsigned __int128>(x) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Normal quantile function (Wichura's AS 241, double precision).
    static double normal_quantile(double p) {
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("normal_quantile: p must lie in (0,1)");
        const double q = p - 0.5;
        if (std::abs(q) <= 0.425) {
            const double r = 0.180625 - q * q;
            return q * poly7(kA, r) / poly7(kB, r);
        }
        double r = (q < 0.0) ? p : 1.0 - p;
        r = std::sqrt(-std::log(r));
        double value;
        if (r <= 5.0) {
            r -= 1.6;
            value = poly7(kC, r) / poly7(kD, r);
        } else {
            r -= 5.0;
            value = poly7(kE, r) / poly7(kF, r);
        }
        return (q < 0.0) ? -value : value;
    }

  private:
    static constexpr std::uint64_t kKeyTweak = 0x7c3dd21fa9c5a1d3ULL;
    static constexpr std::uint64_t kDeriveTweak = 0x9e3779b97f4a7c15ULL;

    // SplitMix64 finalizer; full-avalanche 64-bit mix.
    static constexpr std::uint64_t mix64(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static double poly7(const double (&c)[8], double x) {
        double acc = c[7];
        for (int i = 6; i >= 0; --i) acc = acc * x + c[i];
        return acc;
    }

    static constexpr double kA[8] = {
        3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
        1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
        3.3430575583588128105e4, 2.5090809287301226727e3};
    static constexpr double kB[8] = {
        1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
        2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
        5.2264952788528545610e3};
    static constexpr double kC[8] = {
        1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
        3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
        2.27238449892691845833e-2, 7.74545014278341407640e-4};
    static constexpr double kD[8] = {
        1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
        1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
        1.05075007164441684324e-9};
    static constexpr double kE[8] = {
        6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
        2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
        2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static constexpr double kF[8] = {
        1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
        7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
        2.04426310338993978564e-15};

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace survht
