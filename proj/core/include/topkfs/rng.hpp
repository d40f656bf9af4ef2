#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace topkfs {

/// Seeded random source with pinned distribution code.
///
/// The standard library's distribution classes are implementation-defined,
/// so uniform/normal/gumbel draws are derived here directly from the
/// mt19937_64 bit stream. Identical seeds give identical streams on every
/// platform, which the reproducibility contract depends on.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform draw in the open interval (0, 1), 53-bit resolution.
    double uniform01() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via the Marsaglia polar method; one spare value is
    /// cached. Avoids sin/cos on purpose: compilers fuse that pair into a
    /// libm sincos call whose rounding can differ from the separate calls,
    /// which would make the stream depend on optimization flags.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double mult = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * mult;
        have_spare_ = true;
        return u * mult;
    }

    /// Standard Gumbel(0,1) draw: -log(-log U).
    double gumbel() { return -std::log(-std::log(uniform01())); }

    /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Derived independent stream; advances this stream by one draw.
    Rng fork() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// In-place Fisher-Yates shuffle driven by an explicit Rng.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace topkfs
