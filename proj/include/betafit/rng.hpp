#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace betafit {

// SplitMix64 finalizer; decorrelates nearby seeds before they reach the engine.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr const char* kGeneratorName = "mt19937_64 seeded by splitmix64(seed xor replicate)";

// mt19937_64 output is fixed by the standard; the uniform transform is done
// here rather than through <random> distributions, whose algorithms are
// implementation-defined, so streams are identical across toolchains.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

    std::uint64_t next() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1], safe to pass to log().
    double uniform_open0() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

    // Number of failures before the first success of a Bernoulli(p) sequence, 0 < p < 1.
    std::uint64_t geometric_skip(double log1m_p) {
        double skip = std::floor(std::log(uniform_open0()) / log1m_p);
        if (!(skip < 9.0e18)) return UINT64_MAX;
        return static_cast<std::uint64_t>(skip);
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace betafit
