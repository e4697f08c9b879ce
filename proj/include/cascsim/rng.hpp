#pragma once

#include <cstdint>
#include <random>

namespace cascsim {

// Deterministic random layer. Batch results must be bit-identical across
// worker counts and platforms, so per-run streams are derived from
// (master_seed, run_index) with a counter-based mixer instead of sharing one
// generator, and variates are produced by hand from raw 64-bit draws rather
// than through std::uniform_real_distribution (whose output is
// implementation-defined).

// SplitMix64 finalizer; good avalanche, cheap, and stable across platforms.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d49bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream seed for one simulation run inside a batch.
constexpr std::uint64_t derive_run_seed(std::uint64_t master_seed, std::uint64_t run_index) {
    return splitmix64(splitmix64(master_seed) ^ splitmix64(run_index * 0xd1342543de82ef95ULL + 1));
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) {
        if (p <= 0.0) {
            return false;
        }
        if (p >= 1.0) {
            return true;
        }
        return uniform() < p;
    }

    // Unbiased-enough index draw via 128-bit multiply (Lemire's reduction
    // without rejection; bias is < 2^-64 per draw, irrelevant here, and the
    // draw count stays fixed which keeps streams aligned).
    std::size_t uniform_index(std::size_t n) {
        const unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
        return static_cast<std::size_t>(wide >> 64);
    }

    // Uniform in [lo, hi].
    double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  private:
    std::mt19937_64 engine_;
};

}  // namespace cascsim
