// Seeded standard-normal stream with deterministic substream derivation.
#pragma once

#include <cstdint>
#include <random>

namespace schedkit {

/// splitmix64 mixing step; decorrelates nearby seed values.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive the seed of substream `stream` from a base seed. Distinct streams
/// derived from the same base are statistically independent.
inline std::uint64_t derive_stream_seed(std::uint64_t base, std::uint64_t stream) {
    return mix64(base + 0x9e3779b97f4a7c15ULL * (stream + 1));
}

/// Source of independent N(0,1) draws. One instance per worker; not thread-safe.
class NormalStream {
  public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    /// One standard-normal draw.
    double next() { return normal_(engine_); }

    std::uint64_t seed() const { return seed_; }

  private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uint64_t seed_;
};

inline NormalStream make_substream(std::uint64_t base, std::uint64_t stream) {
    return NormalStream(derive_stream_seed(base, stream));
}

} // namespace schedkit
