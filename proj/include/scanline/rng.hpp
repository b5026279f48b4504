#pragma once

#include <cstdint>
#include <random>

namespace scanline {

// splitmix64; used to derive independent stream seeds from a base seed so
// that every stochastic operation is reproducible from one integer.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(base);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ b);
    return splitmix64(s ^ c);
}

// Stream tags keep seeds for unrelated draws decorrelated.
namespace seed_tag {
constexpr std::uint64_t kTruthInit = 0x7470u;    // phantom initial state
constexpr std::uint64_t kTruthStep = 0x7473u;    // phantom dynamics
constexpr std::uint64_t kBeliefInit = 0x6269u;   // prior draw
constexpr std::uint64_t kPredict = 0x7072u;      // per-particle process noise
constexpr std::uint64_t kResample = 0x7265u;     // systematic resampling offset
constexpr std::uint64_t kPosterior = 0x706fu;    // posterior sample draw
constexpr std::uint64_t kBaseline = 0x6261u;     // random baseline columns
constexpr std::uint64_t kPhantomSeq = 0x7068u;   // benchmark phantom pairing
constexpr std::uint64_t kFilterSeq = 0x6673u;    // benchmark filter seeds
}  // namespace seed_tag

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    return std::mt19937_64(splitmix64(seed));
}

// FNV-1a over raw bytes; used for run-pairing assertions and content hashes.
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

inline std::uint64_t fnv1a64(const void* bytes, std::size_t n,
                             std::uint64_t hash = kFnvOffset) {
    const unsigned char* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
        hash ^= p[i];
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

}  // namespace scanline
