#ifndef W2CHAOS_RNG_HPP
#define W2CHAOS_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace w2chaos {

// Counter-based pseudorandom generator (splitmix64 finalizer).  Every value
// is a pure function of (seed, stream, counter), so parallel chunks drawn
// from disjoint counter ranges reproduce the serial sequence exactly.
namespace rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

// Effective per-stream seed; streams are decorrelated by one extra mix round.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix64(seed ^ mix64(stream + kGolden));
}

inline std::uint64_t at(std::uint64_t sseed, std::uint64_t counter) {
    return mix64(sseed + (counter + 1) * kGolden);
}

// Uniform on (0,1); never returns 0 or 1, safe under log().
inline double uniform01(std::uint64_t sseed, std::uint64_t counter) {
    return static_cast<double>(at(sseed, counter) >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

// Standard normal by Box-Muller.  Index i consumes uniforms (2p, 2p+1) with
// p = i/2; even indices take the cosine branch, odd the sine branch, so a
// draw at any absolute index is computable without generator state.
inline double normal(std::uint64_t sseed, std::uint64_t index) {
    const std::uint64_t p = index >> 1;
    const double u1 = uniform01(sseed, 2 * p);
    const double u2 = uniform01(sseed, 2 * p + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    return (index & 1) ? r * std::sin(a) : r * std::cos(a);
}

} // namespace rng
} // namespace w2chaos

#endif
