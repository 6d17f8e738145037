#pragma once

#include <cstdint>

namespace txf {

// SplitMix64 finalizer. Every random stream in the pipeline is derived
// statelessly from (seed, tag...) tuples through this, so reruns and
// checkpoint resumes see identical randomness.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a) { return splitmix64(a); }

template <class... Rest>
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, Rest... rest) {
  return mix_seed(splitmix64(a ^ (b + 0x9e3779b97f4a7c15ULL)), rest...);
}

// Uniform double in [0, 1) from 53 high bits.
inline double to_unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

}  // namespace txf
