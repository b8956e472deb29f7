#ifndef UAV_RNG_H_
#define UAV_RNG_H_

#include <cmath>
#include <cstdint>
#include <numbers>

namespace uav {

// splitmix64 finalizer.
inline uint64_t Mix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline uint64_t HashCombine(uint64_t a, uint64_t b) { return Mix64(a ^ Mix64(b)); }

// Uniform in (0, 1).
inline double UnitUniform(uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal sample addressed by (key, index): the value depends only on
// its address, never on evaluation order. Box-Muller on two hashed uniforms.
inline double GaussianAt(uint64_t key, uint64_t index) {
  const uint64_t h = HashCombine(key, index);
  const double u1 = UnitUniform(Mix64(h));
  const double u2 = UnitUniform(Mix64(h ^ 0xD1B54A32D192ED03ull));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace uav

#endif  // UAV_RNG_H_
