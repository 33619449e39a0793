#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gradsamp {

// Seed value for any randomized operation. Identical (inputs, seed) pairs
// yield bit-identical results across runs and thread counts.
struct RngSeed {
  std::uint64_t value = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Deterministic seed derivation so that replication b of a parallel sweep
// sees the same stream no matter which thread runs it.
inline RngSeed derive_seed(RngSeed master, std::uint64_t index) {
  return {detail::splitmix64(master.value ^
                             detail::splitmix64(index + 0x632be59bd9b4e019ULL))};
}

// Deterministic random stream. std::mt19937_64 is fully specified by the
// standard; uniforms and normals are built from its raw output instead of
// std::*_distribution, whose sequences are implementation-defined.
class Rng {
 public:
  explicit Rng(RngSeed seed) : engine_(seed.value) {}

  std::uint64_t bits() { return engine_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1].
  double uniform_positive() { return 1.0 - uniform(); }

  // Standard normal via the Marsaglia polar method (no trig, deterministic
  // given the uniform stream).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gradsamp
