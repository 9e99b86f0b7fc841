#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <numbers>
#include <string_view>

namespace platesim {

// SplitMix64 finalizer; used to derive independent stream seeds.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view label,
                                           std::uint64_t index = 0) {
  return mix64(mix64(parent ^ hash_label(label)) + index);
}

/// Seedable random stream. Uniform and normal variates are produced from the
/// raw 64-bit engine output so sequences are identical across standard
/// libraries. Each `uniform()` or `normal()` call counts as one draw.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  RngStream split(std::string_view label, std::uint64_t index = 0) const {
    return RngStream(derive_seed(seed_, label, index));
  }

  // [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller on two engine outputs.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool operator==(const RngStream& o) const { return seed_ == o.seed_ && engine_ == o.engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace platesim
