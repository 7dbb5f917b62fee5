#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

namespace tpld {

struct Hash128 {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;

  bool bit(unsigned i) const {
    return ((i < 64 ? lo >> i : hi >> (i - 64)) & 1u) != 0;
  }
  std::string hex() const;

  friend bool operator==(const Hash128&, const Hash128&) = default;
  friend auto operator<=>(const Hash128&, const Hash128&) = default;
};

inline unsigned hamming(const Hash128& a, const Hash128& b) {
  return static_cast<unsigned>(std::popcount(a.lo ^ b.lo) +
                               std::popcount(a.hi ^ b.hi));
}

// Fraction of equal bits.
inline double bit_agreement(const Hash128& a, const Hash128& b) {
  return 1.0 - static_cast<double>(hamming(a, b)) / 128.0;
}

// MurmurHash3 x64_128 with seed 0.
Hash128 hash128(std::string_view bytes);

// SplitMix64 finalizer; used to derive independent RNG seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t index = 0);

}  // namespace tpld
