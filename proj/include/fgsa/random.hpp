#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fgsa {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed from a master seed and a path of keys. Every random stream in
/// the library is addressed this way so results do not depend on the order
/// (or thread) in which streams are consumed.
inline Seed derive_seed(Seed master, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(Seed seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

// Stream tags used with derive_seed.
namespace stream {
inline constexpr std::uint64_t kPfDesign = 0x5046;        // "PF"
inline constexpr std::uint64_t kTrajectory = 0x545241;    // "TRA"
inline constexpr std::uint64_t kBootstrap = 0x424f4f54;   // "BOOT"
inline constexpr std::uint64_t kCrudeDesign = 0x435255;   // "CRU"
inline constexpr std::uint64_t kDoe = 0x444f45;           // "DOE"
inline constexpr std::uint64_t kValidation = 0x56414c;    // "VAL"
inline constexpr std::uint64_t kSynthetic = 0x53594e;     // "SYN"
}  // namespace stream

}  // namespace fgsa
