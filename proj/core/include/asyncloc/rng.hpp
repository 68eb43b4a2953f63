#pragma once

#include <cstdint>
#include <random>

namespace asyncloc {

/// Independent stream families derived from one master seed.
enum class StreamDomain : std::uint64_t {
  Trial = 1,
  Bound = 2,
  Layout = 3,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Substream for (master seed, domain, index). Streams for distinct triples
/// are statistically independent and do not depend on execution order.
inline std::mt19937_64 make_stream(std::uint64_t seed, StreamDomain domain,
                                   std::uint64_t index) {
  const std::uint64_t key =
      mix64(mix64(seed ^ mix64(static_cast<std::uint64_t>(domain))) ^ index);
  std::seed_seq seq{static_cast<std::uint32_t>(key),
                    static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(domain))};
  return std::mt19937_64(seq);
}

}  // namespace asyncloc
