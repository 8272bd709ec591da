#pragma once

#include <cstdint>
#include <random>

namespace nysmmd {

/// Tags for independent random streams derived from one master seed.
enum class Stream : std::uint64_t {
  bandwidth = 1,
  landmarks,
  leverage,
  fourier,
  permutations,
  decision,
  sample_x,
  sample_y,
  repetition,
};

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(seed ^ mix64(stream ^ 0xD1B54A32D192ED03ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream) noexcept {
  return derive_seed(seed, static_cast<std::uint64_t>(stream));
}

/// k-th uniform draw in [0, 1) of a stateless counter stream. Each draw is
/// addressable on its own, so parallel consumers never share state.
constexpr double counter_uniform(std::uint64_t stream_seed, std::uint64_t k) noexcept {
  return static_cast<double>(mix64(stream_seed + 0x632BE59BD9B4E019ULL * (k + 1)) >> 11) *
         0x1.0p-53;
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, Stream stream) {
  return Engine(derive_seed(seed, stream));
}

inline double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace nysmmd
