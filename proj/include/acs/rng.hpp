#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace acs {

/// Counter-based random stream.
///
/// Output number k of a stream is a pure function of (stream key, k), so any
/// stream can be re-created or split into children without coordination.
/// Satisfies UniformRandomBitGenerator so it plugs into <random> distributions.
class CounterRng {
public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc908ULL)) {}

  /// Independent child stream identified by an integer key (replicate index, ...).
  [[nodiscard]] CounterRng child(std::uint64_t index) const {
    return CounterRng(KeyTag{}, mix(key_ ^ mix(index + 0x9e3779b97f4a7c15ULL)));
  }

  /// Independent child stream identified by name ("lattice", "frequencies", ...).
  [[nodiscard]] CounterRng stream(std::string_view name) const {
    return CounterRng(KeyTag{}, mix(key_ + 0xbb67ae8584caa73bULL * (hash(name) | 1)));
  }

  result_type operator()() {
    return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t position() const { return counter_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

private:
  struct KeyTag {};
  CounterRng(KeyTag, std::uint64_t key) : key_(key) {}

  // splitmix64 finalizer
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // FNV-1a
  static constexpr std::uint64_t hash(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace acs
