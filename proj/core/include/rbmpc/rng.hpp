#pragma once

#include <cstdint>
#include <initializer_list>

namespace rbmpc {

// Counter-based generator built on the splitmix64 finalizer. Streams are
// keyed by (seed, id...) so independent realizations / MPC iterations can
// draw concurrently without sharing state, and the k-th draw of a stream is
// a pure function of (key, k) on every platform.
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ kKeyInit)) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Derived stream for a nested scope (realization index, window index, ...).
  RngStream substream(std::uint64_t id) const {
    RngStream s;
    s.key_ = mix(key_ ^ mix(id ^ kSubstreamSalt));
    return s;
  }

  RngStream substream(std::initializer_list<std::uint64_t> ids) const {
    RngStream s = *this;
    for (std::uint64_t id : ids) s = s.substream(id);
    return s;
  }

  std::uint64_t next_u64() { return mix(key_ ^ mix(counter_++)); }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kKeyInit = 0x8BADF00D5EEDULL;
  static constexpr std::uint64_t kSubstreamSalt = 0xA5A5A5A55A5A5A5AULL;

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace rbmpc
