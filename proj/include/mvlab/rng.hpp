#pragma once

#include <cstdint>
#include <string_view>

#include "mvlab/linalg.hpp"

namespace mvlab {

// Counter-based RNG (Philox4x32-10). A stream is identified by a 64-bit key
// derived from (seed, stream tags); draws walk a 128-bit counter. Streams
// keyed by (seed, trial, purpose) are independent and bit-reproducible
// regardless of thread schedule.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(mix(0x9E3779B97F4A7C15ULL, seed)) {}

  // Derived stream: same generator, key re-mixed with a tag.
  RngStream derived(std::uint64_t tag) const {
    return RngStream(from_key{}, mix(key_, tag));
  }
  RngStream derived(std::string_view tag) const {
    return derived(hash_string(tag));
  }
  RngStream derived(std::uint64_t tag_a, std::uint64_t tag_b) const {
    return RngStream(from_key{}, mix(mix(key_, tag_a), tag_b));
  }
  RngStream derived(std::string_view tag_a, std::uint64_t tag_b) const {
    return RngStream(from_key{}, mix(mix(key_, hash_string(tag_a)), tag_b));
  }

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double uniform();

  // Standard normal via Box-Muller (pair-cached).
  double gaussian();

  Vector gaussian_vector(std::size_t n);

  static std::uint64_t hash_string(std::string_view s);
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

  // Raw generator block (exposed for known-answer tests).
  static void philox_block(std::uint64_t key, std::uint64_t counter,
                           std::uint32_t out[4]);

 private:
  struct from_key {};
  RngStream(from_key, std::uint64_t key) : key_(key) {}

  void refill();

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::uint32_t block_[4] = {0, 0, 0, 0};
  int block_pos_ = 4;  // forces refill on first draw
  bool have_cached_gauss_ = false;
  double cached_gauss_ = 0.0;
};

}  // namespace mvlab
