#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <utility>

namespace ldsim {

// Philox4x32-10 counter-based generator (Salmon, Moraes, Dror & Shaw, SC'11).
//
// A stream is fully determined by a 64-bit key; the i-th 128-bit block is
// philox(key, counter = i). Substreams derive a fresh key from the parent key
// plus a (tag, index) pair, so work split across threads by (subject, slice)
// reproduces the same draws regardless of scheduling.
//
// Distribution samplers (uniform, normal, index) are implemented here rather
// than through <random> distributions, whose algorithms are unspecified and
// differ across standard libraries.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed);

  // Independent stream keyed by (this stream's key, tag, index).
  RngStream substream(std::string_view tag, std::uint64_t index = 0) const;

  result_type operator()();
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1].
  double uniform_pos();
  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  // Unbiased integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t key() const { return key_; }

 private:
  struct FromKey {};
  RngStream(FromKey, std::uint64_t key) : key_(key) {}
  void refill();

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> block_{};
  int block_pos_ = 2;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

// Raw Philox4x32-10 block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace ldsim
