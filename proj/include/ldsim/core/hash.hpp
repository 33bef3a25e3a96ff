#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace ldsim {

// 64-bit FNV-1a. Used for content fingerprints (resume keys, schema hashes),
// never for anything security related.
class Fnv1a64 {
 public:
  void update(std::span<const std::byte> bytes);
  void update(std::string_view text);
  template <class T>
  void update_pod(const T& value) {
    update(std::as_bytes(std::span<const T>(&value, 1)));
  }
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

std::uint64_t fnv1a64(std::string_view text);
std::string to_hex(std::uint64_t value);

}  // namespace ldsim
