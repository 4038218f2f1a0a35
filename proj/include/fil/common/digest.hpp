#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace fil {

// 64-bit FNV-1a. Used for config digests, parameter digests and batch hashes;
// not a security primitive.
class Fnv64 {
 public:
  Fnv64& add(std::span<const std::uint8_t> data) {
    for (auto b : data) {
      h_ ^= b;
      h_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Fnv64& add(std::string_view s) {
    return add(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  }
  template <typename T>
  Fnv64& add_pod(const T& v) {
    return add(std::span(reinterpret_cast<const std::uint8_t*>(&v), sizeof(T)));
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::string hex64(std::uint64_t v);

}  // namespace fil
