#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fil/common/errors.hpp"

namespace fil {

using Bytes = std::vector<std::uint8_t>;

// Little-endian writer used by every binary format in the project.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void raw(std::span<const std::uint8_t> data) {
    buf_.insert(buf_.end(), data.begin(), data.end());
  }
  void tag(std::string_view magic) {
    buf_.insert(buf_.end(), magic.begin(), magic.end());
  }

  Bytes& bytes() { return buf_; }
  Bytes take() { return std::move(buf_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes buf_;
};

// Bounds-checked little-endian reader. Errors carry the failing offset.
// E selects the error type thrown (FormatError or ProtocolError).
template <typename E = FormatError>
class ByteReaderT {
 public:
  // base is added to reported offsets when data is a slice of a larger buffer.
  explicit ByteReaderT(std::span<const std::uint8_t> data, std::size_t base = 0)
      : data_(data), base_(base) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::span<const std::uint8_t> raw(std::size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  void expect_tag(std::string_view magic) {
    need(magic.size());
    if (std::memcmp(data_.data() + pos_, magic.data(), magic.size()) != 0)
      throw E("bad magic, expected '" + std::string(magic) + "'", offset());
    pos_ += magic.size();
  }

  std::size_t offset() const { return base_ + pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

  void need(std::size_t n) const {
    if (remaining() < n)
      throw E("truncated input: need " + std::to_string(n) + " bytes, have " +
                  std::to_string(remaining()),
              offset());
  }

 private:
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
    pos_ += n;
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::size_t base_ = 0;
  std::size_t pos_ = 0;
};

using ByteReader = ByteReaderT<FormatError>;

Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> data);

}  // namespace fil
