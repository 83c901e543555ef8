#pragma once

// Canonical byte encoding primitives. Every hashable structure in the
// project is serialized through ByteWriter with a fixed field order:
// integers are fixed-width big-endian, variable-length fields carry a
// u32 length prefix. Reproducing these layouts byte-exactly is what
// keeps block hashes and golden fixtures stable.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace chainsim {

using ByteString = std::vector<uint8_t>;

// Project-wide error for violated preconditions and malformed inputs.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class GasLimitError : public Error {
public:
  explicit GasLimitError(const std::string& what) : Error(what) {}
};

class ByteWriter {
public:
  void u8(uint8_t v) { out_.push_back(v); }

  void u16(uint16_t v) {
    out_.push_back(uint8_t(v >> 8));
    out_.push_back(uint8_t(v));
  }

  void u32(uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8)
      out_.push_back(uint8_t(v >> shift));
  }

  void u64(uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8)
      out_.push_back(uint8_t(v >> shift));
  }

  // Two's complement big-endian.
  void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }

  void raw(const uint8_t* data, size_t n) { out_.insert(out_.end(), data, data + n); }
  void raw(const ByteString& b) { raw(b.data(), b.size()); }

  template <size_t N>
  void fixed(const std::array<uint8_t, N>& a) { raw(a.data(), N); }

  void var_bytes(const ByteString& b) {
    u32(static_cast<uint32_t>(b.size()));
    raw(b);
  }

  void var_str(std::string_view s) {
    u32(static_cast<uint32_t>(s.size()));
    raw(reinterpret_cast<const uint8_t*>(s.data()), s.size());
  }

  const ByteString& bytes() const { return out_; }
  ByteString take() { return std::move(out_); }

private:
  ByteString out_;
};

class ByteReader {
public:
  explicit ByteReader(const ByteString& data) : data_(data) {}

  uint8_t u8() { return take(1)[0]; }

  uint16_t u16() {
    const uint8_t* p = take(2);
    return uint16_t(p[0]) << 8 | p[1];
  }

  uint32_t u32() {
    const uint8_t* p = take(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = v << 8 | p[i];
    return v;
  }

  uint64_t u64() {
    const uint8_t* p = take(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = v << 8 | p[i];
    return v;
  }

  int64_t i64() { return static_cast<int64_t>(u64()); }

  ByteString raw(size_t n) {
    const uint8_t* p = take(n);
    return ByteString(p, p + n);
  }

  template <size_t N>
  std::array<uint8_t, N> fixed() {
    const uint8_t* p = take(N);
    std::array<uint8_t, N> a{};
    for (size_t i = 0; i < N; ++i) a[i] = p[i];
    return a;
  }

  ByteString var_bytes() { return raw(u32()); }

  std::string var_str() {
    ByteString b = var_bytes();
    return std::string(b.begin(), b.end());
  }

  bool empty() const { return pos_ == data_.size(); }
  size_t remaining() const { return data_.size() - pos_; }

private:
  const uint8_t* take(size_t n) {
    if (data_.size() - pos_ < n) throw Error("byte reader: truncated input");
    const uint8_t* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }

  const ByteString& data_;
  size_t pos_ = 0;
};

std::string to_hex(const uint8_t* data, size_t n);
std::string to_hex(const ByteString& b);
ByteString from_hex(std::string_view hex);

inline ByteString str_bytes(std::string_view s) {
  return ByteString(s.begin(), s.end());
}

} // namespace chainsim
