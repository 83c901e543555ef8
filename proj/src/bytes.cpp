#include "chainsim/bytes.hpp"

namespace chainsim {

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
} // namespace

std::string to_hex(const uint8_t* data, size_t n) {
  std::string out;
  out.reserve(2 * n);
  for (size_t i = 0; i < n; ++i) {
    out.push_back(kHexDigits[data[i] >> 4]);
    out.push_back(kHexDigits[data[i] & 0x0f]);
  }
  return out;
}

std::string to_hex(const ByteString& b) { return to_hex(b.data(), b.size()); }

ByteString from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error("from_hex: odd-length input");
  ByteString out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_value(hex[i]);
    int lo = hex_value(hex[i + 1]);
    if (hi < 0 || lo < 0) throw Error("from_hex: invalid hex digit");
    out.push_back(uint8_t(hi << 4 | lo));
  }
  return out;
}

} // namespace chainsim
