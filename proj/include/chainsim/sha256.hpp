#pragma once

// SHA-256 (FIPS 180-4) and the 32-byte digest type used everywhere:
// header hashing, Merkle leaves and the PoW mixing function all share
// this one hash. Pinned against the NIST test vectors in the unit
// tests.

#include "chainsim/bytes.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <string>

namespace chainsim {

struct Hash256 {
  std::array<uint8_t, 32> digest{};

  auto operator<=>(const Hash256&) const = default;

  bool is_zero() const {
    for (uint8_t b : digest)
      if (b != 0) return false;
    return true;
  }

  std::string hex() const { return to_hex(digest.data(), digest.size()); }
  // Short prefix used in logs where a full digest is noise.
  std::string short_hex() const { return hex().substr(0, 12); }

  static Hash256 from_hex(std::string_view h);
};

class Sha256 {
public:
  Sha256() { reset(); }

  void reset();
  Sha256& update(const uint8_t* data, size_t n);
  Sha256& update(const ByteString& b) { return update(b.data(), b.size()); }
  Hash256 finalize();

private:
  void compress(const uint8_t block[64]);

  uint32_t state_[8];
  uint64_t total_len_ = 0;
  uint8_t buffer_[64];
  size_t buffer_len_ = 0;
};

Hash256 sha256(const uint8_t* data, size_t n);
Hash256 sha256(const ByteString& b);
Hash256 sha256(std::string_view s);

} // namespace chainsim
