#pragma once

// Block, header, transaction and receipt types plus their canonical
// encodings. The header encoding is a fixed 296-byte layout (field
// order as declared below); block_hash covers every header field while
// seal_hash zeroes nonce/mix_digest, so any post-seal edit to a
// committed field invalidates the proof of work. See docs/encoding.md.

#include "chainsim/bytes.hpp"
#include "chainsim/sha256.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace chainsim {

// Header difficulty and PoW target arithmetic. 256 bits: the sealing
// tests exercise difficulties up to 2^240.
using Difficulty = boost::multiprecision::uint256_t;
// Chain total difficulty is an unbounded sum.
using TotalDifficulty = boost::multiprecision::cpp_int;

inline constexpr size_t MAX_UNCLES = 2;
inline constexpr uint64_t UNCLE_WINDOW = 6; // generations
inline constexpr uint64_t FIXED_TX_GAS = 21000;
inline constexpr uint64_t DEFAULT_GAS_LIMIT = 1'000'000;

// 32-byte big-endian, left padded.
std::array<uint8_t, 32> u256_to_be32(const Difficulty& v);
Difficulty be32_to_u256(const std::array<uint8_t, 32>& bytes);
// Interpret a digest as a big-endian 256-bit integer (PoW threshold test).
Difficulty hash_as_u256(const Hash256& h);

struct Bloom256 {
  std::array<uint8_t, 32> bits{};

  auto operator<=>(const Bloom256&) const = default;

  void set_bit(unsigned idx) { bits[(idx % 256) / 8] |= uint8_t(1u << (idx % 8)); }
  bool test_bit(unsigned idx) const {
    return bits[(idx % 256) / 8] & uint8_t(1u << (idx % 8));
  }
  void merge(const Bloom256& other) {
    for (size_t i = 0; i < bits.size(); ++i) bits[i] |= other.bits[i];
  }
  bool is_zero() const {
    for (uint8_t b : bits)
      if (b != 0) return false;
    return true;
  }
  std::string hex() const { return to_hex(bits.data(), bits.size()); }
};

struct Header {
  Hash256 parent_hash;
  Hash256 uncle_root;   // hash of the encoded uncle-header list
  Hash256 state_root;
  Hash256 tx_root;
  Hash256 receipt_root;
  Bloom256 bloom;
  Difficulty difficulty = 1;
  uint64_t height = 0;
  uint64_t gas_limit = DEFAULT_GAS_LIMIT;
  uint64_t gas_used = 0;
  uint64_t timestamp = 0; // simulation seconds
  uint64_t nonce = 0;
  Hash256 mix_digest;

  bool operator==(const Header&) const = default;
};

struct Transaction {
  std::string sender;   // node identifier; stands in for a signature
  std::string contract;
  ByteString payload;   // tagged encoding, see payload helpers in state.hpp
  uint64_t seq = 0;     // per-sender sequence number
  uint64_t gas = FIXED_TX_GAS;

  bool operator==(const Transaction&) const = default;
};

struct Receipt {
  Hash256 tx_hash;
  bool success = false;
  uint64_t gas_used = 0;
  Bloom256 bloom_bits;

  bool operator==(const Receipt&) const = default;
};

struct Block {
  Header header;
  std::vector<Transaction> transactions;
  std::vector<Header> uncles;

  bool operator==(const Block&) const = default;
};

// Canonical encodings. Deterministic and injective over distinct values.
ByteString encode_header(const Header& h);
Header decode_header(ByteReader& r);
ByteString encode_transaction(const Transaction& tx);
Transaction decode_transaction(ByteReader& r);
ByteString encode_receipt(const Receipt& rc);
Receipt decode_receipt(ByteReader& r);
ByteString encode_block(const Block& b);
Block decode_block(ByteReader& r);
ByteString encode_uncle_list(const std::vector<Header>& uncles);

Hash256 block_hash(const Header& h);
// block_hash with nonce and mix_digest zeroed: the pre-seal commitment
// the miner searches a nonce for.
Hash256 seal_hash(const Header& h);
Hash256 tx_hash(const Transaction& tx);
Hash256 uncle_list_hash(const std::vector<Header>& uncles);

// Binary Merkle tree over leaf hashes; odd layers duplicate the last
// node; a single item hashes to its leaf; the empty list maps to
// EMPTY_ROOT = sha256("").
Hash256 merkle_root(const std::vector<ByteString>& items);
const Hash256& empty_root();

Hash256 tx_merkle_root(const std::vector<Transaction>& txs);
Hash256 receipt_merkle_root(const std::vector<Receipt>& receipts);

} // namespace chainsim
