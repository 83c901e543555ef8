#include "chainsim/types.hpp"

namespace chainsim {

std::array<uint8_t, 32> u256_to_be32(const Difficulty& v) {
  std::array<uint8_t, 32> out{};
  Difficulty t = v;
  for (int i = 31; i >= 0; --i) {
    out[size_t(i)] = uint8_t(t & 0xff);
    t >>= 8;
  }
  return out;
}

Difficulty be32_to_u256(const std::array<uint8_t, 32>& bytes) {
  Difficulty v = 0;
  for (uint8_t b : bytes) {
    v <<= 8;
    v |= b;
  }
  return v;
}

Difficulty hash_as_u256(const Hash256& h) {
  return be32_to_u256(h.digest);
}

ByteString encode_header(const Header& h) {
  ByteWriter w;
  w.fixed(h.parent_hash.digest);
  w.fixed(h.uncle_root.digest);
  w.fixed(h.state_root.digest);
  w.fixed(h.tx_root.digest);
  w.fixed(h.receipt_root.digest);
  w.fixed(h.bloom.bits);
  w.fixed(u256_to_be32(h.difficulty));
  w.u64(h.height);
  w.u64(h.gas_limit);
  w.u64(h.gas_used);
  w.u64(h.timestamp);
  w.u64(h.nonce);
  w.fixed(h.mix_digest.digest);
  return std::move(w).take();
}

Header decode_header(ByteReader& r) {
  Header h;
  h.parent_hash.digest = r.fixed<32>();
  h.uncle_root.digest = r.fixed<32>();
  h.state_root.digest = r.fixed<32>();
  h.tx_root.digest = r.fixed<32>();
  h.receipt_root.digest = r.fixed<32>();
  h.bloom.bits = r.fixed<32>();
  h.difficulty = be32_to_u256(r.fixed<32>());
  h.height = r.u64();
  h.gas_limit = r.u64();
  h.gas_used = r.u64();
  h.timestamp = r.u64();
  h.nonce = r.u64();
  h.mix_digest.digest = r.fixed<32>();
  return h;
}

ByteString encode_transaction(const Transaction& tx) {
  ByteWriter w;
  w.var_str(tx.sender);
  w.var_str(tx.contract);
  w.var_bytes(tx.payload);
  w.u64(tx.seq);
  w.u64(tx.gas);
  return std::move(w).take();
}

Transaction decode_transaction(ByteReader& r) {
  Transaction tx;
  tx.sender = r.var_str();
  tx.contract = r.var_str();
  tx.payload = r.var_bytes();
  tx.seq = r.u64();
  tx.gas = r.u64();
  return tx;
}

ByteString encode_receipt(const Receipt& rc) {
  ByteWriter w;
  w.fixed(rc.tx_hash.digest);
  w.u8(rc.success ? 1 : 0);
  w.u64(rc.gas_used);
  w.fixed(rc.bloom_bits.bits);
  return std::move(w).take();
}

Receipt decode_receipt(ByteReader& r) {
  Receipt rc;
  rc.tx_hash.digest = r.fixed<32>();
  rc.success = r.u8() != 0;
  rc.gas_used = r.u64();
  rc.bloom_bits.bits = r.fixed<32>();
  return rc;
}

ByteString encode_uncle_list(const std::vector<Header>& uncles) {
  ByteWriter w;
  w.u32(uint32_t(uncles.size()));
  for (const Header& u : uncles) w.raw(encode_header(u));
  return std::move(w).take();
}

ByteString encode_block(const Block& b) {
  ByteWriter w;
  w.raw(encode_header(b.header));
  w.u32(uint32_t(b.transactions.size()));
  for (const Transaction& tx : b.transactions) w.var_bytes(encode_transaction(tx));
  w.raw(encode_uncle_list(b.uncles));
  return std::move(w).take();
}

Block decode_block(ByteReader& r) {
  Block b;
  b.header = decode_header(r);
  uint32_t ntx = r.u32();
  b.transactions.reserve(ntx);
  for (uint32_t i = 0; i < ntx; ++i) {
    ByteString raw = r.var_bytes();
    ByteReader tr(raw);
    b.transactions.push_back(decode_transaction(tr));
  }
  uint32_t nu = r.u32();
  b.uncles.reserve(nu);
  for (uint32_t i = 0; i < nu; ++i) b.uncles.push_back(decode_header(r));
  return b;
}

Hash256 block_hash(const Header& h) {
  return sha256(encode_header(h));
}

Hash256 seal_hash(const Header& h) {
  Header stripped = h;
  stripped.nonce = 0;
  stripped.mix_digest = Hash256{};
  return sha256(encode_header(stripped));
}

Hash256 tx_hash(const Transaction& tx) {
  return sha256(encode_transaction(tx));
}

Hash256 uncle_list_hash(const std::vector<Header>& uncles) {
  return sha256(encode_uncle_list(uncles));
}

const Hash256& empty_root() {
  static const Hash256 root = sha256(ByteString{});
  return root;
}

Hash256 merkle_root(const std::vector<ByteString>& items) {
  if (items.empty()) return empty_root();
  std::vector<Hash256> layer;
  layer.reserve(items.size());
  for (const ByteString& item : items) layer.push_back(sha256(item));
  while (layer.size() > 1) {
    if (layer.size() % 2 != 0) layer.push_back(layer.back());
    std::vector<Hash256> next;
    next.reserve(layer.size() / 2);
    for (size_t i = 0; i < layer.size(); i += 2) {
      Sha256 hasher;
      hasher.update(layer[i].digest.data(), layer[i].digest.size());
      hasher.update(layer[i + 1].digest.data(), layer[i + 1].digest.size());
      next.push_back(hasher.finalize());
    }
    layer = std::move(next);
  }
  return layer[0];
}

Hash256 tx_merkle_root(const std::vector<Transaction>& txs) {
  std::vector<ByteString> items;
  items.reserve(txs.size());
  for (const Transaction& tx : txs) items.push_back(encode_transaction(tx));
  return merkle_root(items);
}

Hash256 receipt_merkle_root(const std::vector<Receipt>& receipts) {
  std::vector<ByteString> items;
  items.reserve(receipts.size());
  for (const Receipt& rc : receipts) items.push_back(encode_receipt(rc));
  return merkle_root(items);
}

} // namespace chainsim
