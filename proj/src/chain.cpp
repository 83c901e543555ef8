#include "chainsim/chain.hpp"

#include <algorithm>

namespace chainsim {

const char* ImportResult::kind_name(Kind k) {
  switch (k) {
    case Kind::ExtendedCanonical: return "ExtendedCanonical";
    case Kind::SideChain: return "SideChain";
    case Kind::Reorganized: return "Reorganized";
    case Kind::Rejected: return "Rejected";
  }
  return "?";
}

void ChainStore::init_genesis(const Block& genesis) {
  Hash256 h = block_hash(genesis.header);
  blocks[h] = genesis;
  if (!light) post_states[h] = WorldState{};
  td[h] = TotalDifficulty(genesis.header.difficulty);
  canonical.clear();
  canonical[genesis.header.height] = h;
  head = h;
}

const Block& ChainStore::block(const Hash256& h) const {
  auto it = blocks.find(h);
  if (it == blocks.end()) throw Error("chain store: unknown block " + h.short_hex());
  return it->second;
}

Hash256 ChainStore::genesis_hash() const {
  auto it = canonical.find(0);
  if (it == canonical.end()) throw Error("chain store: no genesis");
  return it->second;
}

const WorldState& ChainStore::canonical_state() const {
  auto it = post_states.find(head);
  if (it == post_states.end()) throw Error("chain store: no state for head");
  return it->second;
}

TotalDifficulty ChainStore::total_difficulty(const Hash256& h) const {
  auto it = td.find(h);
  if (it == td.end()) throw Error("total_difficulty: unknown block " + h.short_hex());
  return it->second;
}

bool ChainStore::is_canonical(const Hash256& h) const {
  auto it = blocks.find(h);
  if (it == blocks.end()) return false;
  auto c = canonical.find(it->second.header.height);
  return c != canonical.end() && c->second == h;
}

ImportResult ChainStore::import_block(const Block& b) {
  ImportResult r;
  r.hash = block_hash(b.header);
  r.old_head = head;
  r.new_head = head;

  if (auto it = bad_blocks.find(r.hash); it != bad_blocks.end()) {
    r.kind = ImportResult::Kind::Rejected;
    r.error = ValidationError::from_string(it->second);
    return r;
  }

  ApplyResult exec;
  if (auto err = validate_and_execute(b, light ? nullptr : &exec)) {
    r.kind = ImportResult::Kind::Rejected;
    r.error = err;
    if (err->is_falsification()) bad_blocks[r.hash] = err->to_string();
    return r;
  }

  blocks[r.hash] = b;
  if (!light) post_states[r.hash] = std::move(exec.state);
  td[r.hash] = total_difficulty(b.header.parent_hash) + TotalDifficulty(b.header.difficulty);

  if (b.header.parent_hash == head) {
    canonical[b.header.height] = r.hash;
    head = r.hash;
    r.kind = ImportResult::Kind::ExtendedCanonical;
    r.new_head = r.hash;
  } else if (td.at(r.hash) > total_difficulty(head)) {
    auto [reverted, applied] = reorg_to(r.hash);
    r.kind = ImportResult::Kind::Reorganized;
    r.new_head = r.hash;
    r.reverted = std::move(reverted);
    r.applied = std::move(applied);
  } else {
    r.kind = ImportResult::Kind::SideChain;
  }
  return r;
}

ImportResult ChainStore::import_header(const Header& h) {
  if (!light) throw Error("import_header: full stores import blocks");
  return import_block(Block{h, {}, {}});
}

std::pair<std::vector<Hash256>, std::vector<Hash256>> ChainStore::reorg_to(
    const Hash256& new_head) {
  std::vector<Hash256> applied;
  Hash256 cur = new_head;
  while (!is_canonical(cur)) {
    applied.push_back(cur);
    cur = block(cur).header.parent_hash;
  }
  const uint64_t lca_height = block(cur).header.height;

  std::vector<Hash256> reverted;
  Hash256 old = head;
  while (old != cur) {
    reverted.push_back(old);
    old = block(old).header.parent_hash;
  }

  for (auto it = canonical.upper_bound(lca_height); it != canonical.end();)
    it = canonical.erase(it);
  for (auto rit = applied.rbegin(); rit != applied.rend(); ++rit)
    canonical[block(*rit).header.height] = *rit;
  head = new_head;

  std::reverse(reverted.begin(), reverted.end());
  std::reverse(applied.begin(), applied.end());
  return {reverted, applied};
}

std::vector<Header> ChainStore::uncle_candidates(const Hash256& tip) const {
  std::set<Hash256> ancestors;
  std::set<Hash256> included;
  Hash256 cur = tip;
  for (uint64_t depth = 0; depth < UNCLE_WINDOW && has_block(cur); ++depth) {
    ancestors.insert(cur);
    const Block& blk = block(cur);
    for (const Header& u : blk.uncles) included.insert(block_hash(u));
    if (blk.header.height == 0) break;
    cur = blk.header.parent_hash;
  }

  std::vector<Header> out;
  for (const auto& [h, blk] : blocks) {
    if (blk.header.height == 0) continue;
    if (ancestors.count(h) || included.count(h)) continue;
    if (bad_blocks.count(h)) continue;
    if (!ancestors.count(blk.header.parent_hash)) continue;
    auto fault = validate_header(blk.header, header(blk.header.parent_hash),
                                 epoch_seed_for_height(blk.header.height, pow), pow);
    if (fault && !(compromised && *fault == HeaderFault::BadSeal)) continue;
    out.push_back(blk.header);
  }
  std::sort(out.begin(), out.end(), [](const Header& a, const Header& b) {
    return a.height != b.height ? a.height < b.height : block_hash(a) < block_hash(b);
  });
  return out;
}

ByteString ChainStore::serialize() const {
  ByteWriter w;
  w.u32(0x43534442); // "CSDB"
  w.u32(1);          // layout version
  w.u64(pow.target_spacing_s);
  w.fixed(u256_to_be32(pow.min_difficulty));
  w.u64(pow.epoch_blocks);
  w.u64(gas_limit);
  w.u8(light ? 1 : 0);
  w.u8(compromised ? 1 : 0);

  w.u32(uint32_t(blocks.size()));
  for (const auto& [h, b] : blocks) w.var_bytes(encode_block(b));

  w.u32(uint32_t(post_states.size()));
  for (const auto& [h, s] : post_states) {
    w.fixed(h.digest);
    w.var_bytes(encode_world_state(s));
  }

  w.u32(uint32_t(td.size()));
  for (const auto& [h, t] : td) {
    w.fixed(h.digest);
    ByteString mag;
    boost::multiprecision::export_bits(t, std::back_inserter(mag), 8);
    w.var_bytes(mag);
  }

  w.u32(uint32_t(canonical.size()));
  for (const auto& [height, h] : canonical) {
    w.u64(height);
    w.fixed(h.digest);
  }
  w.fixed(head.digest);

  w.u32(uint32_t(bad_blocks.size()));
  for (const auto& [h, err] : bad_blocks) {
    w.fixed(h.digest);
    w.var_str(err);
  }
  return std::move(w).take();
}

ChainStore ChainStore::deserialize(const ByteString& bytes) {
  ByteReader r(bytes);
  if (r.u32() != 0x43534442) throw Error("chain store: bad magic");
  if (r.u32() != 1) throw Error("chain store: unsupported layout version");
  ChainStore s;
  s.pow.target_spacing_s = r.u64();
  s.pow.min_difficulty = be32_to_u256(r.fixed<32>());
  s.pow.epoch_blocks = r.u64();
  s.gas_limit = r.u64();
  s.light = r.u8() != 0;
  s.compromised = r.u8() != 0;

  uint32_t nblocks = r.u32();
  for (uint32_t i = 0; i < nblocks; ++i) {
    ByteString raw = r.var_bytes();
    ByteReader br(raw);
    Block b = decode_block(br);
    s.blocks[block_hash(b.header)] = std::move(b);
  }

  uint32_t nstates = r.u32();
  for (uint32_t i = 0; i < nstates; ++i) {
    Hash256 h;
    h.digest = r.fixed<32>();
    ByteString raw = r.var_bytes();
    ByteReader sr(raw);
    s.post_states[h] = decode_world_state(sr);
  }

  uint32_t ntd = r.u32();
  for (uint32_t i = 0; i < ntd; ++i) {
    Hash256 h;
    h.digest = r.fixed<32>();
    ByteString mag = r.var_bytes();
    TotalDifficulty t = 0;
    if (!mag.empty()) boost::multiprecision::import_bits(t, mag.begin(), mag.end(), 8);
    s.td[h] = t;
  }

  uint32_t ncanon = r.u32();
  for (uint32_t i = 0; i < ncanon; ++i) {
    uint64_t height = r.u64();
    s.canonical[height].digest = r.fixed<32>();
  }
  s.head.digest = r.fixed<32>();

  uint32_t nbad = r.u32();
  for (uint32_t i = 0; i < nbad; ++i) {
    Hash256 h;
    h.digest = r.fixed<32>();
    s.bad_blocks[h] = r.var_str();
  }
  if (!r.empty()) throw Error("chain store: trailing bytes");
  return s;
}

Block make_genesis(const Difficulty& difficulty, uint64_t gas_limit, uint64_t timestamp) {
  Block g;
  g.header.uncle_root = uncle_list_hash({});
  g.header.state_root = empty_root();
  g.header.tx_root = tx_merkle_root({});
  g.header.receipt_root = receipt_merkle_root({});
  g.header.difficulty = difficulty;
  g.header.height = 0;
  g.header.gas_limit = gas_limit;
  g.header.gas_used = 0;
  g.header.timestamp = timestamp;
  return g;
}

Block assemble_block(const ChainStore& store, std::vector<Transaction>& pool,
                     uint64_t timestamp_s, bool include_uncles) {
  const Block& parent = store.head_block();
  const WorldState& parent_state = store.post_states.at(store.head);

  Block b;
  b.header.parent_hash = store.head;
  b.header.height = parent.header.height + 1;
  b.header.timestamp = std::max(parent.header.timestamp + 1, timestamp_s);
  b.header.difficulty = calc_difficulty(parent.header, b.header.timestamp, store.pow);
  b.header.gas_limit = store.gas_limit;

  if (include_uncles) {
    b.uncles = store.uncle_candidates(store.head);
    if (b.uncles.size() > MAX_UNCLES) b.uncles.resize(MAX_UNCLES);
  }

  std::map<std::string, uint64_t> next_seq;
  std::vector<Transaction> leftovers;
  uint64_t gas = 0;
  for (const Transaction& tx : pool) {
    auto [it, fresh] = next_seq.try_emplace(tx.sender, 0);
    if (fresh) it->second = parent_state.sender_seq(tx.sender);
    bool fits = gas + FIXED_TX_GAS <= store.gas_limit;
    if (fits && tx.seq == it->second && tx.gas == FIXED_TX_GAS) {
      b.transactions.push_back(tx);
      it->second += 1;
      gas += FIXED_TX_GAS;
    } else if (tx.seq >= it->second) {
      // Stale entries (seq already consumed on this chain) are dropped;
      // gapped and unfitting ones wait for a later block.
      leftovers.push_back(tx);
    }
  }
  pool = std::move(leftovers);

  ApplyResult exec = apply_transactions(parent_state, b.transactions, store.gas_limit);
  b.header.state_root = exec.state.root();
  b.header.tx_root = tx_merkle_root(b.transactions);
  b.header.receipt_root = receipt_merkle_root(exec.receipts);
  b.header.uncle_root = uncle_list_hash(b.uncles);
  b.header.bloom = exec.bloom;
  b.header.gas_used = exec.gas_used;
  return b;
}

} // namespace chainsim
