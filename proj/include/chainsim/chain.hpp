#pragma once

// Per-node chain database and fork choice. The canonical chain is the
// stored path with maximal total difficulty; an import that beats the
// current head's td triggers a reorganization. Rejected blocks with
// falsification errors are remembered in bad_blocks and never
// re-validated. serialize/deserialize give the single-file database
// image that tampering edits (layout in docs/encoding.md).

#include "chainsim/pow.hpp"
#include "chainsim/state.hpp"
#include "chainsim/types.hpp"
#include "chainsim/validation.hpp"

#include <map>
#include <set>

namespace chainsim {

struct ImportResult {
  enum class Kind { ExtendedCanonical, SideChain, Reorganized, Rejected };

  Kind kind = Kind::Rejected;
  Hash256 hash;
  std::optional<ValidationError> error; // set iff Rejected
  Hash256 old_head;
  Hash256 new_head;
  std::vector<Hash256> reverted; // oldest first, Reorganized only
  std::vector<Hash256> applied;  // oldest first, Reorganized only

  static const char* kind_name(Kind k);
};

class ChainStore {
public:
  PowParams pow;
  uint64_t gas_limit = DEFAULT_GAS_LIMIT;
  bool light = false;       // headers + td only, no bodies or states
  bool compromised = false; // hacked node: trusts its own database

  std::map<Hash256, Block> blocks;
  std::map<Hash256, WorldState> post_states;
  std::map<Hash256, TotalDifficulty> td;
  std::map<uint64_t, Hash256> canonical;
  Hash256 head;
  std::map<Hash256, std::string> bad_blocks; // hash -> error string

  void init_genesis(const Block& genesis);

  bool has_block(const Hash256& h) const { return blocks.count(h) != 0; }
  const Block& block(const Hash256& h) const;
  const Header& header(const Hash256& h) const { return block(h).header; }
  const Block& head_block() const { return block(head); }
  uint64_t head_height() const { return head_block().header.height; }
  TotalDifficulty head_td() const { return total_difficulty(head); }
  Hash256 genesis_hash() const;
  const WorldState& canonical_state() const;

  // td map lookup; throws Error on unknown blocks.
  TotalDifficulty total_difficulty(const Hash256& h) const;

  bool is_canonical(const Hash256& h) const;

  // Validates (or replays a cached bad_blocks verdict), stores, then
  // applies fork choice: extend head, park as side chain, or reorg
  // when the new td strictly beats the head's.
  ImportResult import_block(const Block& b);

  // Same pipeline for bare headers on light stores: known/parent/header
  // checks only, no state execution.
  ImportResult import_header(const Header& h);

  // Valid orphaned headers a block built on tip may reference: parent
  // is a tip ancestor within UNCLE_WINDOW generations, not already
  // included there, seal-valid (waived when compromised).
  std::vector<Header> uncle_candidates(const Hash256& tip) const;

  ByteString serialize() const;
  static ChainStore deserialize(const ByteString& bytes);

private:
  friend std::optional<ValidationError> validate_block(const Block&, const ChainStore&);

  // Shared with validate_block so import executes transactions once.
  std::optional<ValidationError> validate_and_execute(const Block& b,
                                                      ApplyResult* out) const;

  // Rewrites canonical from the lowest common ancestor to new_head.
  // Returns (reverted, applied), both oldest first.
  std::pair<std::vector<Hash256>, std::vector<Hash256>> reorg_to(const Hash256& new_head);
};

Block make_genesis(const Difficulty& difficulty, uint64_t gas_limit,
                   uint64_t timestamp = 0);

// Builds an unsealed block on the store's head: picks pool transactions
// in order while their sender seq continues and gas fits, attaches up
// to MAX_UNCLES uncle candidates, executes, and fills every header
// field except the seal. Skipped transactions stay in the pool unless
// their seq is already consumed on this chain, which drops them.
Block assemble_block(const ChainStore& store, std::vector<Transaction>& pool,
                     uint64_t timestamp_s, bool include_uncles = true);

} // namespace chainsim
