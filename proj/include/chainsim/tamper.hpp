#pragma once

// Attack injection: direct edits of one node's chain database, the way
// an attacker with storage access would make them, plus the private
// majority-mining race. Edits touch only the target store; whether the
// network notices is decided by validation and fork choice, never here.

#include "chainsim/chain.hpp"

#include <optional>

namespace chainsim {

class EventLog;

enum class ResealMode { None, FakeNonce, HonestRepow, RebuildDescendants };

const char* reseal_mode_name(ResealMode m);

struct TamperSpec {
  std::string target_node;

  // Target block selector: exactly one of these.
  std::optional<uint64_t> height;
  std::optional<Hash256> hash;
  // The canonical block whose transactions wrote this (device, seq).
  std::optional<std::pair<std::string, uint64_t>> record;

  // Edit path: "state:<device>:<seq>" rewrites the stored post-state
  // entry; "tx:<index>" rewrites that transaction's sensor payload.
  std::string edit_path;
  int64_t new_temperature_centi = 0;

  ResealMode reseal = ResealMode::None;
  uint64_t budget = 0; // nonce trials for HonestRepow / RebuildDescendants

  // Forged adjustment of the stored total-difficulty entry, realizing
  // the "total difficulty is greater/smaller" scenario arms. Header
  // difficulty is untouched, so a resealed block can still be valid.
  int64_t claimed_td_delta = 0;

  bool announce = false; // broadcast the tampered block to peers
};

struct TamperReceipt {
  bool applied = false;
  std::string error; // "TargetMissing", ... when !applied
  Hash256 old_hash;
  Hash256 new_hash;
  std::string field;     // resolved edit path, e.g. "state:dev-1:7"
  std::string old_value; // decimal centi-degrees
  std::string new_value;
  std::string reseal_note; // "none", "fake_nonce", "found", "exhausted"
  uint64_t attempts = 0;
  uint64_t descendants_rebuilt = 0;
};

// Applies spec to one store. None edits in place (header untouched, so
// the block keeps its hash); every other mode recomputes the edited
// block's roots, reseals per mode, re-keys the block under its new
// hash and drops now-dangling descendants. claimed_td_delta is applied
// to the stored td entry afterwards.
TamperReceipt tamper_store(ChainStore& store, const TamperSpec& spec,
                           const std::string& contract, uint64_t rng_seed);

struct LightTamperSpec {
  std::string target_node;
  uint64_t forged_height = 0; // must exceed every node's head height
  uint64_t forged_ahead = 0;  // used instead when forged_height is 0:
                              // forge to (network head + forged_ahead)
  uint64_t budget = 0;        // nonce trials for the forged seals
};

struct LightTamperReceipt {
  bool applied = false;
  std::string error; // "BudgetTooSmall", "PreconditionFailed", ...
  uint64_t headers_built = 0;
  uint64_t final_height = 0;
  TotalDifficulty final_td;
};

// Builds a locally-valid header chain on a light store up to
// forged_height. All headers are sealed honestly under budget; on
// exhaustion nothing is committed.
LightTamperReceipt forge_light_headers(ChainStore& store, uint64_t forged_height,
                                       uint64_t budget, uint64_t rng_seed);

struct MajorityOutcome {
  bool attacker_won = false;
  TotalDifficulty final_td_gap; // attacker td minus honest td (signed)
  uint64_t attacker_blocks = 0;
  uint64_t honest_blocks = 0;
  uint64_t elapsed_ms = 0;
  // The honest store after the race (post-takeover when the attacker
  // won), for record queries.
  ChainStore honest_final;
};

// The private-fork race: the attacker re-mines from fork_depth blocks
// below the head, its first block forging the (device, seq) record,
// while honest miners extend the canonical chain. Block discovery is
// an exponential race at rates attacker_power / (1 - attacker_power),
// so each block goes to the attacker independently with probability
// attacker_power. The attacker publishes (and wins) as soon as its
// fork's td strictly exceeds the honest td; the race stops after
// horizon_blocks total blocks otherwise.
MajorityOutcome majority_attack(const ChainStore& base, const std::string& contract,
                                const std::string& device_id, uint64_t record_seq,
                                int64_t forged_temperature_centi, double attacker_power,
                                uint64_t fork_depth, uint64_t horizon_blocks,
                                uint64_t seed, EventLog* log = nullptr);

} // namespace chainsim
