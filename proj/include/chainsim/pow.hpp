#pragma once

// Proof-of-work sealing. A seal is a (nonce, mix_digest) pair where
// mix_digest = hash(seal_hash(header) || nonce || epoch seed) and the
// digest, read as a big-endian integer, is at or below the difficulty
// target. Editing any seal-hashed header field after sealing breaks
// the seal, which is the integrity mechanism everything else builds on.

#include "chainsim/types.hpp"

#include <atomic>
#include <optional>

namespace chainsim {

struct PowParams {
  uint64_t target_spacing_s = 13;
  Difficulty min_difficulty = 16;
  uint64_t epoch_blocks = 30;

  bool operator==(const PowParams&) const = default;
};

struct EpochSeed {
  uint64_t epoch_index = 0;
  Hash256 seed;
};

// seed(0) = sha256 of a fixed tag; seed(e+1) = sha256(seed(e)).
EpochSeed epoch_seed(uint64_t epoch_index);
uint64_t epoch_for_height(uint64_t height, uint64_t epoch_blocks);
EpochSeed epoch_seed_for_height(uint64_t height, const PowParams& params);

// floor((2^256 - 1) / difficulty). Rejects difficulty 0.
Difficulty difficulty_target(const Difficulty& difficulty);

Hash256 pow_mix(const Hash256& seal, uint64_t nonce, const EpochSeed& seed);

enum class MineStatus { Found, Exhausted, Cancelled };

struct MineOutcome {
  MineStatus status = MineStatus::Exhausted;
  uint64_t nonce = 0;
  Hash256 mix_digest; // on Exhausted: the true mix of the last trial
  uint64_t attempts = 0;
};

// Deterministic nonce search: trial nonces stream from mt19937_64
// seeded with rng_seed. cancel is polled at least every 1024 trials.
MineOutcome mine(const Header& h, const EpochSeed& seed, uint64_t max_attempts,
                 uint64_t rng_seed, const std::atomic<bool>* cancel = nullptr);

bool verify_pow(const Header& h, const EpochSeed& seed);

class NonMonotonicTimestamp : public Error {
public:
  explicit NonMonotonicTimestamp(const std::string& what) : Error(what) {}
};

// parent.difficulty +/- parent.difficulty/128 depending on whether the
// gap beats target spacing, floored at min_difficulty. Throws
// NonMonotonicTimestamp unless child_timestamp > parent.timestamp.
Difficulty calc_difficulty(const Header& parent, uint64_t child_timestamp,
                           const PowParams& params);

} // namespace chainsim
