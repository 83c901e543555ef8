#include "chainsim/pow.hpp"

#include <random>

namespace chainsim {

EpochSeed epoch_seed(uint64_t epoch_index) {
  Hash256 s = sha256(std::string_view("epoch-seed-genesis"));
  for (uint64_t i = 0; i < epoch_index; ++i) s = sha256(s.digest.data(), s.digest.size());
  return EpochSeed{epoch_index, s};
}

uint64_t epoch_for_height(uint64_t height, uint64_t epoch_blocks) {
  return height / epoch_blocks;
}

EpochSeed epoch_seed_for_height(uint64_t height, const PowParams& params) {
  return epoch_seed(epoch_for_height(height, params.epoch_blocks));
}

Difficulty difficulty_target(const Difficulty& difficulty) {
  if (difficulty == 0) throw Error("difficulty_target: difficulty must be positive");
  return std::numeric_limits<Difficulty>::max() / difficulty;
}

Hash256 pow_mix(const Hash256& seal, uint64_t nonce, const EpochSeed& seed) {
  ByteWriter w;
  w.fixed(seal.digest);
  w.u64(nonce);
  w.fixed(seed.seed.digest);
  return sha256(w.bytes());
}

MineOutcome mine(const Header& h, const EpochSeed& seed, uint64_t max_attempts,
                 uint64_t rng_seed, const std::atomic<bool>* cancel) {
  const Hash256 target_seal = seal_hash(h);
  const Difficulty target = difficulty_target(h.difficulty);
  std::mt19937_64 nonces(rng_seed);
  MineOutcome out;
  for (uint64_t i = 0; i < max_attempts; ++i) {
    if (cancel && i % 1024 == 0 && cancel->load(std::memory_order_relaxed)) {
      out.status = MineStatus::Cancelled;
      out.attempts = i;
      return out;
    }
    uint64_t nonce = nonces();
    Hash256 mix = pow_mix(target_seal, nonce, seed);
    out.nonce = nonce;
    out.mix_digest = mix;
    out.attempts = i + 1;
    if (hash_as_u256(mix) <= target) {
      out.status = MineStatus::Found;
      return out;
    }
  }
  out.status = MineStatus::Exhausted;
  return out;
}

bool verify_pow(const Header& h, const EpochSeed& seed) {
  Hash256 mix = pow_mix(seal_hash(h), h.nonce, seed);
  if (mix != h.mix_digest) return false;
  return hash_as_u256(mix) <= difficulty_target(h.difficulty);
}

Difficulty calc_difficulty(const Header& parent, uint64_t child_timestamp,
                           const PowParams& params) {
  if (child_timestamp <= parent.timestamp)
    throw NonMonotonicTimestamp("calc_difficulty: child timestamp not after parent");
  Difficulty step = parent.difficulty / 128;
  Difficulty next;
  if (child_timestamp - parent.timestamp < params.target_spacing_s)
    next = parent.difficulty + step;
  else
    next = parent.difficulty >= step ? parent.difficulty - step : Difficulty(0);
  if (next < params.min_difficulty) next = params.min_difficulty;
  return next;
}

} // namespace chainsim
