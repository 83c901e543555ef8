#pragma once

// Block-import validation. validate_block runs ten checks in a fixed
// order and reports the first failure only; the error names appear
// verbatim in event logs, so they are part of the output contract.

#include "chainsim/pow.hpp"
#include "chainsim/types.hpp"

#include <optional>
#include <string>

namespace chainsim {

class ChainStore;

enum class HeaderFault { BadHeight, BadTimestamp, BadDifficulty, BadGas, BadSeal };
enum class UncleFault {
  TooManyUncles,
  UnknownUncleParent,
  StaleUncle,
  DuplicateUncle,
  InvalidUncleHeader
};

const char* header_fault_name(HeaderFault f);
const char* uncle_fault_name(UncleFault f);

struct ValidationError {
  enum class Kind {
    KnownBlock,
    UnknownParent,
    MissingParentState,
    InvalidHeader,
    InvalidUncles,
    GasUsedMismatch,
    BloomMismatch,
    TxRootMismatch,
    ReceiptRootMismatch,
    StateRootMismatch
  };

  Kind kind;
  std::optional<HeaderFault> header_fault;  // set iff kind = InvalidHeader
  std::optional<UncleFault> uncle_fault;    // set iff kind = InvalidUncles

  bool operator==(const ValidationError&) const = default;

  // "StateRootMismatch", "InvalidHeader:BadSeal", "InvalidUncles:..."
  std::string to_string() const;
  // Inverse of to_string; throws Error on unknown names.
  static ValidationError from_string(const std::string& s);

  // True for the falsification errors that put a block into bad_blocks
  // and get the sending peer demoted.
  bool is_falsification() const;

  static ValidationError simple(Kind k) { return ValidationError{k, {}, {}}; }
  static ValidationError header(HeaderFault f) {
    return ValidationError{Kind::InvalidHeader, f, {}};
  }
  static ValidationError uncles(UncleFault f) {
    return ValidationError{Kind::InvalidUncles, {}, f};
  }
};

// Checks, in order: height, timestamp, difficulty, gas, seal.
std::optional<HeaderFault> validate_header(const Header& h, const Header& parent,
                                           const EpochSeed& seed,
                                           const PowParams& params);

// Uncle rules for block b whose parent is in store: at most MAX_UNCLES;
// header.uncle_root binds the list; no in-list duplicates; uncle is not
// b's parent or ancestor and was not already included within
// UNCLE_WINDOW generations; uncle's parent is a stored ancestor of b
// within that window; uncle header itself validates. A compromised
// store waives only the uncle seal check (a hacked node trusts its own
// database), which is how tampered uncles get rebroadcast.
std::optional<UncleFault> validate_uncles(const Block& b, const ChainStore& store);

// The full import pipeline; short-circuits on the first failing check:
// KnownBlock, UnknownParent, MissingParentState, InvalidHeader,
// InvalidUncles, then one re-execution pass feeding GasUsedMismatch,
// BloomMismatch, TxRootMismatch, ReceiptRootMismatch, StateRootMismatch.
std::optional<ValidationError> validate_block(const Block& b, const ChainStore& store);

} // namespace chainsim
