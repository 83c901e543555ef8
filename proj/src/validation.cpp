#include "chainsim/validation.hpp"

#include "chainsim/chain.hpp"

#include <set>

namespace chainsim {

const char* header_fault_name(HeaderFault f) {
  switch (f) {
    case HeaderFault::BadHeight: return "BadHeight";
    case HeaderFault::BadTimestamp: return "BadTimestamp";
    case HeaderFault::BadDifficulty: return "BadDifficulty";
    case HeaderFault::BadGas: return "BadGas";
    case HeaderFault::BadSeal: return "BadSeal";
  }
  return "?";
}

const char* uncle_fault_name(UncleFault f) {
  switch (f) {
    case UncleFault::TooManyUncles: return "TooManyUncles";
    case UncleFault::UnknownUncleParent: return "UnknownUncleParent";
    case UncleFault::StaleUncle: return "StaleUncle";
    case UncleFault::DuplicateUncle: return "DuplicateUncle";
    case UncleFault::InvalidUncleHeader: return "InvalidUncleHeader";
  }
  return "?";
}

namespace {

const char* kind_name(ValidationError::Kind k) {
  using K = ValidationError::Kind;
  switch (k) {
    case K::KnownBlock: return "KnownBlock";
    case K::UnknownParent: return "UnknownParent";
    case K::MissingParentState: return "MissingParentState";
    case K::InvalidHeader: return "InvalidHeader";
    case K::InvalidUncles: return "InvalidUncles";
    case K::GasUsedMismatch: return "GasUsedMismatch";
    case K::BloomMismatch: return "BloomMismatch";
    case K::TxRootMismatch: return "TxRootMismatch";
    case K::ReceiptRootMismatch: return "ReceiptRootMismatch";
    case K::StateRootMismatch: return "StateRootMismatch";
  }
  return "?";
}

} // namespace

std::string ValidationError::to_string() const {
  std::string s = kind_name(kind);
  if (header_fault) s += std::string(":") + header_fault_name(*header_fault);
  if (uncle_fault) s += std::string(":") + uncle_fault_name(*uncle_fault);
  return s;
}

ValidationError ValidationError::from_string(const std::string& s) {
  using K = ValidationError::Kind;
  std::string head = s;
  std::string tail;
  if (auto pos = s.find(':'); pos != std::string::npos) {
    head = s.substr(0, pos);
    tail = s.substr(pos + 1);
  }
  static const std::pair<const char*, K> kinds[] = {
      {"KnownBlock", K::KnownBlock},
      {"UnknownParent", K::UnknownParent},
      {"MissingParentState", K::MissingParentState},
      {"InvalidHeader", K::InvalidHeader},
      {"InvalidUncles", K::InvalidUncles},
      {"GasUsedMismatch", K::GasUsedMismatch},
      {"BloomMismatch", K::BloomMismatch},
      {"TxRootMismatch", K::TxRootMismatch},
      {"ReceiptRootMismatch", K::ReceiptRootMismatch},
      {"StateRootMismatch", K::StateRootMismatch},
  };
  for (const auto& [name, kind] : kinds) {
    if (head != name) continue;
    if (kind == K::InvalidHeader) {
      for (HeaderFault f : {HeaderFault::BadHeight, HeaderFault::BadTimestamp,
                            HeaderFault::BadDifficulty, HeaderFault::BadGas,
                            HeaderFault::BadSeal})
        if (tail == header_fault_name(f)) return header(f);
    } else if (kind == K::InvalidUncles) {
      for (UncleFault f : {UncleFault::TooManyUncles, UncleFault::UnknownUncleParent,
                           UncleFault::StaleUncle, UncleFault::DuplicateUncle,
                           UncleFault::InvalidUncleHeader})
        if (tail == uncle_fault_name(f)) return uncles(f);
    } else if (tail.empty()) {
      return simple(kind);
    }
  }
  throw Error("validation error: cannot parse \"" + s + "\"");
}

bool ValidationError::is_falsification() const {
  switch (kind) {
    case Kind::InvalidHeader:
    case Kind::InvalidUncles:
    case Kind::TxRootMismatch:
    case Kind::ReceiptRootMismatch:
    case Kind::StateRootMismatch:
      return true;
    default:
      return false;
  }
}

std::optional<HeaderFault> validate_header(const Header& h, const Header& parent,
                                           const EpochSeed& seed,
                                           const PowParams& params) {
  if (h.height != parent.height + 1) return HeaderFault::BadHeight;
  if (h.timestamp <= parent.timestamp) return HeaderFault::BadTimestamp;
  if (h.difficulty != calc_difficulty(parent, h.timestamp, params))
    return HeaderFault::BadDifficulty;
  if (h.gas_used > h.gas_limit) return HeaderFault::BadGas;
  if (!verify_pow(h, seed)) return HeaderFault::BadSeal;
  return std::nullopt;
}

std::optional<UncleFault> validate_uncles(const Block& b, const ChainStore& store) {
  if (b.header.uncle_root != uncle_list_hash(b.uncles))
    return UncleFault::InvalidUncleHeader;
  if (b.uncles.size() > MAX_UNCLES) return UncleFault::TooManyUncles;
  if (b.uncles.empty()) return std::nullopt;

  // Ancestors of b over the last UNCLE_WINDOW generations, plus the
  // uncles those ancestors already included.
  std::set<Hash256> ancestors;
  std::set<Hash256> included;
  Hash256 cur = b.header.parent_hash;
  for (uint64_t depth = 0; depth < UNCLE_WINDOW && store.has_block(cur); ++depth) {
    ancestors.insert(cur);
    const Block& blk = store.block(cur);
    for (const Header& u : blk.uncles) included.insert(block_hash(u));
    if (blk.header.height == 0) break;
    cur = blk.header.parent_hash;
  }

  std::set<Hash256> in_this_block;
  for (const Header& u : b.uncles) {
    Hash256 uh = block_hash(u);
    if (!in_this_block.insert(uh).second) return UncleFault::DuplicateUncle;
    if (ancestors.count(uh)) return UncleFault::StaleUncle;
    if (included.count(uh)) return UncleFault::DuplicateUncle;
    if (!store.has_block(u.parent_hash)) return UncleFault::UnknownUncleParent;
    if (!ancestors.count(u.parent_hash)) return UncleFault::StaleUncle;
    auto fault = validate_header(u, store.header(u.parent_hash),
                                 epoch_seed_for_height(u.height, store.pow), store.pow);
    if (fault && !(store.compromised && *fault == HeaderFault::BadSeal))
      return UncleFault::InvalidUncleHeader;
  }
  return std::nullopt;
}

std::optional<ValidationError> ChainStore::validate_and_execute(const Block& b,
                                                                ApplyResult* out) const {
  using K = ValidationError::Kind;
  const Hash256 hash = block_hash(b.header);

  if (has_block(hash) && (light || post_states.count(hash)))
    return ValidationError::simple(K::KnownBlock);
  if (!has_block(b.header.parent_hash))
    return ValidationError::simple(K::UnknownParent);
  if (!light && !post_states.count(b.header.parent_hash))
    return ValidationError::simple(K::MissingParentState);

  const Header& parent = header(b.header.parent_hash);
  if (auto fault = validate_header(b.header, parent,
                                   epoch_seed_for_height(b.header.height, pow), pow))
    return ValidationError::header(*fault);

  if (light) return std::nullopt;

  if (auto fault = validate_uncles(b, *this)) return ValidationError::uncles(*fault);

  ApplyResult exec;
  try {
    exec = apply_transactions(post_states.at(b.header.parent_hash), b.transactions,
                              b.header.gas_limit);
  } catch (const GasLimitError&) {
    return ValidationError::simple(K::GasUsedMismatch);
  }
  if (b.header.gas_used != exec.gas_used)
    return ValidationError::simple(K::GasUsedMismatch);
  if (b.header.bloom != exec.bloom) return ValidationError::simple(K::BloomMismatch);
  if (b.header.tx_root != tx_merkle_root(b.transactions))
    return ValidationError::simple(K::TxRootMismatch);
  if (b.header.receipt_root != receipt_merkle_root(exec.receipts))
    return ValidationError::simple(K::ReceiptRootMismatch);
  if (b.header.state_root != exec.state.root())
    return ValidationError::simple(K::StateRootMismatch);

  if (out) *out = std::move(exec);
  return std::nullopt;
}

std::optional<ValidationError> validate_block(const Block& b, const ChainStore& store) {
  return store.validate_and_execute(b, nullptr);
}

} // namespace chainsim
