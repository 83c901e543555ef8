#include "chainsim/tamper.hpp"

#include "chainsim/netsim.hpp"

#include <algorithm>
#include <charconv>

namespace chainsim {

const char* reseal_mode_name(ResealMode m) {
  switch (m) {
    case ResealMode::None: return "none";
    case ResealMode::FakeNonce: return "fake_nonce";
    case ResealMode::HonestRepow: return "honest_repow";
    case ResealMode::RebuildDescendants: return "rebuild_descendants";
  }
  return "?";
}

namespace {

struct EditPath {
  bool is_state = false; // else tx index
  bool tx_auto = false;  // "tx:record": index resolved from the record selector
  std::string device;
  uint64_t seq = 0;
  size_t tx_index = 0;
};

std::optional<EditPath> parse_edit_path(const std::string& path) {
  auto num = [](std::string_view s, uint64_t& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
  };
  if (path.rfind("state:", 0) == 0) {
    std::string rest = path.substr(6);
    size_t colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0) return std::nullopt;
    EditPath e;
    e.is_state = true;
    e.device = rest.substr(0, colon);
    if (!num(std::string_view(rest).substr(colon + 1), e.seq)) return std::nullopt;
    return e;
  }
  if (path == "tx:record") {
    EditPath e;
    e.tx_auto = true;
    return e;
  }
  if (path.rfind("tx:", 0) == 0) {
    uint64_t idx = 0;
    if (!num(std::string_view(path).substr(3), idx)) return std::nullopt;
    EditPath e;
    e.tx_index = size_t(idx);
    return e;
  }
  return std::nullopt;
}

TamperReceipt fail(const std::string& error) {
  TamperReceipt r;
  r.error = error;
  return r;
}

// The canonical block whose transactions wrote (device, seq), with the
// writing tx's index and contract.
struct RecordSite {
  Hash256 block;
  size_t tx_index = 0;
  std::string contract;
};

std::optional<RecordSite> find_record_site(const ChainStore& store,
                                           const std::string& device, uint64_t seq) {
  for (const auto& [height, h] : store.canonical) {
    const Block& b = store.block(h);
    for (size_t i = 0; i < b.transactions.size(); ++i) {
      auto rec = parse_sensor_payload(b.transactions[i].payload);
      if (rec && rec->device_id == device && rec->seq == seq)
        return RecordSite{h, i, b.transactions[i].contract};
    }
  }
  return std::nullopt;
}

// Every stored block whose ancestry passes through any of `roots`.
std::set<Hash256> collect_descendants(const ChainStore& store,
                                      const std::set<Hash256>& roots) {
  std::set<Hash256> doomed = roots;
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& [h, b] : store.blocks)
      if (!doomed.count(h) && doomed.count(b.header.parent_hash))
        grew = doomed.insert(h).second;
  }
  return doomed;
}

void seal_header(Header& h, ResealMode mode, uint64_t budget, std::mt19937_64& rng,
                 const PowParams& pow, TamperReceipt& rcpt) {
  EpochSeed seed = epoch_seed_for_height(h.height, pow);
  if (mode == ResealMode::FakeNonce) {
    h.nonce = rng();
    Hash256 mix = pow_mix(seal_hash(h), h.nonce, seed);
    for (auto& byte : mix.digest) byte = uint8_t(~byte);
    h.mix_digest = mix;
    rcpt.reseal_note = "fake_nonce";
    return;
  }
  MineOutcome mo = mine(h, seed, budget, rng());
  h.nonce = mo.nonce;
  h.mix_digest = mo.mix_digest;
  rcpt.attempts += mo.attempts;
  rcpt.reseal_note = mo.status == MineStatus::Found ? "found" : "exhausted";
}

} // namespace

TamperReceipt tamper_store(ChainStore& store, const TamperSpec& spec,
                           const std::string& default_contract, uint64_t rng_seed) {
  if (store.light) return fail("PreconditionFailed: light stores hold no bodies");

  int selectors = int(spec.height.has_value()) + int(spec.hash.has_value()) +
                  int(spec.record.has_value());
  if (selectors != 1) return fail("BadSpec: exactly one target selector required");

  auto path = parse_edit_path(spec.edit_path);
  if (!path) return fail("BadSpec: unparseable edit path " + spec.edit_path);

  Hash256 target;
  std::string contract = default_contract;
  if (spec.height) {
    auto it = store.canonical.find(*spec.height);
    if (it == store.canonical.end()) return fail("TargetMissing: no canonical block");
    target = it->second;
  } else if (spec.hash) {
    if (!store.has_block(*spec.hash)) return fail("TargetMissing: unknown block");
    target = *spec.hash;
  } else {
    auto site = find_record_site(store, spec.record->first, spec.record->second);
    if (!site) return fail("TargetMissing: record not on the canonical chain");
    target = site->block;
    contract = site->contract;
    if (path->tx_auto) path->tx_index = site->tx_index;
  }
  if (path->tx_auto && !spec.record)
    return fail("BadSpec: edit path tx:record needs a record selector");

  const Block& old_block = store.block(target);
  if (old_block.header.height == 0) return fail("BadSpec: genesis is not editable");

  TamperReceipt rcpt;
  rcpt.old_hash = target;
  rcpt.reseal_note = "none";

  // Resolve the edit to (state key, old/new record bytes) or a tx
  // rewrite; either way the receipt reports centi-degree values.
  ByteString key;
  ByteString old_entry;
  ByteString new_entry;
  Block edited = old_block;

  if (path->is_state) {
    rcpt.field = "state:" + path->device + ":" + std::to_string(path->seq);
    key = record_key(contract, path->device, path->seq);
    auto stored = store.post_states.at(target).get(key);
    if (!stored) return fail("TargetMissing: record not in the target state");
    ByteReader r(*stored);
    SensorRecord rec = decode_sensor_record(r);
    rcpt.old_value = std::to_string(rec.temperature);
    rcpt.new_value = std::to_string(spec.new_temperature_centi);
    rec.temperature = spec.new_temperature_centi;
    old_entry = *stored;
    new_entry = encode_sensor_record(rec);
  } else {
    if (path->tx_index >= old_block.transactions.size())
      return fail("TargetMissing: tx index out of range");
    Transaction& tx = edited.transactions[path->tx_index];
    auto rec = parse_sensor_payload(tx.payload);
    if (!rec) return fail("BadSpec: target tx carries no sensor reading");
    rcpt.field = "tx:" + std::to_string(path->tx_index);
    rcpt.old_value = std::to_string(rec->temperature);
    rcpt.new_value = std::to_string(spec.new_temperature_centi);
    rec->temperature = spec.new_temperature_centi;
    tx.payload = sensor_payload(*rec);
  }

  std::mt19937_64 rng(rng_seed);

  if (spec.reseal == ResealMode::None) {
    // Silent database edit: headers and roots keep their stored claims.
    if (path->is_state) {
      for (auto& [h, s] : store.post_states) {
        auto it = s.entries.find(key);
        if (it != s.entries.end() && it->second == old_entry) it->second = new_entry;
      }
    } else {
      store.blocks[target] = edited;
    }
    rcpt.new_hash = target;
    if (spec.claimed_td_delta != 0) store.td[target] += spec.claimed_td_delta;
    rcpt.applied = true;
    return rcpt;
  }

  if (!store.is_canonical(target))
    return fail("PreconditionFailed: reseal targets must be canonical");
  const Hash256 parent = old_block.header.parent_hash;
  if (!store.post_states.count(parent))
    return fail("TargetMissing: no parent state to rebuild from");

  // Rebuild the edited block with consistent roots.
  WorldState new_state;
  if (path->is_state) {
    new_state = store.post_states.at(target);
    new_state.entries[key] = new_entry;
    new_state.recompute_root();
    edited.header.state_root = new_state.root();
  } else {
    ApplyResult exec = apply_transactions(store.post_states.at(parent),
                                          edited.transactions, store.gas_limit);
    new_state = std::move(exec.state);
    edited.header.state_root = new_state.root();
    edited.header.tx_root = tx_merkle_root(edited.transactions);
    edited.header.receipt_root = receipt_merkle_root(exec.receipts);
    edited.header.bloom = exec.bloom;
    edited.header.gas_used = exec.gas_used;
  }
  seal_header(edited.header, spec.reseal, spec.budget, rng, store.pow, rcpt);

  // Original descendants dangle once the target is re-keyed; the
  // rebuild mode re-mines canonical ones instead of dropping them.
  std::vector<Block> rebuilt;
  if (spec.reseal == ResealMode::RebuildDescendants) {
    Hash256 parent_hash = block_hash(edited.header);
    const WorldState* parent_state = &new_state;
    std::vector<WorldState> states;
    states.reserve(store.canonical.size());
    for (uint64_t h = old_block.header.height + 1; store.canonical.count(h); ++h) {
      Block child = store.block(store.canonical.at(h));
      child.header.parent_hash = parent_hash;
      ApplyResult exec =
          apply_transactions(*parent_state, child.transactions, store.gas_limit);
      child.header.state_root = exec.state.root();
      child.header.receipt_root = receipt_merkle_root(exec.receipts);
      child.header.bloom = exec.bloom;
      child.header.gas_used = exec.gas_used;
      TamperReceipt seal_rcpt;
      seal_header(child.header, ResealMode::HonestRepow, spec.budget, rng, store.pow,
                  seal_rcpt);
      rcpt.attempts += seal_rcpt.attempts;
      if (seal_rcpt.reseal_note == "exhausted") break;
      parent_hash = block_hash(child.header);
      states.push_back(std::move(exec.state));
      parent_state = &states.back();
      rebuilt.push_back(std::move(child));
    }
    rcpt.descendants_rebuilt = rebuilt.size();
  }

  // Re-key: drop the old block and every dangling descendant, then
  // install the edited chain and move the head.
  std::set<Hash256> doomed = collect_descendants(store, {target});
  for (const Hash256& h : doomed) {
    store.blocks.erase(h);
    store.post_states.erase(h);
    store.td.erase(h);
  }
  for (auto it = store.canonical.upper_bound(old_block.header.height - 1);
       it != store.canonical.end();)
    it = store.canonical.erase(it);

  auto install = [&](const Block& b, WorldState s) {
    Hash256 h = block_hash(b.header);
    store.blocks[h] = b;
    store.post_states[h] = std::move(s);
    store.td[h] =
        store.total_difficulty(b.header.parent_hash) + TotalDifficulty(b.header.difficulty);
    store.canonical[b.header.height] = h;
    store.head = h;
    return h;
  };

  rcpt.new_hash = install(edited, std::move(new_state));
  for (Block& b : rebuilt) {
    ApplyResult exec = apply_transactions(store.post_states.at(b.header.parent_hash),
                                          b.transactions, store.gas_limit);
    install(b, std::move(exec.state));
  }
  if (spec.claimed_td_delta != 0) store.td[store.head] += spec.claimed_td_delta;
  rcpt.applied = true;
  return rcpt;
}

LightTamperReceipt forge_light_headers(ChainStore& store, uint64_t forged_height,
                                       uint64_t budget, uint64_t rng_seed) {
  LightTamperReceipt rcpt;
  if (!store.light) {
    rcpt.error = "PreconditionFailed: target is not a light store";
    return rcpt;
  }
  if (forged_height <= store.head_height()) {
    rcpt.error = "PreconditionFailed: forged height at or below local head";
    return rcpt;
  }

  std::mt19937_64 rng(rng_seed);
  uint64_t remaining = budget;
  std::vector<Header> forged;
  Header parent = store.head_block().header;
  while (parent.height < forged_height) {
    Header h;
    h.parent_hash = block_hash(parent);
    h.height = parent.height + 1;
    h.timestamp = parent.timestamp + store.pow.target_spacing_s;
    h.difficulty = calc_difficulty(parent, h.timestamp, store.pow);
    h.gas_limit = parent.gas_limit;
    h.gas_used = 0;
    h.uncle_root = uncle_list_hash({});
    h.state_root = parent.state_root;
    h.tx_root = tx_merkle_root({});
    h.receipt_root = receipt_merkle_root({});
    MineOutcome mo =
        mine(h, epoch_seed_for_height(h.height, store.pow), remaining, rng());
    remaining -= std::min(remaining, mo.attempts);
    if (mo.status != MineStatus::Found) {
      rcpt.error = "BudgetTooSmall: seal search exhausted";
      return rcpt;
    }
    h.nonce = mo.nonce;
    h.mix_digest = mo.mix_digest;
    forged.push_back(h);
    parent = h;
  }

  for (const Header& h : forged) {
    ImportResult r = store.import_header(h);
    if (r.kind == ImportResult::Kind::Rejected) {
      rcpt.error = "PreconditionFailed: forged header rejected, " + r.error->to_string();
      return rcpt;
    }
    rcpt.headers_built += 1;
  }
  rcpt.applied = true;
  rcpt.final_height = store.head_height();
  rcpt.final_td = store.head_td();
  return rcpt;
}

MajorityOutcome majority_attack(const ChainStore& base, const std::string& contract,
                                const std::string& device_id, uint64_t record_seq,
                                int64_t forged_temperature_centi, double attacker_power,
                                uint64_t fork_depth, uint64_t horizon_blocks,
                                uint64_t seed, EventLog* log) {
  MajorityOutcome out;
  auto site = find_record_site(base, device_id, record_seq);
  if (!site) throw Error("majority_attack: record not on the canonical chain");
  if (site->contract != contract)
    throw Error("majority_attack: record lives under a different contract");
  uint64_t record_height = base.block(site->block).header.height;
  uint64_t head_height = base.head_height();
  if (head_height + 1 != record_height + fork_depth)
    throw Error("majority_attack: record depth does not match fork_depth");

  ChainStore honest = base;
  ChainStore attacker = base;

  // The race is a sequence of independent block lotteries: each block
  // goes to the attacker with probability attacker_power, after a wait
  // drawn from the combined discovery rate (one block per target
  // spacing in expectation).
  DetRng race_rng(derive_seed(seed, "majority-race", "winner"));
  std::mt19937_64 seal_rng(derive_seed(seed, "majority-seal", device_id));
  const uint64_t ample = uint64_t(1) << 30;
  const double mean_ms = double(base.pow.target_spacing_s) * 1000.0;

  auto mine_next = [&](ChainStore& store, std::vector<Transaction> txs,
                       const char* who) {
    Block b;
    const Block& parent = store.head_block();
    b.header.parent_hash = store.head;
    b.header.height = parent.header.height + 1;
    b.header.timestamp = parent.header.timestamp + store.pow.target_spacing_s;
    b.header.difficulty = calc_difficulty(parent.header, b.header.timestamp, store.pow);
    b.header.gas_limit = store.gas_limit;
    b.header.uncle_root = uncle_list_hash({});
    b.transactions = std::move(txs);
    ApplyResult exec = apply_transactions(store.post_states.at(store.head),
                                          b.transactions, store.gas_limit);
    b.header.state_root = exec.state.root();
    b.header.tx_root = tx_merkle_root(b.transactions);
    b.header.receipt_root = receipt_merkle_root(exec.receipts);
    b.header.bloom = exec.bloom;
    b.header.gas_used = exec.gas_used;
    MineOutcome mo = mine(b.header, epoch_seed_for_height(b.header.height, store.pow),
                          ample, seal_rng());
    if (mo.status != MineStatus::Found)
      throw Error("majority_attack: seal search exhausted");
    b.header.nonce = mo.nonce;
    b.header.mix_digest = mo.mix_digest;
    ImportResult r = store.import_block(b);
    if (r.kind == ImportResult::Kind::Rejected)
      throw Error("majority_attack: rebuilt block rejected, " + r.error->to_string());
    if (log) {
      json d;
      d["height"] = b.header.height;
      d["hash"] = r.hash.short_hex();
      d["td"] = store.head_td().str();
      d["txs"] = b.transactions.size();
      log->emit(out.elapsed_ms, who, "BlockFound", std::move(d));
    }
    return b;
  };

  // The attacker's opening move rebuilds the record block with the
  // forged reading; everything after that is empty catch-up mining.
  uint64_t fork_parent_height = record_height - 1;
  while (attacker.head_height() > fork_parent_height) {
    Hash256 doomed_head = attacker.head;
    attacker.head = attacker.block(doomed_head).header.parent_hash;
    attacker.canonical.erase(attacker.canonical.rbegin()->first);
    attacker.blocks.erase(doomed_head);
    attacker.post_states.erase(doomed_head);
    attacker.td.erase(doomed_head);
  }
  std::vector<Transaction> opening = base.block(site->block).transactions;
  {
    auto rec = parse_sensor_payload(opening[site->tx_index].payload);
    rec->temperature = forged_temperature_centi;
    opening[site->tx_index].payload = sensor_payload(*rec);
  }
  bool opening_pending = true;

  while (out.attacker_blocks + out.honest_blocks < horizon_blocks) {
    bool attacker_wins = race_rng.uniform01() < attacker_power;
    out.elapsed_ms += race_rng.exp_ms(mean_ms);
    if (attacker_wins) {
      mine_next(attacker, opening_pending ? std::move(opening) : std::vector<Transaction>{},
                "attacker");
      opening_pending = false;
      out.attacker_blocks += 1;
      if (attacker.head_td() > honest.head_td()) {
        out.attacker_won = true;
        break;
      }
    } else {
      mine_next(honest, {}, "honest");
      out.honest_blocks += 1;
    }
  }

  out.final_td_gap = TotalDifficulty(attacker.head_td()) - honest.head_td();

  if (out.attacker_won) {
    // Publish: the honest store adopts the heavier forged chain.
    std::vector<Hash256> chain;
    for (Hash256 cur = attacker.head; !honest.has_block(cur);
         cur = attacker.block(cur).header.parent_hash)
      chain.push_back(cur);
    ImportResult last;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it)
      last = honest.import_block(attacker.block(*it));
    if (last.kind != ImportResult::Kind::Reorganized)
      throw Error("majority_attack: published fork failed to take over");
    auto forged = read_record(honest.canonical_state(), contract, device_id, record_seq);
    if (!forged || forged->temperature != forged_temperature_centi)
      throw Error("majority_attack: takeover left the record unforged");
  }
  if (log) {
    json d;
    d["attacker_won"] = out.attacker_won;
    d["final_td_gap"] = out.final_td_gap.str();
    d["attacker_blocks"] = out.attacker_blocks;
    d["honest_blocks"] = out.honest_blocks;
    log->emit(out.elapsed_ms, "network", "attack_result", std::move(d));
  }
  out.honest_final = std::move(honest);
  return out;
}

} // namespace chainsim
