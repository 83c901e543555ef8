#include "chainsim/iot.hpp"

namespace chainsim {

ByteString encode_tamper_log(const TamperLog& log) {
  ByteWriter w;
  w.var_str(log.detecting_node);
  w.fixed(log.block_hash.digest);
  w.var_str(log.field);
  w.var_bytes(log.old_value);
  w.var_bytes(log.new_value);
  w.u64(log.detected_at);
  return std::move(w).take();
}

TamperLog decode_tamper_log(ByteReader& r) {
  TamperLog log;
  log.detecting_node = r.var_str();
  log.block_hash.digest = r.fixed<32>();
  log.field = r.var_str();
  log.old_value = r.var_bytes();
  log.new_value = r.var_bytes();
  log.detected_at = r.u64();
  return log;
}

Transaction make_sensor_tx(const std::string& device_id, const std::string& contract,
                           const SensorRecord& reading, uint64_t sender_seq) {
  Transaction tx;
  tx.sender = device_id;
  tx.contract = contract;
  tx.payload = sensor_payload(reading);
  tx.seq = sender_seq;
  tx.gas = FIXED_TX_GAS;
  return tx;
}

namespace {

ByteString repr(const std::string& s) { return ByteString(s.begin(), s.end()); }

// Readable name for a state key: "state:<device>:<seq>" for sensor
// records, "seq:<sender>" for counters, "log:<hash12>" for tamper logs.
std::string field_for_key(const ByteString& key) {
  try {
    ByteReader r(key);
    uint8_t tag = r.u8();
    if (tag == KEY_RECORD) {
      r.var_str(); // contract
      std::string device = r.var_str();
      uint64_t seq = r.u64();
      return "state:" + device + ":" + std::to_string(seq);
    }
    if (tag == KEY_SENDER_SEQ) return "seq:" + r.var_str();
    if (tag == KEY_TAMPER_LOG) {
      r.var_str();
      Hash256 h;
      h.digest = r.fixed<32>();
      return "log:" + h.short_hex();
    }
  } catch (const Error&) {
  }
  return "key:" + to_hex(key.data(), key.size());
}

ByteString value_repr(const ByteString& key, const std::optional<ByteString>& value) {
  if (!value) return repr("absent");
  try {
    ByteReader kr(key);
    uint8_t tag = kr.u8();
    if (tag == KEY_RECORD) {
      ByteReader vr(*value);
      return repr(std::to_string(decode_sensor_record(vr).temperature));
    }
    if (tag == KEY_SENDER_SEQ) {
      ByteReader vr(*value);
      return repr(std::to_string(vr.u64()));
    }
  } catch (const Error&) {
  }
  return repr(to_hex(value->data(), value->size()));
}

// First key whose value differs between the two maps, in key order.
std::optional<ByteString> first_divergent_key(
    const std::map<ByteString, ByteString>& expected,
    const std::map<ByteString, ByteString>& stored) {
  auto e = expected.begin();
  auto s = stored.begin();
  while (e != expected.end() || s != stored.end()) {
    if (e == expected.end()) return s->first;
    if (s == stored.end()) return e->first;
    if (e->first != s->first) return std::min(e->first, s->first);
    if (e->second != s->second) return e->first;
    ++e, ++s;
  }
  return std::nullopt;
}

} // namespace

std::vector<TamperLog> audit_path(const ChainStore& store,
                                  const std::vector<Hash256>& path,
                                  const std::string& node_id, uint64_t now_ms) {
  std::vector<TamperLog> findings;
  if (path.empty()) return findings;

  Hash256 expected_parent = store.block(path.front()).header.parent_hash;
  if (!store.post_states.count(expected_parent))
    throw Error("audit_path: no stored state below the path");

  for (const Hash256& h : path) {
    const Block& b = store.block(h);
    const WorldState& stored_state = store.post_states.at(h);
    const WorldState& parent_state = store.post_states.at(expected_parent);

    TamperLog log;
    log.detecting_node = node_id;
    log.block_hash = h;
    log.detected_at = now_ms;
    bool found = true;

    std::optional<ApplyResult> exec;
    try {
      exec = apply_transactions(parent_state, b.transactions, b.header.gas_limit);
    } catch (const GasLimitError&) {
    }

    if (!exec) {
      log.field = "gas_used";
      log.old_value = repr("within_limit");
      log.new_value = repr("over_limit");
    } else if (auto key = first_divergent_key(exec->state.entries, stored_state.entries)) {
      log.field = field_for_key(*key);
      log.old_value = value_repr(*key, exec->state.get(*key));
      log.new_value = value_repr(*key, stored_state.get(*key));
    } else if (exec->state.root() != b.header.state_root) {
      log.field = "state_root";
      log.old_value = repr(exec->state.root().hex());
      log.new_value = repr(b.header.state_root.hex());
    } else if (exec->gas_used != b.header.gas_used) {
      log.field = "gas_used";
      log.old_value = repr(std::to_string(exec->gas_used));
      log.new_value = repr(std::to_string(b.header.gas_used));
    } else if (exec->bloom != b.header.bloom) {
      log.field = "bloom";
      log.old_value = repr(exec->bloom.hex());
      log.new_value = repr(b.header.bloom.hex());
    } else if (tx_merkle_root(b.transactions) != b.header.tx_root) {
      log.field = "tx_root";
      log.old_value = repr(tx_merkle_root(b.transactions).hex());
      log.new_value = repr(b.header.tx_root.hex());
    } else if (receipt_merkle_root(exec->receipts) != b.header.receipt_root) {
      log.field = "receipt_root";
      log.old_value = repr(receipt_merkle_root(exec->receipts).hex());
      log.new_value = repr(b.header.receipt_root.hex());
    } else if (uncle_list_hash(b.uncles) != b.header.uncle_root) {
      log.field = "uncle_root";
      log.old_value = repr(uncle_list_hash(b.uncles).hex());
      log.new_value = repr(b.header.uncle_root.hex());
    } else if (!verify_pow(b.header,
                           epoch_seed_for_height(b.header.height, store.pow))) {
      log.field = "seal";
      log.old_value = repr("pass");
      log.new_value = repr("fail");
    } else if (b.header.parent_hash != expected_parent) {
      log.field = "linkage";
      log.old_value = repr(expected_parent.hex());
      log.new_value = repr(b.header.parent_hash.hex());
    } else {
      found = false;
    }

    if (found) findings.push_back(std::move(log));
    // Resync on the stored snapshot so a divergent key is blamed on
    // the block that was edited, not on every descendant. Descendants
    // may still surface separately when their headers commit to a
    // state root the rewritten snapshots no longer produce.
    expected_parent = h;
  }
  return findings;
}

std::vector<TamperLog> audit_local_chain(const ChainStore& store,
                                         const std::string& node_id, uint64_t now_ms) {
  std::vector<Hash256> path;
  for (const auto& [height, h] : store.canonical)
    if (height > 0) path.push_back(h);
  return audit_path(store, path, node_id, now_ms);
}

std::vector<TamperLog> list_tamper_logs(const WorldState& state,
                                        const std::string& contract) {
  ByteWriter w;
  w.u8(KEY_TAMPER_LOG);
  w.var_str(contract);
  ByteString prefix = std::move(w).take();

  std::vector<TamperLog> out;
  for (auto it = state.entries.lower_bound(prefix); it != state.entries.end(); ++it) {
    const ByteString& key = it->first;
    if (key.size() < prefix.size() ||
        !std::equal(prefix.begin(), prefix.end(), key.begin()))
      break;
    ByteReader r(it->second);
    out.push_back(decode_tamper_log(r));
  }
  return out;
}

bool has_tamper_log(const WorldState& state, const std::string& contract,
                    const Hash256& content_hash) {
  return state.get(tamper_log_key(contract, content_hash)).has_value();
}

} // namespace chainsim
