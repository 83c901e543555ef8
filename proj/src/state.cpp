#include "chainsim/state.hpp"

namespace chainsim {

bool temperature_in_range(int64_t centi) {
  return centi >= MIN_TEMPERATURE_CENTI && centi <= MAX_TEMPERATURE_CENTI;
}

ByteString encode_sensor_record(const SensorRecord& rec) {
  ByteWriter w;
  w.var_str(rec.device_id);
  w.u64(rec.reading_time);
  w.i64(rec.temperature);
  w.u64(rec.seq);
  return std::move(w).take();
}

SensorRecord decode_sensor_record(ByteReader& r) {
  SensorRecord rec;
  rec.device_id = r.var_str();
  rec.reading_time = r.u64();
  rec.temperature = r.i64();
  rec.seq = r.u64();
  return rec;
}

ByteString sensor_payload(const SensorRecord& rec) {
  ByteWriter w;
  w.u8(PAYLOAD_SENSOR);
  w.raw(encode_sensor_record(rec));
  return std::move(w).take();
}

ByteString tamper_log_payload(const ByteString& encoded_log) {
  ByteWriter w;
  w.u8(PAYLOAD_TAMPER_LOG);
  w.raw(encoded_log);
  return std::move(w).take();
}

std::optional<SensorRecord> parse_sensor_payload(const ByteString& payload) {
  if (payload.empty() || payload[0] != PAYLOAD_SENSOR) return std::nullopt;
  ByteString body(payload.begin() + 1, payload.end());
  try {
    ByteReader r(body);
    SensorRecord rec = decode_sensor_record(r);
    if (!r.empty()) return std::nullopt;
    return rec;
  } catch (const Error&) {
    return std::nullopt;
  }
}

ByteString sender_seq_key(const std::string& sender) {
  ByteWriter w;
  w.u8(KEY_SENDER_SEQ);
  w.var_str(sender);
  return std::move(w).take();
}

ByteString record_key(const std::string& contract, const std::string& device_id,
                      uint64_t seq) {
  ByteWriter w;
  w.u8(KEY_RECORD);
  w.var_str(contract);
  w.var_str(device_id);
  w.u64(seq);
  return std::move(w).take();
}

ByteString tamper_log_key(const std::string& contract, const Hash256& content_hash) {
  ByteWriter w;
  w.u8(KEY_TAMPER_LOG);
  w.var_str(contract);
  w.fixed(content_hash.digest);
  return std::move(w).take();
}

void WorldState::recompute_root() {
  std::vector<ByteString> leaves;
  leaves.reserve(entries.size());
  for (const auto& [k, v] : entries) {
    ByteWriter w;
    w.var_bytes(k);
    w.var_bytes(v);
    leaves.push_back(std::move(w).take());
  }
  root_ = merkle_root(leaves);
}

std::optional<ByteString> WorldState::get(const ByteString& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

uint64_t WorldState::sender_seq(const std::string& sender) const {
  auto v = get(sender_seq_key(sender));
  if (!v) return 0;
  ByteReader r(*v);
  return r.u64();
}

Bloom256 bloom_for_write(const std::string& contract, const ByteString& key) {
  ByteWriter w;
  w.var_str(contract);
  w.raw(key);
  Hash256 h = sha256(w.bytes());
  Bloom256 b;
  for (int i = 0; i < 3; ++i) {
    unsigned idx = (unsigned(h.digest[size_t(2 * i)]) << 8 | h.digest[size_t(2 * i + 1)]) % 256;
    b.set_bit(idx);
  }
  return b;
}

namespace {

// Returns the key/value a successful tx writes, or nullopt when the
// payload is malformed.
std::optional<std::pair<ByteString, ByteString>> payload_write(const Transaction& tx) {
  if (tx.payload.empty()) return std::nullopt;
  uint8_t tag = tx.payload[0];
  ByteString body(tx.payload.begin() + 1, tx.payload.end());
  if (tag == PAYLOAD_SENSOR) {
    auto rec = parse_sensor_payload(tx.payload);
    if (!rec || !temperature_in_range(rec->temperature)) return std::nullopt;
    return std::pair{record_key(tx.contract, rec->device_id, rec->seq), body};
  }
  if (tag == PAYLOAD_TAMPER_LOG) {
    if (body.empty()) return std::nullopt;
    return std::pair{tamper_log_key(tx.contract, sha256(body)), body};
  }
  return std::nullopt;
}

} // namespace

ApplyResult apply_transactions(const WorldState& parent,
                               const std::vector<Transaction>& txs,
                               uint64_t gas_limit) {
  ApplyResult res;
  res.state = parent;
  for (const Transaction& tx : txs) {
    if (res.gas_used + FIXED_TX_GAS > gas_limit)
      throw GasLimitError("apply_transactions: block gas limit exceeded");
    res.gas_used += FIXED_TX_GAS;

    Receipt rc;
    rc.tx_hash = tx_hash(tx);
    rc.gas_used = FIXED_TX_GAS;

    bool seq_ok = tx.seq == res.state.sender_seq(tx.sender);
    auto write = (seq_ok && tx.gas == FIXED_TX_GAS) ? payload_write(tx) : std::nullopt;
    // A stored key is immutable: rewriting it with a different value
    // fails, so forging a record means forging the chain around it.
    if (write) {
      auto existing = res.state.get(write->first);
      if (existing && *existing != write->second) write = std::nullopt;
    }
    if (write) {
      res.state.entries[write->first] = write->second;
      ByteWriter w;
      w.u64(tx.seq + 1);
      res.state.entries[sender_seq_key(tx.sender)] = std::move(w).take();
      rc.success = true;
      rc.bloom_bits = bloom_for_write(tx.contract, write->first);
      res.bloom.merge(rc.bloom_bits);
    }
    res.receipts.push_back(rc);
  }
  res.state.recompute_root();
  return res;
}

std::optional<SensorRecord> read_record(const WorldState& state,
                                        const std::string& contract,
                                        const std::string& device_id, uint64_t seq) {
  auto v = state.get(record_key(contract, device_id, seq));
  if (!v) return std::nullopt;
  ByteReader r(*v);
  return decode_sensor_record(r);
}

ByteString encode_world_state(const WorldState& s) {
  ByteWriter w;
  w.u32(uint32_t(s.entries.size()));
  for (const auto& [k, v] : s.entries) {
    w.var_bytes(k);
    w.var_bytes(v);
  }
  return std::move(w).take();
}

WorldState decode_world_state(ByteReader& r) {
  WorldState s;
  uint32_t n = r.u32();
  for (uint32_t i = 0; i < n; ++i) {
    ByteString k = r.var_bytes();
    s.entries[k] = r.var_bytes();
  }
  s.recompute_root();
  return s;
}

} // namespace chainsim
