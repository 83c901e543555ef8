#pragma once

// World state: a sorted key/value map committed by a binary Merkle
// root, plus the transaction execution that validators re-run. Keys
// are namespaced by a leading tag byte: 0x00 sender sequence counters,
// 0x01 sensor records under a contract, 0x02 content-addressed tamper
// logs. Layouts in docs/encoding.md.

#include "chainsim/types.hpp"

#include <map>
#include <optional>

namespace chainsim {

inline constexpr int64_t MIN_TEMPERATURE_CENTI = -27315;
inline constexpr int64_t MAX_TEMPERATURE_CENTI = 100000;

inline constexpr uint8_t KEY_SENDER_SEQ = 0x00;
inline constexpr uint8_t KEY_RECORD = 0x01;
inline constexpr uint8_t KEY_TAMPER_LOG = 0x02;

inline constexpr uint8_t PAYLOAD_SENSOR = 0x01;
inline constexpr uint8_t PAYLOAD_TAMPER_LOG = 0x02;

struct SensorRecord {
  std::string device_id;
  uint64_t reading_time = 0; // seconds
  int64_t temperature = 0;   // centi-degrees Celsius
  uint64_t seq = 0;

  bool operator==(const SensorRecord&) const = default;
};

bool temperature_in_range(int64_t centi);

ByteString encode_sensor_record(const SensorRecord& rec);
SensorRecord decode_sensor_record(ByteReader& r);

// Transaction payloads: one tag byte, then the tag-specific body.
ByteString sensor_payload(const SensorRecord& rec);
ByteString tamper_log_payload(const ByteString& encoded_log);
std::optional<SensorRecord> parse_sensor_payload(const ByteString& payload);

ByteString sender_seq_key(const std::string& sender);
ByteString record_key(const std::string& contract, const std::string& device_id,
                      uint64_t seq);
ByteString tamper_log_key(const std::string& contract, const Hash256& content_hash);

struct WorldState {
  std::map<ByteString, ByteString> entries;

  // Root over entries in key order, each leaf = var_bytes(key) ||
  // var_bytes(value). Must be called after direct entry mutation.
  void recompute_root();
  const Hash256& root() const { return root_; }

  std::optional<ByteString> get(const ByteString& key) const;
  uint64_t sender_seq(const std::string& sender) const;

  bool operator==(const WorldState& o) const { return entries == o.entries; }

private:
  Hash256 root_ = empty_root();
};

struct ApplyResult {
  WorldState state;
  std::vector<Receipt> receipts;
  uint64_t gas_used = 0;
  Bloom256 bloom;
};

// Executes txs in order against a copy of parent. A tx succeeds iff its
// seq continues the sender's counter, gas = FIXED_TX_GAS, the payload
// parses and the target key is unwritten or already holds the same
// value; failures emit a failure receipt and write nothing. Every
// processed tx consumes FIXED_TX_GAS. Throws GasLimitError when the
// next tx would push gas_used past gas_limit.
ApplyResult apply_transactions(const WorldState& parent,
                               const std::vector<Transaction>& txs,
                               uint64_t gas_limit);

// Bloom bits a successful write sets: three indices drawn from
// sha256(var_str(contract) || key).
Bloom256 bloom_for_write(const std::string& contract, const ByteString& key);

std::optional<SensorRecord> read_record(const WorldState& state,
                                        const std::string& contract,
                                        const std::string& device_id, uint64_t seq);

ByteString encode_world_state(const WorldState& s);
WorldState decode_world_state(ByteReader& r);

} // namespace chainsim
