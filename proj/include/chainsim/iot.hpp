#pragma once

// IoT pipeline pieces that live on top of the chain: sensor
// transactions, the local-store audit that detects tampering, and the
// on-chain tamper log record.

#include "chainsim/chain.hpp"

#include <optional>
#include <vector>

namespace chainsim {

struct TamperLog {
  std::string detecting_node;
  Hash256 block_hash;
  std::string field; // first divergent field, e.g. "state:dev-1:7"
  ByteString old_value;
  ByteString new_value;
  uint64_t detected_at = 0; // sim milliseconds

  bool operator==(const TamperLog&) const = default;

  std::string old_str() const { return std::string(old_value.begin(), old_value.end()); }
  std::string new_str() const { return std::string(new_value.begin(), new_value.end()); }
};

ByteString encode_tamper_log(const TamperLog& log);
TamperLog decode_tamper_log(ByteReader& r);

Transaction make_sensor_tx(const std::string& device_id, const std::string& contract,
                           const SensorRecord& reading, uint64_t sender_seq);

// Re-validates the blocks on path (ascending, each the previous one's
// child; the first block's parent and its post-state must be stored).
// Per block the checks run deepest first: re-executed state entries,
// gas, bloom, tx root, receipt root, uncle root binding, seal, parent
// linkage. The first divergence yields one TamperLog and the walk
// resynchronizes on the stored state, so each audited block contributes
// at most one log. Descendants may still report a state_root divergence
// of their own when an edit rewrote snapshots their headers commit to.
std::vector<TamperLog> audit_path(const ChainStore& store,
                                  const std::vector<Hash256>& path,
                                  const std::string& node_id, uint64_t now_ms);

// audit_path over the whole canonical chain above genesis.
std::vector<TamperLog> audit_local_chain(const ChainStore& store,
                                         const std::string& node_id, uint64_t now_ms);

// All tamper logs stored under the contract's log region, in key order.
std::vector<TamperLog> list_tamper_logs(const WorldState& state,
                                        const std::string& contract);

bool has_tamper_log(const WorldState& state, const std::string& contract,
                    const Hash256& content_hash);

} // namespace chainsim
