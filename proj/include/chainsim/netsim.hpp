#pragma once

// Deterministic discrete-event network simulation: mining races, block
// and transaction gossip, header/body synchronization, light-client
// sync, bad-peer demotion and tamper injection, emitting a JSONL event
// log that replays byte-identically for a fixed (config, seed).

#include "chainsim/chain.hpp"
#include "chainsim/iot.hpp"
#include "chainsim/tamper.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace chainsim {

using json = nlohmann::ordered_json;

// mt19937_64 plus hand-rolled draws, so every stream is fully specified
// by the standard and stable across platforms.
class DetRng {
public:
  DetRng() : eng_(0) {}
  explicit DetRng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // 53-bit mantissa draw in [0, 1).
  double uniform01() { return double(eng_() >> 11) * 0x1.0p-53; }

  // Exponential with the given mean, rounded to milliseconds, >= 1.
  uint64_t exp_ms(double mean_ms);

private:
  std::mt19937_64 eng_;
};

uint64_t derive_seed(uint64_t root_seed, std::string_view tag, std::string_view id);

class EventLog {
public:
  void emit(uint64_t time_ms, const std::string& node, const std::string& kind,
            json detail, const std::optional<std::string>& error = std::nullopt);

  const std::vector<json>& entries() const { return entries_; }
  std::string to_jsonl() const;

  // First entry index matching kind (and node if given), or npos.
  static constexpr size_t npos = size_t(-1);
  size_t find(const std::string& kind, const std::string& node = "",
              size_t from = 0) const;

private:
  std::vector<json> entries_;
};

enum class Role { Miner, Endpoint, Light };
const char* role_name(Role r);

struct PeerRecord {
  std::string peer_id;
  Hash256 adv_head;
  TotalDifficulty adv_td;
  uint64_t adv_height = 0;
  bool bad = false;
};

struct NodeSim {
  std::string node_id;
  Role role = Role::Endpoint;
  double mining_power = 0.0;
  ChainStore store;
  std::map<std::string, PeerRecord> peers;
  std::vector<Transaction> tx_pool;
  std::set<Hash256> seen_txs;
  DetRng rng;
  uint64_t mine_generation = 0;
  bool syncing = false;
  std::string sync_peer;
  bool isolated = false; // light node with forged td above every peer
  std::vector<Transaction> stranded;
  uint64_t own_next_seq = 0;          // sender stream for log uploads
  std::set<Hash256> uploaded_logs;    // content hashes already sent
};

struct DeviceConfig {
  std::string device_id;
  std::string node;     // hosting node
  std::string contract; // empty: the simulator-wide contract
  uint64_t interval_s = 1800;
  // Scripted readings by time; ticks without an entry draw from the
  // seeded generator below.
  std::map<uint64_t, int64_t> fixture;
  int64_t base_centi = 2100;
  int64_t jitter_centi = 150;
};

struct DeviceState {
  DeviceConfig cfg;
  uint64_t next_seq = 0;
  DetRng rng;
};

struct SimEvent {
  enum class Kind {
    BlockFound,
    NewBlockMsg,
    NewTxMsg,
    GetHeaders,
    Headers,
    GetBodies,
    Bodies,
    SensorTick,
    TamperAction,
    LightTamperAction,
    LightFetch,
    SendTx
  };

  Kind kind;
  std::string from;
  std::string to; // processing node
  uint64_t generation = 0;
  Block block;
  TotalDifficulty adv_td;
  Transaction tx;
  std::vector<Hash256> locator;
  uint64_t max_headers = 0;
  std::vector<Header> headers;
  std::vector<Hash256> hashes;
  std::vector<Block> bodies;
  std::string device;
  int64_t temp_centi = 0;
  TamperSpec tamper;
  LightTamperSpec light_tamper;
};

class Simulator {
public:
  explicit Simulator(uint64_t seed);

  PowParams pow;
  uint64_t gas_limit = DEFAULT_GAS_LIMIT;
  uint64_t latency_ms = 50;
  uint64_t max_seal_attempts = 1 << 22;
  std::string contract = "lab";

  EventLog log;
  std::map<std::string, NodeSim> nodes;
  std::map<std::string, DeviceState> devices;
  uint64_t now_ms = 0;

  void add_node(const std::string& id, Role role, double mining_power);
  // Installs the shared genesis in every store and wires the full mesh
  // with peer records advertising genesis.
  void set_genesis(const Block& genesis);

  void add_device(const DeviceConfig& cfg);

  void schedule_tamper(uint64_t at_ms, const TamperSpec& spec);
  void schedule_light_tamper(uint64_t at_ms, const LightTamperSpec& spec);
  void schedule_light_fetch(uint64_t at_ms, const std::string& node);
  void schedule_send_tx(uint64_t at_ms, const std::string& node,
                        const std::string& device, int64_t temp_centi);

  // Processes events in (time, insertion order). Generator events
  // (mining draws, sensor ticks) past `until_ms` are dropped; in-flight
  // messages drain to quiescence.
  void run(uint64_t until_ms);

  // Active peer with advertised td strictly above n's head td (highest
  // td, ties to the first peer id), or null.
  const PeerRecord* select_sync_peer(const NodeSim& n) const;

  // Delivers tx to every active peer with advertised td >= local head
  // td; with no recipients the tx is recorded as stranded. Returns the
  // recipient count.
  size_t send_transaction(NodeSim& n, const Transaction& tx);

  bool converged_full_nodes() const; // identical heads on honest full nodes
  std::vector<const NodeSim*> full_nodes() const;

  // Hashes produced by tamper injections (new block keys), in order.
  const std::vector<Hash256>& tampered_hashes() const { return tampered_hashes_; }
  const std::vector<std::string>& tampered_nodes() const { return tampered_nodes_; }
  // Nodes hit by any injection, including light-header forgeries.
  const std::set<std::string>& tampered_node_set() const { return ever_tampered_; }

private:
  struct StrandedWatch {
    std::string origin;
    std::optional<uint64_t> recovery_height;
    bool reported = false;
  };

  uint64_t seed_;
  uint64_t until_ms_ = 0;
  uint64_t next_order_ = 0;
  std::map<std::pair<uint64_t, uint64_t>, SimEvent> queue_;
  std::map<Hash256, StrandedWatch> stranded_watch_;
  std::vector<Hash256> tampered_hashes_;
  std::vector<std::string> tampered_nodes_;
  std::set<std::string> ever_tampered_; // nodes hit by any injection

  void push_at(uint64_t time_ms, SimEvent ev);
  bool link_down(const std::string& from, const std::string& to) const;

  void handle(const SimEvent& ev);
  void handle_block_found(const SimEvent& ev);
  void handle_new_block(const SimEvent& ev);
  void handle_new_tx(const SimEvent& ev);
  void handle_get_headers(const SimEvent& ev);
  void handle_headers(const SimEvent& ev);
  void handle_get_bodies(const SimEvent& ev);
  void handle_bodies(const SimEvent& ev);
  void handle_sensor_tick(const SimEvent& ev);
  void handle_tamper(const SimEvent& ev);
  void handle_light_tamper(const SimEvent& ev);
  void handle_light_fetch(const SimEvent& ev);
  void handle_send_tx(const SimEvent& ev);

  void redraw_mining(NodeSim& n);
  void broadcast_block(NodeSim& origin, const Block& b, const TotalDifficulty& adv_td);
  void after_import(NodeSim& n, const ImportResult& r);
  void start_sync(NodeSim& n, const std::string& peer);
  void request_headers(NodeSim& n);
  std::vector<Hash256> build_locator(const ChainStore& store) const;
  void prune_pool(NodeSim& n, const Block& b);
  void note_canonical_block(NodeSim& n, const Block& b);
  void upload_tamper_log(NodeSim& n, const TamperLog& log);
  void retry_stranded(NodeSim& n);
  Transaction device_reading_tx(const std::string& device, int64_t forced_temp,
                                bool use_fixture, json* detail);
};

} // namespace chainsim
