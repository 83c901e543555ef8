#include "chainsim/netsim.hpp"

#include <algorithm>
#include <cmath>

namespace chainsim {

uint64_t DetRng::exp_ms(double mean_ms) {
  double u = uniform01();
  double t = -std::log(1.0 - u) * mean_ms;
  uint64_t ms = uint64_t(std::llround(t));
  return ms < 1 ? 1 : ms;
}

uint64_t derive_seed(uint64_t root_seed, std::string_view tag, std::string_view id) {
  ByteWriter w;
  w.var_str(tag);
  w.u64(root_seed);
  w.var_str(id);
  Hash256 h = sha256(w.bytes());
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = v << 8 | h.digest[size_t(i)];
  return v;
}

void EventLog::emit(uint64_t time_ms, const std::string& node, const std::string& kind,
                    json detail, const std::optional<std::string>& error) {
  json e;
  e["time"] = time_ms;
  e["node"] = node;
  e["kind"] = kind;
  e["detail"] = std::move(detail);
  if (error) e["error"] = *error;
  entries_.push_back(std::move(e));
}

std::string EventLog::to_jsonl() const {
  std::string out;
  for (const json& e : entries_) {
    out += e.dump();
    out += '\n';
  }
  return out;
}

size_t EventLog::find(const std::string& kind, const std::string& node,
                      size_t from) const {
  for (size_t i = from; i < entries_.size(); ++i) {
    if (entries_[i]["kind"] != kind) continue;
    if (!node.empty() && entries_[i]["node"] != node) continue;
    return i;
  }
  return npos;
}

const char* role_name(Role r) {
  switch (r) {
    case Role::Miner: return "miner";
    case Role::Endpoint: return "endpoint";
    case Role::Light: return "light";
  }
  return "?";
}

namespace {

std::string td_str(const TotalDifficulty& td) { return td.str(); }

json import_outcome_json(const std::string& from, const Block& b,
                         const TotalDifficulty& adv_td, const ImportResult& r) {
  json d;
  d["from"] = from;
  d["hash"] = r.hash.short_hex();
  d["height"] = b.header.height;
  d["adv_td"] = td_str(adv_td);
  d["outcome"] = ImportResult::kind_name(r.kind);
  return d;
}

} // namespace

Simulator::Simulator(uint64_t seed) : seed_(seed) {}

void Simulator::add_node(const std::string& id, Role role, double mining_power) {
  NodeSim n;
  n.node_id = id;
  n.role = role;
  n.mining_power = mining_power;
  n.rng = DetRng(derive_seed(seed_, "node-rng", id));
  n.store.pow = pow;
  n.store.gas_limit = gas_limit;
  n.store.light = role == Role::Light;
  nodes.emplace(id, std::move(n));
}

void Simulator::set_genesis(const Block& genesis) {
  Hash256 gh = block_hash(genesis.header);
  TotalDifficulty gtd(genesis.header.difficulty);
  for (auto& [id, n] : nodes) {
    n.store.pow = pow;
    n.store.gas_limit = gas_limit;
    n.store.init_genesis(genesis);
    for (const auto& [pid, peer] : nodes) {
      if (pid == id) continue;
      n.peers[pid] = PeerRecord{pid, gh, gtd, 0, false};
    }
  }
}

void Simulator::add_device(const DeviceConfig& cfg) {
  DeviceState d;
  d.cfg = cfg;
  d.rng = DetRng(derive_seed(seed_, "device-rng", cfg.device_id));
  devices.emplace(cfg.device_id, std::move(d));
  SimEvent ev;
  ev.kind = SimEvent::Kind::SensorTick;
  ev.to = cfg.node;
  ev.device = cfg.device_id;
  push_at(cfg.interval_s * 1000, std::move(ev));
}

void Simulator::schedule_tamper(uint64_t at_ms, const TamperSpec& spec) {
  SimEvent ev;
  ev.kind = SimEvent::Kind::TamperAction;
  ev.to = spec.target_node;
  ev.tamper = spec;
  push_at(at_ms, std::move(ev));
}

void Simulator::schedule_light_tamper(uint64_t at_ms, const LightTamperSpec& spec) {
  SimEvent ev;
  ev.kind = SimEvent::Kind::LightTamperAction;
  ev.to = spec.target_node;
  ev.light_tamper = spec;
  push_at(at_ms, std::move(ev));
}

void Simulator::schedule_light_fetch(uint64_t at_ms, const std::string& node) {
  SimEvent ev;
  ev.kind = SimEvent::Kind::LightFetch;
  ev.to = node;
  push_at(at_ms, std::move(ev));
}

void Simulator::schedule_send_tx(uint64_t at_ms, const std::string& node,
                                 const std::string& device, int64_t temp_centi) {
  SimEvent ev;
  ev.kind = SimEvent::Kind::SendTx;
  ev.to = node;
  ev.device = device;
  ev.temp_centi = temp_centi;
  push_at(at_ms, std::move(ev));
}

void Simulator::push_at(uint64_t time_ms, SimEvent ev) {
  queue_.emplace(std::pair{time_ms, next_order_++}, std::move(ev));
}

bool Simulator::link_down(const std::string& from, const std::string& to) const {
  auto check = [this](const std::string& owner, const std::string& peer) {
    auto n = nodes.find(owner);
    if (n == nodes.end()) return true;
    auto p = n->second.peers.find(peer);
    return p == n->second.peers.end() || p->second.bad;
  };
  return check(from, to) || check(to, from);
}

void Simulator::run(uint64_t until_ms) {
  until_ms_ = until_ms;
  for (auto& [id, n] : nodes)
    if (n.role == Role::Miner && n.mining_power > 0) redraw_mining(n);

  while (!queue_.empty()) {
    auto it = queue_.begin();
    uint64_t t = it->first.first;
    SimEvent ev = std::move(it->second);
    queue_.erase(it);
    now_ms = t;
    bool generator = ev.kind == SimEvent::Kind::BlockFound ||
                     ev.kind == SimEvent::Kind::SensorTick;
    if (generator && t > until_ms_) continue;
    handle(ev);
  }
}

void Simulator::handle(const SimEvent& ev) {
  using K = SimEvent::Kind;
  switch (ev.kind) {
    case K::BlockFound: return handle_block_found(ev);
    case K::NewBlockMsg: return handle_new_block(ev);
    case K::NewTxMsg: return handle_new_tx(ev);
    case K::GetHeaders: return handle_get_headers(ev);
    case K::Headers: return handle_headers(ev);
    case K::GetBodies: return handle_get_bodies(ev);
    case K::Bodies: return handle_bodies(ev);
    case K::SensorTick: return handle_sensor_tick(ev);
    case K::TamperAction: return handle_tamper(ev);
    case K::LightTamperAction: return handle_light_tamper(ev);
    case K::LightFetch: return handle_light_fetch(ev);
    case K::SendTx: return handle_send_tx(ev);
  }
}

void Simulator::redraw_mining(NodeSim& n) {
  n.mine_generation += 1;
  if (n.role != Role::Miner || n.mining_power <= 0) return;
  double mean = double(pow.target_spacing_s) * 1000.0 / n.mining_power;
  SimEvent ev;
  ev.kind = SimEvent::Kind::BlockFound;
  ev.to = n.node_id;
  ev.generation = n.mine_generation;
  push_at(now_ms + n.rng.exp_ms(mean), std::move(ev));
}

void Simulator::handle_block_found(const SimEvent& ev) {
  NodeSim& n = nodes.at(ev.to);
  if (ev.generation != n.mine_generation) return; // stale draw

  Block b = assemble_block(n.store, n.tx_pool, now_ms / 1000, true);
  EpochSeed seed = epoch_seed_for_height(b.header.height, pow);
  MineOutcome mo = mine(b.header, seed, max_seal_attempts, n.rng.next_u64());
  if (mo.status != MineStatus::Found) {
    log.emit(now_ms, n.node_id, "BlockFound", json{{"height", b.header.height}},
             "SealExhausted");
    redraw_mining(n);
    return;
  }
  b.header.nonce = mo.nonce;
  b.header.mix_digest = mo.mix_digest;

  ImportResult r = n.store.import_block(b);
  json d;
  d["height"] = b.header.height;
  d["hash"] = r.hash.short_hex();
  d["parent"] = b.header.parent_hash.short_hex();
  d["difficulty"] = b.header.difficulty.str();
  d["txs"] = b.transactions.size();
  d["uncles"] = b.uncles.size();
  if (r.kind == ImportResult::Kind::Rejected) {
    log.emit(now_ms, n.node_id, "BlockFound", std::move(d), r.error->to_string());
    redraw_mining(n);
    return;
  }
  TotalDifficulty new_td = n.store.total_difficulty(r.hash);
  d["td"] = td_str(new_td);
  log.emit(now_ms, n.node_id, "BlockFound", std::move(d));

  after_import(n, r);
  broadcast_block(n, b, new_td);
  redraw_mining(n);
}

void Simulator::broadcast_block(NodeSim& origin, const Block& b,
                                const TotalDifficulty& adv_td) {
  for (const auto& [pid, peer] : origin.peers) {
    if (peer.bad) continue;
    SimEvent ev;
    ev.kind = SimEvent::Kind::NewBlockMsg;
    ev.from = origin.node_id;
    ev.to = pid;
    ev.block = b;
    ev.adv_td = adv_td;
    push_at(now_ms + latency_ms, std::move(ev));
  }
}

void Simulator::handle_new_block(const SimEvent& ev) {
  if (link_down(ev.from, ev.to)) return;
  NodeSim& n = nodes.at(ev.to);

  PeerRecord& pr = n.peers.at(ev.from);
  pr.adv_head = block_hash(ev.block.header);
  pr.adv_td = ev.adv_td;
  pr.adv_height = ev.block.header.height;

  ImportResult r = n.role == Role::Light ? n.store.import_header(ev.block.header)
                                         : n.store.import_block(ev.block);
  json d = import_outcome_json(ev.from, ev.block, ev.adv_td, r);
  std::optional<std::string> err;
  if (r.error) err = r.error->to_string();
  log.emit(now_ms, n.node_id, "NewBlockMsg", std::move(d), err);

  if (r.kind == ImportResult::Kind::Rejected) {
    if (r.error->is_falsification()) {
      pr.bad = true;
      log.emit(now_ms, n.node_id, "demote",
               json{{"peer", ev.from}, {"reason", r.error->to_string()}});
    } else if (r.error->kind == ValidationError::Kind::UnknownParent) {
      start_sync(n, ev.from);
    }
    return;
  }
  after_import(n, r);
}

void Simulator::after_import(NodeSim& n, const ImportResult& r) {
  if (r.kind == ImportResult::Kind::SideChain ||
      r.kind == ImportResult::Kind::Rejected)
    return;

  if (r.kind == ImportResult::Kind::Reorganized) {
    json d;
    d["old_head"] = r.old_head.short_hex();
    d["new_head"] = r.new_head.short_hex();
    d["height"] = n.store.head_height();
    d["depth"] = r.reverted.size();
    json rev = json::array();
    for (const Hash256& h : r.reverted) rev.push_back(h.short_hex());
    d["reverted"] = std::move(rev);
    d["applied"] = r.applied.size();
    log.emit(now_ms, n.node_id, "reorg", std::move(d));

    if (!n.store.light) {
      // Reverted transactions go back to the pool; the seq filter in
      // assemble_block drops the ones the new branch already covers.
      for (const Hash256& h : r.reverted)
        for (const Transaction& tx : n.store.block(h).transactions)
          n.tx_pool.push_back(tx);

      for (const TamperLog& f : audit_path(n.store, r.reverted, n.node_id, now_ms)) {
        json a;
        a["block"] = f.block_hash.short_hex();
        a["field"] = f.field;
        a["old"] = f.old_str();
        a["new"] = f.new_str();
        log.emit(now_ms, n.node_id, "audit", std::move(a));
        upload_tamper_log(n, f);
      }
    }

    if (n.isolated) {
      n.isolated = false;
      log.emit(now_ms, n.node_id, "sync_resumed",
               json{{"via", "reorg"}, {"head", r.new_head.short_hex()},
                    {"height", n.store.head_height()}});
      for (const Transaction& tx : n.stranded) {
        auto w = stranded_watch_.find(tx_hash(tx));
        if (w != stranded_watch_.end())
          w->second.recovery_height = n.store.head_height();
      }
      retry_stranded(n);
    }
  }

  if (!n.store.light) {
    if (r.kind == ImportResult::Kind::ExtendedCanonical) {
      const Block& b = n.store.block(r.new_head);
      prune_pool(n, b);
      note_canonical_block(n, b);
    } else {
      for (const Hash256& h : r.applied) {
        const Block& b = n.store.block(h);
        prune_pool(n, b);
        note_canonical_block(n, b);
      }
    }
  }

  redraw_mining(n); // head changed
}

void Simulator::prune_pool(NodeSim& n, const Block& b) {
  if (b.transactions.empty() || n.tx_pool.empty()) return;
  std::set<Hash256> mined;
  for (const Transaction& tx : b.transactions) mined.insert(tx_hash(tx));
  std::erase_if(n.tx_pool,
                [&](const Transaction& tx) { return mined.count(tx_hash(tx)) != 0; });
}

void Simulator::note_canonical_block(NodeSim& n, const Block& b) {
  for (const Transaction& tx : b.transactions) {
    auto w = stranded_watch_.find(tx_hash(tx));
    if (w == stranded_watch_.end() || w->second.reported) continue;
    w->second.reported = true;
    json d;
    d["tx"] = tx_hash(tx).short_hex();
    d["height"] = b.header.height;
    if (w->second.recovery_height)
      d["blocks_after_recovery"] = b.header.height - *w->second.recovery_height;
    log.emit(now_ms, w->second.origin, "stranded_tx_mined", std::move(d));
  }
}

void Simulator::handle_new_tx(const SimEvent& ev) {
  if (link_down(ev.from, ev.to)) return;
  NodeSim& n = nodes.at(ev.to);
  Hash256 th = tx_hash(ev.tx);
  if (!n.seen_txs.insert(th).second) return; // duplicate
  if (!n.store.light) n.tx_pool.push_back(ev.tx);
  json d;
  d["from"] = ev.from;
  d["tx"] = th.short_hex();
  d["sender"] = ev.tx.sender;
  d["seq"] = ev.tx.seq;
  log.emit(now_ms, n.node_id, "NewTxMsg", std::move(d));
}

const PeerRecord* Simulator::select_sync_peer(const NodeSim& n) const {
  TotalDifficulty local = n.store.head_td();
  const PeerRecord* best = nullptr;
  for (const auto& [pid, peer] : n.peers) {
    if (peer.bad) continue;
    if (peer.adv_td <= local) continue;
    if (!best || peer.adv_td > best->adv_td) best = &peer;
  }
  return best;
}

size_t Simulator::send_transaction(NodeSim& n, const Transaction& tx) {
  Hash256 th = tx_hash(tx);
  n.seen_txs.insert(th);
  if (!n.store.light &&
      std::none_of(n.tx_pool.begin(), n.tx_pool.end(),
                   [&](const Transaction& t) { return tx_hash(t) == th; }))
    n.tx_pool.push_back(tx);

  TotalDifficulty local = n.store.head_td();
  size_t recipients = 0;
  for (const auto& [pid, peer] : n.peers) {
    if (peer.bad || link_down(n.node_id, pid)) continue;
    if (peer.adv_td < local) continue;
    SimEvent ev;
    ev.kind = SimEvent::Kind::NewTxMsg;
    ev.from = n.node_id;
    ev.to = pid;
    ev.tx = tx;
    push_at(now_ms + latency_ms, std::move(ev));
    recipients += 1;
  }
  if (recipients == 0) {
    n.stranded.push_back(tx);
    stranded_watch_.emplace(th, StrandedWatch{n.node_id, std::nullopt, false});
    json d;
    d["tx"] = th.short_hex();
    d["sender"] = tx.sender;
    d["seq"] = tx.seq;
    log.emit(now_ms, n.node_id, "stranded_tx", std::move(d));
  }
  return recipients;
}

void Simulator::retry_stranded(NodeSim& n) {
  if (n.stranded.empty()) return;
  std::vector<Transaction> pending = std::move(n.stranded);
  n.stranded.clear();
  for (const Transaction& tx : pending) send_transaction(n, tx);
}

void Simulator::start_sync(NodeSim& n, const std::string& peer) {
  if (n.syncing) return;
  if (auto it = n.peers.find(peer); it == n.peers.end() || it->second.bad) return;
  n.syncing = true;
  n.sync_peer = peer;
  request_headers(n);
}

void Simulator::request_headers(NodeSim& n) {
  SimEvent ev;
  ev.kind = SimEvent::Kind::GetHeaders;
  ev.from = n.node_id;
  ev.to = n.sync_peer;
  ev.locator = build_locator(n.store);
  ev.max_headers = 64;
  push_at(now_ms + latency_ms, std::move(ev));
}

std::vector<Hash256> Simulator::build_locator(const ChainStore& store) const {
  std::vector<Hash256> locator;
  uint64_t height = store.head_height();
  uint64_t step = 1;
  while (true) {
    locator.push_back(store.canonical.at(height));
    if (height == 0 || locator.size() >= 32) break;
    if (locator.size() >= 8) step *= 2;
    height = height > step ? height - step : 0;
  }
  if (locator.back() != store.genesis_hash()) locator.push_back(store.genesis_hash());
  return locator;
}

void Simulator::handle_get_headers(const SimEvent& ev) {
  if (link_down(ev.from, ev.to)) return;
  NodeSim& s = nodes.at(ev.to);

  uint64_t start = 0;
  for (const Hash256& h : ev.locator) {
    if (!s.store.is_canonical(h)) continue;
    start = s.store.block(h).header.height + 1;
    break;
  }
  std::vector<Header> headers;
  for (uint64_t h = start; h <= s.store.head_height() && headers.size() < ev.max_headers;
       ++h)
    headers.push_back(s.store.header(s.store.canonical.at(h)));

  json d;
  d["from"] = ev.from;
  d["start"] = start;
  d["served"] = headers.size();
  log.emit(now_ms, s.node_id, "GetHeaders", std::move(d));

  SimEvent resp;
  resp.kind = SimEvent::Kind::Headers;
  resp.from = s.node_id;
  resp.to = ev.from;
  resp.headers = std::move(headers);
  push_at(now_ms + latency_ms, std::move(resp));
}

void Simulator::handle_headers(const SimEvent& ev) {
  if (link_down(ev.from, ev.to)) return;
  NodeSim& n = nodes.at(ev.to);
  if (!n.syncing || ev.from != n.sync_peer) return;

  json d;
  d["from"] = ev.from;
  d["count"] = ev.headers.size();
  if (!ev.headers.empty()) {
    d["first_height"] = ev.headers.front().height;
    d["last_height"] = ev.headers.back().height;
  }
  log.emit(now_ms, n.node_id, "Headers", std::move(d));

  if (ev.headers.empty()) {
    n.syncing = false;
    return;
  }

  if (n.role == Role::Light) {
    for (const Header& h : ev.headers) {
      ImportResult r = n.store.import_header(h);
      if (r.kind == ImportResult::Kind::Rejected && r.error->is_falsification()) {
        n.peers.at(ev.from).bad = true;
        log.emit(now_ms, n.node_id, "demote",
                 json{{"peer", ev.from}, {"reason", r.error->to_string()}});
        n.syncing = false;
        return;
      }
      after_import(n, r);
    }
    if (n.peers.at(ev.from).adv_td > n.store.head_td())
      request_headers(n);
    else
      n.syncing = false;
    return;
  }

  std::vector<Hash256> wanted;
  for (const Header& h : ev.headers) {
    Hash256 bh = block_hash(h);
    if (!n.store.has_block(bh) || !n.store.post_states.count(bh)) wanted.push_back(bh);
  }
  if (wanted.empty()) {
    n.syncing = false;
    return;
  }
  SimEvent req;
  req.kind = SimEvent::Kind::GetBodies;
  req.from = n.node_id;
  req.to = ev.from;
  req.hashes = std::move(wanted);
  push_at(now_ms + latency_ms, std::move(req));
}

void Simulator::handle_get_bodies(const SimEvent& ev) {
  if (link_down(ev.from, ev.to)) return;
  NodeSim& s = nodes.at(ev.to);
  std::vector<Block> bodies;
  for (const Hash256& h : ev.hashes)
    if (s.store.has_block(h)) bodies.push_back(s.store.block(h));

  log.emit(now_ms, s.node_id, "GetBodies",
           json{{"from", ev.from}, {"served", bodies.size()}});

  SimEvent resp;
  resp.kind = SimEvent::Kind::Bodies;
  resp.from = s.node_id;
  resp.to = ev.from;
  resp.bodies = std::move(bodies);
  push_at(now_ms + latency_ms, std::move(resp));
}

void Simulator::handle_bodies(const SimEvent& ev) {
  if (link_down(ev.from, ev.to)) return;
  NodeSim& n = nodes.at(ev.to);
  if (!n.syncing || ev.from != n.sync_peer) return;

  json imported = json::array();
  bool demoted = false;
  std::vector<ImportResult> results;
  for (const Block& b : ev.bodies) {
    ImportResult r = n.store.import_block(b);
    json item;
    item["hash"] = r.hash.short_hex();
    item["outcome"] = ImportResult::kind_name(r.kind);
    if (r.error) item["error"] = r.error->to_string();
    imported.push_back(std::move(item));
    if (r.kind == ImportResult::Kind::Rejected) {
      if (r.error->is_falsification()) {
        demoted = true;
        break;
      }
      continue;
    }
    results.push_back(std::move(r));
  }
  log.emit(now_ms, n.node_id, "Bodies",
           json{{"from", ev.from}, {"imported", std::move(imported)}});

  for (const ImportResult& r : results) after_import(n, r);

  if (demoted) {
    n.peers.at(ev.from).bad = true;
    log.emit(now_ms, n.node_id, "demote",
             json{{"peer", ev.from}, {"reason", "bad sync body"}});
    n.syncing = false;
    return;
  }
  if (n.peers.at(ev.from).adv_td > n.store.head_td())
    request_headers(n);
  else
    n.syncing = false;
}

Transaction Simulator::device_reading_tx(const std::string& device, int64_t forced_temp,
                                         bool use_fixture, json* detail) {
  DeviceState& d = devices.at(device);
  uint64_t time_s = now_ms / 1000;
  int64_t temp = forced_temp;
  if (use_fixture) {
    auto row = d.cfg.fixture.find(time_s);
    if (row != d.cfg.fixture.end()) {
      temp = row->second;
    } else {
      int64_t span = 2 * d.cfg.jitter_centi + 1;
      temp = d.cfg.base_centi + int64_t(d.rng.next_u64() % uint64_t(span)) -
             d.cfg.jitter_centi;
    }
  }
  SensorRecord rec{device, time_s, temp, d.next_seq};
  const std::string& target = d.cfg.contract.empty() ? contract : d.cfg.contract;
  Transaction tx = make_sensor_tx(device, target, rec, d.next_seq);
  d.next_seq += 1;
  if (detail) {
    (*detail)["device"] = device;
    (*detail)["seq"] = rec.seq;
    (*detail)["temperature_centi"] = temp;
    (*detail)["reading_time"] = time_s;
    (*detail)["tx"] = tx_hash(tx).short_hex();
  }
  return tx;
}

void Simulator::handle_sensor_tick(const SimEvent& ev) {
  NodeSim& host = nodes.at(ev.to);
  json d;
  Transaction tx = device_reading_tx(ev.device, 0, true, &d);
  log.emit(now_ms, host.node_id, "SensorTick", std::move(d));
  send_transaction(host, tx);

  DeviceState& dev = devices.at(ev.device);
  SimEvent next;
  next.kind = SimEvent::Kind::SensorTick;
  next.to = dev.cfg.node;
  next.device = ev.device;
  push_at(now_ms + dev.cfg.interval_s * 1000, std::move(next));
}

void Simulator::handle_send_tx(const SimEvent& ev) {
  NodeSim& n = nodes.at(ev.to);
  json d;
  Transaction tx = device_reading_tx(ev.device, ev.temp_centi, false, &d);
  log.emit(now_ms, n.node_id, "send_tx", std::move(d));
  send_transaction(n, tx);
}

void Simulator::handle_tamper(const SimEvent& ev) {
  NodeSim& n = nodes.at(ev.to);
  TamperReceipt rcpt = tamper_store(n.store, ev.tamper, contract, n.rng.next_u64());

  json d;
  d["target"] = ev.to;
  d["field"] = rcpt.field;
  d["old"] = rcpt.old_value;
  d["new"] = rcpt.new_value;
  d["old_hash"] = rcpt.old_hash.short_hex();
  d["new_hash"] = rcpt.new_hash.short_hex();
  if (rcpt.applied) d["height"] = n.store.block(rcpt.new_hash).header.height;
  d["reseal"] = rcpt.reseal_note;
  d["claimed_td_delta"] = ev.tamper.claimed_td_delta;
  d["announce"] = ev.tamper.announce;
  std::optional<std::string> err;
  if (!rcpt.applied) err = rcpt.error;
  log.emit(now_ms, n.node_id, "TamperAction", std::move(d), err);
  if (!rcpt.applied) return;

  tampered_hashes_.push_back(rcpt.new_hash);
  tampered_nodes_.push_back(ev.to);
  ever_tampered_.insert(ev.to);
  n.store.compromised = true;
  redraw_mining(n);

  if (ev.tamper.announce && n.store.has_block(rcpt.new_hash))
    broadcast_block(n, n.store.block(rcpt.new_hash),
                    n.store.total_difficulty(rcpt.new_hash));
}

void Simulator::handle_light_tamper(const SimEvent& ev) {
  NodeSim& n = nodes.at(ev.to);
  LightTamperReceipt rcpt;
  uint64_t network_head = 0;
  for (const auto& [id, node] : nodes)
    network_head = std::max(network_head, node.store.head_height());
  uint64_t forged_height = ev.light_tamper.forged_height != 0
                               ? ev.light_tamper.forged_height
                               : network_head + ev.light_tamper.forged_ahead;
  if (n.role != Role::Light) {
    rcpt.error = "PreconditionFailed: target is not a light node";
  } else if (forged_height <= network_head) {
    rcpt.error = "PreconditionFailed: forged height not above network head";
  } else {
    rcpt = forge_light_headers(n.store, forged_height, ev.light_tamper.budget,
                               n.rng.next_u64());
  }

  json d;
  d["target"] = ev.to;
  d["forged_height"] = forged_height;
  d["headers_built"] = rcpt.headers_built;
  d["final_td"] = td_str(rcpt.final_td);
  std::optional<std::string> err;
  if (!rcpt.applied) err = rcpt.error;
  log.emit(now_ms, n.node_id, "TamperAction", std::move(d), err);
  if (!rcpt.applied) return;

  ever_tampered_.insert(ev.to);
  n.store.compromised = true;
  n.isolated = true;
}

void Simulator::handle_light_fetch(const SimEvent& ev) {
  NodeSim& n = nodes.at(ev.to);
  const PeerRecord* peer = select_sync_peer(n);
  if (peer) {
    log.emit(now_ms, n.node_id, "light_fetch",
             json{{"result", "sync"}, {"peer", peer->peer_id}});
    start_sync(n, peer->peer_id);
    return;
  }
  TotalDifficulty local = n.store.head_td();
  TotalDifficulty best = 0;
  for (const auto& [pid, p] : n.peers)
    if (!p.bad && p.adv_td > best) best = p.adv_td;
  if (local > best) {
    json d;
    d["wanted"] = "fetch";
    d["local_td"] = td_str(local);
    d["best_peer_td"] = td_str(best);
    log.emit(now_ms, n.node_id, "no_suitable_peer", std::move(d));
  } else {
    log.emit(now_ms, n.node_id, "light_fetch", json{{"result", "up_to_date"}});
  }
}

void Simulator::upload_tamper_log(NodeSim& n, const TamperLog& f) {
  ByteString encoded = encode_tamper_log(f);
  Hash256 content = sha256(encoded);
  if (n.uploaded_logs.count(content)) return;
  if (!n.store.light && has_tamper_log(n.store.canonical_state(), contract, content))
    return;
  n.uploaded_logs.insert(content);

  Transaction tx;
  tx.sender = n.node_id;
  tx.contract = contract;
  tx.payload = tamper_log_payload(encoded);
  tx.seq = n.own_next_seq++;
  tx.gas = FIXED_TX_GAS;

  size_t recipients = send_transaction(n, tx);
  json d;
  d["tx"] = tx_hash(tx).short_hex();
  d["log_hash"] = content.short_hex();
  d["field"] = f.field;
  d["recipients"] = recipients;
  log.emit(now_ms, n.node_id, "tamper_log_upload", std::move(d));
}

std::vector<const NodeSim*> Simulator::full_nodes() const {
  std::vector<const NodeSim*> out;
  for (const auto& [id, n] : nodes)
    if (n.role != Role::Light) out.push_back(&n);
  return out;
}

bool Simulator::converged_full_nodes() const {
  std::optional<Hash256> head;
  for (const NodeSim* n : full_nodes()) {
    if (ever_tampered_.count(n->node_id)) continue;
    if (!head) {
      head = n->store.head;
    } else if (*head != n->store.head) {
      return false;
    }
  }
  return true;
}

} // namespace chainsim
