#include "chainsim/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace chainsim {

json load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + " is not valid JSON: " + e.what());
  }
}

std::map<std::string, std::map<uint64_t, int64_t>> parse_fixture(
    const std::string& text) {
  std::map<std::string, std::map<uint64_t, int64_t>> out;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    lineno += 1;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::string device;
    if (!(row >> device)) continue; // blank
    uint64_t time_s = 0;
    int64_t temp = 0;
    if (!(row >> time_s >> temp))
      throw ConfigError("fixture: line " + std::to_string(lineno) +
                        ": expected 'device time_s temperature_centi'");
    std::string extra;
    if (row >> extra)
      throw ConfigError("fixture: line " + std::to_string(lineno) + ": trailing field");
    out[device][time_s] = temp;
  }
  return out;
}

namespace {

const json& need(const json& o, const std::string& where, const char* key) {
  if (!o.is_object() || !o.contains(key))
    throw ConfigError("config: " + where + " is missing \"" + key + "\"");
  return o.at(key);
}

uint64_t need_u64(const json& o, const std::string& where, const char* key) {
  const json& v = need(o, where, key);
  // Accept any integer representation as long as the value is not
  // negative; the json library stores small literals as signed.
  if (v.is_number_unsigned()) return v.get<uint64_t>();
  if (v.is_number_integer() && v.get<int64_t>() >= 0)
    return uint64_t(v.get<int64_t>());
  throw ConfigError("config: " + where + "." + key + " must be a non-negative integer");
}

int64_t need_i64(const json& o, const std::string& where, const char* key) {
  const json& v = need(o, where, key);
  if (!v.is_number_integer())
    throw ConfigError("config: " + where + "." + key + " must be an integer");
  return v.get<int64_t>();
}

std::string need_str(const json& o, const std::string& where, const char* key) {
  const json& v = need(o, where, key);
  if (!v.is_string())
    throw ConfigError("config: " + where + "." + key + " must be a string");
  return v.get<std::string>();
}

uint64_t opt_u64(const json& o, const std::string& where, const char* key,
                 uint64_t fallback) {
  if (!o.is_object() || !o.contains(key)) return fallback;
  return need_u64(o, where, key);
}

int64_t opt_i64(const json& o, const std::string& where, const char* key,
                int64_t fallback) {
  if (!o.is_object() || !o.contains(key)) return fallback;
  return need_i64(o, where, key);
}

std::string opt_str(const json& o, const std::string& where, const char* key,
                    const std::string& fallback) {
  if (!o.is_object() || !o.contains(key)) return fallback;
  return need_str(o, where, key);
}

bool opt_bool(const json& o, const std::string& where, const char* key, bool fallback) {
  if (!o.is_object() || !o.contains(key)) return fallback;
  const json& v = o.at(key);
  if (!v.is_boolean())
    throw ConfigError("config: " + where + "." + key + " must be a boolean");
  return v.get<bool>();
}

void reject_unknown(const json& o, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  if (!o.is_object()) throw ConfigError("config: " + where + " must be an object");
  for (const auto& [key, value] : o.items()) {
    bool ok = std::any_of(allowed.begin(), allowed.end(),
                          [&](const char* a) { return key == a; });
    if (!ok) throw ConfigError("config: " + where + " has unknown key \"" + key + "\"");
  }
}

PowParams parse_pow(const json& cfg) {
  PowParams pow;
  if (!cfg.contains("pow")) return pow;
  const json& p = cfg.at("pow");
  reject_unknown(p, "pow", {"target_spacing_s", "min_difficulty", "epoch_blocks"});
  pow.target_spacing_s = opt_u64(p, "pow", "target_spacing_s", pow.target_spacing_s);
  pow.min_difficulty = Difficulty(opt_u64(p, "pow", "min_difficulty", 16));
  pow.epoch_blocks = opt_u64(p, "pow", "epoch_blocks", pow.epoch_blocks);
  if (pow.target_spacing_s == 0 || pow.epoch_blocks == 0)
    throw ConfigError("config: pow values must be positive");
  return pow;
}

Block parse_genesis(const json& cfg, uint64_t* gas_limit_out) {
  const json& g = need(cfg, "scenario", "genesis");
  reject_unknown(g, "genesis", {"difficulty", "gas_limit", "timestamp"});
  uint64_t difficulty = need_u64(g, "genesis", "difficulty");
  if (difficulty == 0) throw ConfigError("config: genesis.difficulty must be positive");
  uint64_t gas_limit = opt_u64(g, "genesis", "gas_limit", DEFAULT_GAS_LIMIT);
  *gas_limit_out = gas_limit;
  return make_genesis(Difficulty(difficulty), gas_limit,
                      opt_u64(g, "genesis", "timestamp", 0));
}

Role parse_role(const std::string& s, const std::string& where) {
  if (s == "miner") return Role::Miner;
  if (s == "endpoint") return Role::Endpoint;
  if (s == "light") return Role::Light;
  throw ConfigError("config: " + where + ": unknown role \"" + s + "\"");
}

ResealMode parse_reseal(const std::string& s, const std::string& where) {
  if (s == "none") return ResealMode::None;
  if (s == "fake_nonce") return ResealMode::FakeNonce;
  if (s == "honest_repow") return ResealMode::HonestRepow;
  if (s == "rebuild_descendants") return ResealMode::RebuildDescendants;
  throw ConfigError("config: " + where + ": unknown reseal mode \"" + s + "\"");
}

// Entries matching kind/node and, when given, every key of `detail`.
size_t count_events(const EventLog& log, const std::string& kind,
                    const std::string& node, const json* detail) {
  size_t n = 0;
  for (const json& e : log.entries()) {
    if (e.at("kind") != kind) continue;
    if (!node.empty() && e.at("node") != node) continue;
    if (detail) {
      bool all = true;
      for (const auto& [k, v] : detail->items())
        if (!e.at("detail").contains(k) || e.at("detail").at(k) != v) {
          all = false;
          break;
        }
      if (!all) continue;
    }
    n += 1;
  }
  return n;
}

struct NetworkWorld {
  Simulator* sim = nullptr;
  std::map<std::string, std::string> device_contract;

  std::vector<const NodeSim*> select_nodes(const std::string& which) const {
    std::vector<const NodeSim*> out;
    for (const auto& [id, n] : sim->nodes) {
      if (n.role == Role::Light) continue;
      if (which == "honest_full" && sim->tampered_node_set().count(id)) continue;
      out.push_back(&n);
    }
    return out;
  }

  std::string contract_for(const std::string& device) const {
    auto it = device_contract.find(device);
    if (it != device_contract.end() && !it->second.empty()) return it->second;
    return sim->contract;
  }
};

AssertionResult eval_network_assertion(const json& a, const NetworkWorld& w,
                                       const EventLog& log) {
  const std::string check = need_str(a, "assertion", "check");
  AssertionResult res;
  res.check = check;
  Simulator& sim = *w.sim;

  if (check == "record_equals") {
    std::string device = need_str(a, check, "device");
    uint64_t seq = need_u64(a, check, "seq");
    int64_t expected = need_i64(a, check, "temperature_centi");
    std::string which = opt_str(a, check, "nodes", "honest_full");
    json per_node;
    res.pass = true;
    for (const NodeSim* n : w.select_nodes(which)) {
      auto rec = read_record(n->store.canonical_state(), w.contract_for(device),
                             device, seq);
      per_node[n->node_id] = rec ? json(rec->temperature) : json("absent");
      if (!rec || rec->temperature != expected) res.pass = false;
    }
    res.detail = json{{"expected", expected}, {"found", per_node}};
    return res;
  }

  if (check == "tampered_noncanonical") {
    res.pass = true;
    json bad = json::array();
    for (const NodeSim* n : w.select_nodes("honest_full"))
      for (const Hash256& h : sim.tampered_hashes())
        if (n->store.is_canonical(h)) {
          res.pass = false;
          bad.push_back(json{{"node", n->node_id}, {"hash", h.short_hex()}});
        }
    res.detail = json{{"violations", bad}};
    return res;
  }

  if (check == "converged") {
    res.pass = sim.converged_full_nodes();
    json heads;
    for (const NodeSim* n : w.select_nodes("honest_full"))
      heads[n->node_id] = n->store.head.short_hex();
    res.detail = json{{"heads", heads}};
    return res;
  }

  if (check == "event_present" || check == "event_absent") {
    std::string kind = need_str(a, check, "kind");
    std::string node = opt_str(a, check, "node", "");
    const json* detail = a.contains("detail") ? &a.at("detail") : nullptr;
    size_t count = count_events(log, kind, node, detail);
    if (check == "event_present") {
      uint64_t min_count = opt_u64(a, check, "min_count", 1);
      res.pass = count >= min_count;
    } else {
      res.pass = count == 0;
    }
    res.detail = json{{"kind", kind}, {"count", count}};
    return res;
  }

  if (check == "tamper_log_on_all") {
    std::string field = need_str(a, check, "field");
    std::string contract = opt_str(a, check, "contract", sim.contract);
    std::string want_old = opt_str(a, check, "old", "");
    std::string want_new = opt_str(a, check, "new", "");
    res.pass = true;
    json per_node;
    for (const NodeSim* n : w.select_nodes("honest_full")) {
      auto logs = list_tamper_logs(n->store.canonical_state(), contract);
      bool hit = std::any_of(logs.begin(), logs.end(), [&](const TamperLog& t) {
        return t.field == field &&
               (want_old.empty() || t.old_str() == want_old) &&
               (want_new.empty() || t.new_str() == want_new);
      });
      per_node[n->node_id] = hit;
      if (!hit) res.pass = false;
    }
    res.detail = json{{"field", field}, {"found", per_node}};
    return res;
  }

  if (check == "stranded_tx_mined_within") {
    uint64_t blocks = need_u64(a, check, "blocks");
    std::set<std::string> stranded;
    std::set<std::string> mined;
    uint64_t worst = 0;
    bool within = true;
    for (const json& e : log.entries()) {
      if (e.at("kind") == "stranded_tx") stranded.insert(e.at("detail").at("tx"));
      if (e.at("kind") == "stranded_tx_mined") {
        mined.insert(e.at("detail").at("tx"));
        if (!e.at("detail").contains("blocks_after_recovery")) {
          within = false;
          continue;
        }
        uint64_t gap = e.at("detail").at("blocks_after_recovery");
        worst = std::max(worst, gap);
        if (gap > blocks) within = false;
      }
    }
    bool all_mined = std::includes(mined.begin(), mined.end(), stranded.begin(),
                                   stranded.end());
    res.pass = !stranded.empty() && all_mined && within;
    res.detail = json{{"stranded", stranded.size()},
                      {"mined", mined.size()},
                      {"worst_gap", worst}};
    return res;
  }

  if (check == "recovery_within_blocks") {
    uint64_t blocks = need_u64(a, check, "blocks");
    res.pass = true;
    json cases = json::array();
    const auto& entries = log.entries();
    for (size_t i = 0; i < entries.size(); ++i) {
      const json& e = entries[i];
      if (e.at("kind") != "TamperAction" || e.contains("error")) continue;
      if (!e.at("detail").contains("height")) continue;
      uint64_t h0 = e.at("detail").at("height");
      std::string node = e.at("node");
      std::optional<uint64_t> recovered;
      for (size_t j = i + 1; j < entries.size(); ++j)
        if (entries[j].at("kind") == "reorg" && entries[j].at("node") == node) {
          recovered = entries[j].at("detail").at("height").get<uint64_t>();
          break;
        }
      bool ok = recovered && *recovered >= h0 && *recovered - h0 <= blocks;
      if (!ok) res.pass = false;
      cases.push_back(json{{"node", node},
                           {"tampered_height", h0},
                           {"recovered_height", recovered ? json(*recovered) : json()},
                           {"ok", ok}});
    }
    if (cases.empty()) res.pass = false;
    res.detail = json{{"cases", cases}};
    return res;
  }

  if (check == "uncle_included") {
    res.pass = true;
    json per_node;
    std::set<Hash256> tampered(sim.tampered_hashes().begin(),
                               sim.tampered_hashes().end());
    for (const NodeSim* n : w.select_nodes("honest_full")) {
      bool hit = false;
      for (const auto& [height, h] : n->store.canonical)
        for (const Header& u : n->store.block(h).uncles)
          if (tampered.count(block_hash(u))) hit = true;
      per_node[n->node_id] = hit;
      if (!hit) res.pass = false;
    }
    res.detail = json{{"found", per_node}};
    return res;
  }

  if (check == "peer_demoted") {
    std::string peer = need_str(a, check, "peer");
    res.pass = true;
    json per_node;
    for (const NodeSim* n : w.select_nodes("honest_full")) {
      if (n->node_id == peer) continue;
      auto it = n->peers.find(peer);
      bool demoted = it != n->peers.end() && it->second.bad;
      per_node[n->node_id] = demoted;
      if (!demoted) res.pass = false;
    }
    res.detail = json{{"peer", peer}, {"demoted_at", per_node}};
    return res;
  }

  if (check == "quiet_after_demotion") {
    std::string peer = need_str(a, check, "peer");
    std::optional<uint64_t> last_demote;
    for (const json& e : log.entries())
      if (e.at("kind") == "demote" && e.at("detail").at("peer") == peer)
        last_demote = e.at("time").get<uint64_t>();
    size_t late = 0;
    static const std::set<std::string> delivery_kinds = {
        "NewBlockMsg", "NewTxMsg", "GetHeaders", "Headers", "GetBodies", "Bodies"};
    if (last_demote)
      for (const json& e : log.entries())
        if (e.at("node") == peer && delivery_kinds.count(e.at("kind")) &&
            e.at("time").get<uint64_t>() > *last_demote)
          late += 1;
    res.pass = last_demote.has_value() && late == 0;
    res.detail = json{{"peer", peer},
                      {"last_demote_ms", last_demote ? json(*last_demote) : json()},
                      {"deliveries_after", late}};
    return res;
  }

  throw ConfigError("config: unknown assertion check \"" + check + "\"");
}

ScenarioOutcome run_network_scenario(const json& cfg, uint64_t seed,
                                     const ScenarioOverrides& overrides,
                                     const std::string& base_dir) {
  ScenarioOutcome out;
  out.name = need_str(cfg, "scenario", "name");
  out.seed = seed;

  uint64_t until_ms = overrides.until_ms ? *overrides.until_ms
                                         : need_u64(cfg, "scenario", "until_ms");

  Simulator sim(seed);
  sim.pow = parse_pow(cfg);
  Block genesis = parse_genesis(cfg, &sim.gas_limit);
  sim.latency_ms = opt_u64(cfg, "scenario", "latency_ms", 50);
  sim.max_seal_attempts = opt_u64(cfg, "scenario", "max_seal_attempts", 1 << 22);
  sim.contract = opt_str(cfg, "scenario", "contract", "lab");

  const json& nodes = need(cfg, "scenario", "nodes");
  if (!nodes.is_array() || nodes.empty())
    throw ConfigError("config: nodes must be a non-empty array");
  for (const json& n : nodes) {
    reject_unknown(n, "node", {"id", "role", "power"});
    std::string id = need_str(n, "node", "id");
    Role role = parse_role(need_str(n, "node", "role"), "node " + id);
    double power = 0.0;
    if (n.contains("power")) {
      if (!n.at("power").is_number())
        throw ConfigError("config: node " + id + ".power must be a number");
      power = n.at("power").get<double>();
    }
    if (power < 0 || power > 1)
      throw ConfigError("config: node " + id + ".power must be in [0, 1]");
    if (role != Role::Miner && power != 0)
      throw ConfigError("config: node " + id + " is not a miner but has power");
    if (sim.nodes.count(id)) throw ConfigError("config: duplicate node id " + id);
    sim.add_node(id, role, power);
  }
  sim.set_genesis(genesis);

  std::map<std::string, std::map<uint64_t, int64_t>> fixture;
  if (cfg.contains("fixture_file")) {
    std::string rel = need_str(cfg, "scenario", "fixture_file");
    std::string path = rel.front() == '/' ? rel : base_dir + "/" + rel;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open fixture " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    fixture = parse_fixture(buf.str());
  }

  NetworkWorld world;
  world.sim = &sim;

  if (cfg.contains("devices")) {
    for (const json& d : cfg.at("devices")) {
      reject_unknown(d, "device",
                     {"id", "node", "contract", "interval_s", "base_centi",
                      "jitter_centi"});
      DeviceConfig dc;
      dc.device_id = need_str(d, "device", "id");
      dc.node = need_str(d, "device", "node");
      dc.contract = opt_str(d, "device", "contract", "");
      dc.interval_s = opt_u64(d, "device", "interval_s", 1800);
      if (dc.interval_s == 0)
        throw ConfigError("config: device " + dc.device_id + " interval must be > 0");
      dc.base_centi = opt_i64(d, "device", "base_centi", 2100);
      dc.jitter_centi = opt_i64(d, "device", "jitter_centi", 150);
      if (!sim.nodes.count(dc.node))
        throw ConfigError("config: device " + dc.device_id + " on unknown node " +
                          dc.node);
      if (sim.devices.count(dc.device_id))
        throw ConfigError("config: duplicate device id " + dc.device_id);
      if (auto rows = fixture.find(dc.device_id); rows != fixture.end())
        dc.fixture = rows->second;
      world.device_contract[dc.device_id] = dc.contract;
      sim.add_device(dc);
    }
  }

  if (cfg.contains("tampers")) {
    for (const json& t : cfg.at("tampers")) {
      reject_unknown(t, "tamper",
                     {"at_ms", "node", "height", "hash", "record", "edit",
                      "new_temperature_centi", "reseal", "budget",
                      "claimed_td_delta", "announce"});
      TamperSpec spec;
      spec.target_node = need_str(t, "tamper", "node");
      if (!sim.nodes.count(spec.target_node))
        throw ConfigError("config: tamper targets unknown node " + spec.target_node);
      if (t.contains("height")) spec.height = need_u64(t, "tamper", "height");
      if (t.contains("hash")) spec.hash = Hash256::from_hex(need_str(t, "tamper", "hash"));
      if (t.contains("record")) {
        const json& r = t.at("record");
        reject_unknown(r, "tamper.record", {"device", "seq"});
        spec.record = std::pair{need_str(r, "tamper.record", "device"),
                                need_u64(r, "tamper.record", "seq")};
      }
      spec.edit_path = need_str(t, "tamper", "edit");
      spec.new_temperature_centi = opt_i64(t, "tamper", "new_temperature_centi", 0);
      spec.reseal = parse_reseal(opt_str(t, "tamper", "reseal", "none"), "tamper");
      spec.budget = opt_u64(t, "tamper", "budget", 0);
      spec.claimed_td_delta = opt_i64(t, "tamper", "claimed_td_delta", 0);
      spec.announce = opt_bool(t, "tamper", "announce", false);
      sim.schedule_tamper(need_u64(t, "tamper", "at_ms"), spec);
    }
  }

  if (cfg.contains("light_tampers")) {
    for (const json& t : cfg.at("light_tampers")) {
      reject_unknown(t, "light_tamper",
                     {"at_ms", "node", "forged_height", "forged_ahead", "budget"});
      LightTamperSpec spec;
      spec.target_node = need_str(t, "light_tamper", "node");
      if (!sim.nodes.count(spec.target_node))
        throw ConfigError("config: light_tamper targets unknown node " +
                          spec.target_node);
      spec.forged_height = opt_u64(t, "light_tamper", "forged_height", 0);
      spec.forged_ahead = opt_u64(t, "light_tamper", "forged_ahead", 0);
      if (spec.forged_height == 0 && spec.forged_ahead == 0)
        throw ConfigError("config: light_tamper needs forged_height or forged_ahead");
      spec.budget = need_u64(t, "light_tamper", "budget");
      sim.schedule_light_tamper(need_u64(t, "light_tamper", "at_ms"), spec);
    }
  }

  if (cfg.contains("actions")) {
    for (const json& a : cfg.at("actions")) {
      reject_unknown(a, "action",
                     {"at_ms", "kind", "node", "device", "temperature_centi"});
      std::string kind = need_str(a, "action", "kind");
      std::string node = need_str(a, "action", "node");
      if (!sim.nodes.count(node))
        throw ConfigError("config: action on unknown node " + node);
      uint64_t at = need_u64(a, "action", "at_ms");
      if (kind == "light_fetch") {
        sim.schedule_light_fetch(at, node);
      } else if (kind == "send_tx") {
        std::string device = need_str(a, "action", "device");
        if (!sim.devices.count(device))
          throw ConfigError("config: action uses unknown device " + device);
        sim.schedule_send_tx(at, node, device,
                             need_i64(a, "action", "temperature_centi"));
      } else {
        throw ConfigError("config: unknown action kind \"" + kind + "\"");
      }
    }
  }

  sim.run(until_ms);

  if (cfg.contains("assertions"))
    for (const json& a : cfg.at("assertions")) {
      AssertionResult r = eval_network_assertion(a, world, sim.log);
      out.assertions_pass = out.assertions_pass && r.pass;
      out.assertions.push_back(std::move(r));
    }

  out.events_jsonl = sim.log.to_jsonl();

  json node_summary;
  for (const auto& [id, n] : sim.nodes) {
    json s;
    s["role"] = role_name(n.role);
    s["height"] = n.store.head_height();
    s["head"] = n.store.head.short_hex();
    s["td"] = n.store.head_td().str();
    s["compromised"] = n.store.compromised;
    s["isolated"] = n.isolated;
    json bad = json::array();
    for (const auto& [pid, p] : n.peers)
      if (p.bad) bad.push_back(pid);
    s["bad_peers"] = std::move(bad);
    if (n.role != Role::Light) {
      json fields = json::array();
      for (const TamperLog& t : list_tamper_logs(n.store.canonical_state(), sim.contract))
        fields.push_back(t.field);
      s["tamper_log_fields"] = std::move(fields);
    }
    node_summary[id] = std::move(s);
  }
  json asserts = json::array();
  for (const AssertionResult& r : out.assertions)
    asserts.push_back(json{{"check", r.check}, {"pass", r.pass}, {"detail", r.detail}});
  out.summary = json{{"name", out.name},      {"kind", "network"},
                     {"seed", seed},          {"until_ms", until_ms},
                     {"events", sim.log.entries().size()},
                     {"nodes", node_summary}, {"assertions", asserts},
                     {"pass", out.assertions_pass}};
  return out;
}

ScenarioOutcome run_majority_scenario(const json& cfg, uint64_t seed) {
  ScenarioOutcome out;
  out.name = need_str(cfg, "scenario", "name");
  out.seed = seed;

  PowParams pow = parse_pow(cfg);
  uint64_t gas_limit = 0;
  Block genesis = parse_genesis(cfg, &gas_limit);
  std::string contract = opt_str(cfg, "scenario", "contract", "lab");

  ChainStore base;
  base.pow = pow;
  base.gas_limit = gas_limit;
  base.init_genesis(genesis);

  EventLog log;
  std::mt19937_64 seal_rng(derive_seed(seed, "prefix-seal", out.name));

  const json& prefix = need(cfg, "scenario", "prefix");
  if (!prefix.is_array() || prefix.empty())
    throw ConfigError("config: prefix must be a non-empty array of blocks");
  for (const json& pb : prefix) {
    reject_unknown(pb, "prefix block", {"txs"});
    Block b;
    const Block& parent = base.head_block();
    b.header.parent_hash = base.head;
    b.header.height = parent.header.height + 1;
    b.header.timestamp = parent.header.timestamp + pow.target_spacing_s;
    b.header.difficulty = calc_difficulty(parent.header, b.header.timestamp, pow);
    b.header.gas_limit = gas_limit;
    b.header.uncle_root = uncle_list_hash({});
    if (pb.contains("txs"))
      for (const json& t : pb.at("txs")) {
        reject_unknown(t, "prefix tx",
                       {"device", "seq", "temperature_centi", "reading_time"});
        SensorRecord rec;
        rec.device_id = need_str(t, "prefix tx", "device");
        rec.seq = need_u64(t, "prefix tx", "seq");
        rec.temperature = need_i64(t, "prefix tx", "temperature_centi");
        rec.reading_time = need_u64(t, "prefix tx", "reading_time");
        b.transactions.push_back(make_sensor_tx(rec.device_id, contract, rec, rec.seq));
      }
    ApplyResult exec = apply_transactions(base.post_states.at(base.head),
                                          b.transactions, gas_limit);
    b.header.state_root = exec.state.root();
    b.header.tx_root = tx_merkle_root(b.transactions);
    b.header.receipt_root = receipt_merkle_root(exec.receipts);
    b.header.bloom = exec.bloom;
    b.header.gas_used = exec.gas_used;
    MineOutcome mo = mine(b.header, epoch_seed_for_height(b.header.height, pow),
                          uint64_t(1) << 30, seal_rng());
    if (mo.status != MineStatus::Found)
      throw ConfigError("config: prefix sealing exhausted");
    b.header.nonce = mo.nonce;
    b.header.mix_digest = mo.mix_digest;
    ImportResult r = base.import_block(b);
    if (r.kind != ImportResult::Kind::ExtendedCanonical)
      throw ConfigError("config: prefix block rejected");
    json d;
    d["height"] = b.header.height;
    d["hash"] = r.hash.short_hex();
    d["td"] = base.head_td().str();
    d["txs"] = b.transactions.size();
    log.emit(b.header.timestamp * 1000, "honest", "BlockFound", std::move(d));
  }

  const json& atk = need(cfg, "scenario", "attack");
  reject_unknown(atk, "attack",
                 {"device", "record_seq", "forged_temperature_centi", "attacker_power",
                  "fork_depth", "horizon_blocks"});
  std::string device = need_str(atk, "attack", "device");
  uint64_t record_seq = need_u64(atk, "attack", "record_seq");
  int64_t forged = need_i64(atk, "attack", "forged_temperature_centi");
  if (!atk.contains("attacker_power") || !atk.at("attacker_power").is_number())
    throw ConfigError("config: attack.attacker_power must be a number");
  double power = atk.at("attacker_power").get<double>();
  if (power < 0 || power > 1)
    throw ConfigError("config: attack.attacker_power must be in [0, 1]");
  uint64_t fork_depth = need_u64(atk, "attack", "fork_depth");
  uint64_t horizon = need_u64(atk, "attack", "horizon_blocks");

  MajorityOutcome mo;
  try {
    mo = majority_attack(base, contract, device, record_seq, forged, power, fork_depth,
                         horizon, derive_seed(seed, "attack", out.name), &log);
  } catch (const Error& e) {
    throw ConfigError(std::string("config: attack setup failed: ") + e.what());
  }

  auto final_rec = read_record(mo.honest_final.canonical_state(), contract, device,
                               record_seq);

  if (cfg.contains("assertions"))
    for (const json& a : cfg.at("assertions")) {
      std::string check = need_str(a, "assertion", "check");
      AssertionResult r;
      r.check = check;
      if (check == "attacker_won") {
        bool expected = opt_bool(a, check, "expected", true);
        r.pass = mo.attacker_won == expected;
        r.detail = json{{"expected", expected}, {"actual", mo.attacker_won}};
      } else if (check == "record_equals") {
        int64_t expected = need_i64(a, check, "temperature_centi");
        r.pass = final_rec && final_rec->temperature == expected;
        r.detail = json{{"expected", expected},
                        {"found", final_rec ? json(final_rec->temperature)
                                            : json("absent")}};
      } else if (check == "event_present") {
        std::string kind = need_str(a, check, "kind");
        std::string node = opt_str(a, check, "node", "");
        size_t count = count_events(log, kind, node, nullptr);
        r.pass = count >= opt_u64(a, check, "min_count", 1);
        r.detail = json{{"kind", kind}, {"count", count}};
      } else {
        throw ConfigError("config: unknown majority assertion \"" + check + "\"");
      }
      out.assertions_pass = out.assertions_pass && r.pass;
      out.assertions.push_back(std::move(r));
    }

  out.events_jsonl = log.to_jsonl();
  json asserts = json::array();
  for (const AssertionResult& r : out.assertions)
    asserts.push_back(json{{"check", r.check}, {"pass", r.pass}, {"detail", r.detail}});
  out.summary = json{
      {"name", out.name},
      {"kind", "majority_attack"},
      {"seed", seed},
      {"attack",
       json{{"attacker_won", mo.attacker_won},
            {"final_td_gap", mo.final_td_gap.str()},
            {"attacker_blocks", mo.attacker_blocks},
            {"honest_blocks", mo.honest_blocks},
            {"elapsed_ms", mo.elapsed_ms},
            {"final_height", mo.honest_final.head_height()}}},
      {"record", final_rec ? json(final_rec->temperature) : json("absent")},
      {"assertions", asserts},
      {"pass", out.assertions_pass}};
  return out;
}

} // namespace

ScenarioOutcome run_scenario(const json& cfg, const ScenarioOverrides& overrides,
                             const std::string& base_dir) {
  if (!cfg.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown(cfg, "scenario",
                 {"name", "kind", "seed", "contract", "pow", "genesis", "until_ms",
                  "latency_ms", "max_seal_attempts", "nodes", "devices", "fixture_file",
                  "tampers", "light_tampers", "actions", "prefix", "attack",
                  "assertions"});
  std::string kind = opt_str(cfg, "scenario", "kind", "network");
  uint64_t seed = overrides.seed ? *overrides.seed : need_u64(cfg, "scenario", "seed");
  if (kind == "network") return run_network_scenario(cfg, seed, overrides, base_dir);
  if (kind == "majority_attack") return run_majority_scenario(cfg, seed);
  throw ConfigError("config: unknown kind \"" + kind + "\"");
}

} // namespace chainsim
