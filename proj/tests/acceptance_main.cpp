// Release gate: every check below prints exactly one PASS/FAIL line
// and the binary exits nonzero if any fail. The checks cover the full
// surface end to end: validation variants and their order, seal tamper
// invalidation, fork-choice agreement with a brute-force oracle, the
// bundled network scenarios against their golden logs, the recovery
// demo, the majority-attack threshold sweep, and byte-identical replay.

#include "chainsim/scenario.hpp"
#include "chainsim/tamper.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace chainsim;
using namespace chainsim::testutil;

namespace {

int g_failures = 0;

void report(int idx, const std::string& name, bool pass, const std::string& note) {
  if (!pass) g_failures += 1;
  std::printf("[%s] %d. %s%s%s\n", pass ? "PASS" : "FAIL", idx, name.c_str(),
              note.empty() ? "" : " -- ", note.c_str());
  std::fflush(stdout);
}

class Stopwatch {
public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

std::string fmt_secs(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1fs", s);
  return buf;
}

// ---------------------------------------------------------------- 1.
// Every validation error variant fires on a purpose-built block, and a
// block carrying all faults at once sheds them in pipeline order.

Block resealed(const ChainStore& store, Block b, uint64_t rng_seed = 7) {
  return seal(store, std::move(b), rng_seed);
}

std::string import_error(ChainStore& store, const Block& b) {
  ImportResult r = store.import_block(b);
  if (r.kind != ImportResult::Kind::Rejected) return "accepted";
  return r.error->to_string();
}

bool check_validation_variants(std::string& note) {
  std::ostringstream why;
  ChainStore store = fresh_store(20);
  grow(store, {sensor_tx("dev-1", "lab", 2100, 0)});
  grow(store);

  int hits = 0;
  auto expect = [&](const std::string& got, const std::string& want,
                    const std::string& label) {
    if (got == want) {
      hits += 1;
    } else {
      why << label << ": want " << want << " got " << got << "; ";
    }
  };

  // KnownBlock: the head again.
  expect(import_error(store, store.head_block()), "KnownBlock", "known");

  // UnknownParent: sealed block pointing nowhere.
  {
    Block b = next_block(store);
    b.header.parent_hash = sha256("nowhere");
    b = resealed(store, std::move(b));
    expect(import_error(store, b), "UnknownParent", "unknown-parent");
  }

  // MissingParentState: the parent block is stored (header synced) but
  // its post-state is not, so the child cannot execute.
  {
    ChainStore scratch = fresh_store(20);
    grow(scratch, {sensor_tx("dev-1", "lab", 2100, 0)});
    grow(scratch);
    Block orphan = next_block(scratch, {}, 0, 99);
    scratch.import_block(orphan);
    Block child = next_block(scratch);

    Hash256 oh = block_hash(orphan.header);
    store.blocks[oh] = orphan;
    store.td[oh] = store.total_difficulty(orphan.header.parent_hash) +
                   orphan.header.difficulty;
    expect(import_error(store, child), "MissingParentState", "missing-state");
    store.blocks.erase(oh);
    store.td.erase(oh);
  }

  // InvalidHeader, all five faults.
  {
    Block b = next_block(store);
    b.header.height += 1;
    expect(import_error(store, resealed(store, std::move(b))),
           "InvalidHeader:BadHeight", "height");

    b = next_block(store);
    b.header.timestamp = store.head_block().header.timestamp;
    expect(import_error(store, resealed(store, std::move(b))),
           "InvalidHeader:BadTimestamp", "timestamp");

    b = next_block(store);
    b.header.difficulty += 1;
    expect(import_error(store, resealed(store, std::move(b))),
           "InvalidHeader:BadDifficulty", "difficulty");

    b = next_block(store);
    b.header.gas_used = b.header.gas_limit + 1;
    expect(import_error(store, resealed(store, std::move(b))),
           "InvalidHeader:BadGas", "gas-over-limit");

    b = next_block(store);
    b.header.mix_digest.digest[0] ^= 0x01;
    expect(import_error(store, b), "InvalidHeader:BadSeal", "seal");
  }

  // InvalidUncles: three bound junk uncles.
  {
    Block b = next_block(store);
    Header junk;
    junk.height = 1;
    b.uncles = {junk, junk, junk};
    b.uncles[1].nonce = 1;
    b.uncles[2].nonce = 2;
    b.header.uncle_root = uncle_list_hash(b.uncles);
    expect(import_error(store, resealed(store, std::move(b))),
           "InvalidUncles:TooManyUncles", "uncles");
  }

  // Execution mismatches, one field at a time.
  std::vector<Transaction> txs = {sensor_tx("dev-3", "lab", 2200, 0)};
  {
    Block b = next_block(store, txs);
    b.header.gas_used += 1;
    expect(import_error(store, resealed(store, std::move(b))), "GasUsedMismatch",
           "gas-used");

    b = next_block(store, txs);
    b.header.bloom.bits[3] ^= 0xff;
    expect(import_error(store, resealed(store, std::move(b))), "BloomMismatch",
           "bloom");

    b = next_block(store, txs);
    b.header.tx_root.digest[0] ^= 0x40;
    expect(import_error(store, resealed(store, std::move(b))), "TxRootMismatch",
           "tx-root");

    b = next_block(store, txs);
    b.header.receipt_root.digest[0] ^= 0x40;
    expect(import_error(store, resealed(store, std::move(b))), "ReceiptRootMismatch",
           "receipt-root");

    b = next_block(store, txs);
    b.header.state_root.digest[0] ^= 0x40;
    expect(import_error(store, resealed(store, std::move(b))), "StateRootMismatch",
           "state-root");
  }

  // Short-circuit order: start with every fault present, repair them
  // one at a time, and require each repair to expose the next error.
  {
    Block good = next_block(store, txs);
    Header junk;
    junk.height = 1;

    Block b = good;
    b.header.parent_hash = sha256("missing");
    b.header.height = good.header.height + 1;
    b.header.timestamp = store.head_block().header.timestamp;
    b.header.difficulty = good.header.difficulty + 3;
    b.header.gas_used = b.header.gas_limit + 1;
    b.uncles = {junk, junk, junk};
    b.uncles[1].nonce = 1;
    b.uncles[2].nonce = 2;
    b.header.uncle_root = uncle_list_hash(b.uncles);
    b.header.bloom.bits[0] ^= 0xff;
    b.header.tx_root.digest[0] ^= 0x01;
    b.header.receipt_root.digest[0] ^= 0x01;
    b.header.state_root.digest[0] ^= 0x01;

    auto step = [&](const std::string& want, const std::string& label) {
      expect(import_error(store, resealed(store, b)), want, "order:" + label);
    };

    step("UnknownParent", "parent");
    b.header.parent_hash = good.header.parent_hash;
    step("InvalidHeader:BadHeight", "height");
    b.header.height = good.header.height;
    step("InvalidHeader:BadTimestamp", "timestamp");
    b.header.timestamp = good.header.timestamp;
    step("InvalidHeader:BadDifficulty", "difficulty");
    b.header.difficulty = good.header.difficulty;
    step("InvalidHeader:BadGas", "gas-limit");
    b.header.gas_used = good.header.gas_used + 1;
    {
      Block sealed_ok = resealed(store, b);
      sealed_ok.header.mix_digest.digest[0] ^= 0x01;
      expect(import_error(store, sealed_ok), "InvalidHeader:BadSeal", "order:seal");
    }
    step("InvalidUncles:TooManyUncles", "uncles");
    b.uncles.clear();
    b.header.uncle_root = good.header.uncle_root;
    step("GasUsedMismatch", "gas-used");
    b.header.gas_used = good.header.gas_used;
    step("BloomMismatch", "bloom");
    b.header.bloom = good.header.bloom;
    step("TxRootMismatch", "tx-root");
    b.header.tx_root = good.header.tx_root;
    step("ReceiptRootMismatch", "receipt-root");
    b.header.receipt_root = good.header.receipt_root;
    step("StateRootMismatch", "state-root");
    b.header.state_root = good.header.state_root;

    ImportResult fin = store.import_block(resealed(store, b));
    if (fin.kind == ImportResult::Kind::Rejected) {
      why << "order:clean block rejected " << fin.error->to_string() << "; ";
    } else {
      hits += 1;
    }
  }

  if (!why.str().empty()) {
    note = why.str();
    return false;
  }
  note = std::to_string(hits) + " probes: 10 variants plus the full order walk";
  return true;
}

// ---------------------------------------------------------------- 2.
// Sealed headers at difficulty 2^16: honest seals all verify, and 1000
// single-field tampers all fail.

bool check_pow_tampers(std::string& note) {
  const int kHeaders = 50;
  const int kTampersPer = 20;
  PowParams pp;

  std::mt19937_64 rng(0x5eed5eed);
  auto rand_hash = [&] {
    Hash256 h;
    for (auto& byte : h.digest) byte = uint8_t(rng());
    return h;
  };

  int honest_ok = 0;
  int tampered_ok = 0;
  for (int i = 0; i < kHeaders; ++i) {
    Header h;
    h.parent_hash = rand_hash();
    h.uncle_root = rand_hash();
    h.state_root = rand_hash();
    h.tx_root = rand_hash();
    h.receipt_root = rand_hash();
    for (auto& byte : h.bloom.bits) byte = uint8_t(rng());
    h.difficulty = Difficulty(1) << 16;
    h.height = rng() % 100;
    h.gas_limit = DEFAULT_GAS_LIMIT;
    h.gas_used = rng() % DEFAULT_GAS_LIMIT;
    h.timestamp = rng() % 1'000'000;

    EpochSeed seed = epoch_seed_for_height(h.height, pp);
    MineOutcome out = mine(h, seed, uint64_t(1) << 40, rng());
    if (out.status != MineStatus::Found) {
      note = "seal search exhausted";
      return false;
    }
    h.nonce = out.nonce;
    h.mix_digest = out.mix_digest;
    if (verify_pow(h, seed)) honest_ok += 1;

    for (int t = 0; t < kTampersPer; ++t) {
      Header m = h;
      uint64_t delta = rng() | 1; // nonzero
      switch (rng() % 13) {
        case 0: m.parent_hash.digest[rng() % 32] ^= uint8_t(delta); break;
        case 1: m.uncle_root.digest[rng() % 32] ^= uint8_t(delta); break;
        case 2: m.state_root.digest[rng() % 32] ^= uint8_t(delta); break;
        case 3: m.tx_root.digest[rng() % 32] ^= uint8_t(delta); break;
        case 4: m.receipt_root.digest[rng() % 32] ^= uint8_t(delta); break;
        case 5: m.bloom.bits[rng() % 32] ^= uint8_t(delta); break;
        case 6: m.difficulty += delta % 65535 + 1; break;
        case 7: m.height ^= delta; break;
        case 8: m.gas_limit ^= delta; break;
        case 9: m.gas_used ^= delta; break;
        case 10: m.timestamp ^= delta; break;
        case 11: m.nonce ^= delta; break;
        case 12: m.mix_digest.digest[rng() % 32] ^= uint8_t(delta); break;
      }
      if (verify_pow(m, seed)) tampered_ok += 1;
    }
  }

  note = std::to_string(honest_ok) + "/" + std::to_string(kHeaders) +
         " honest verified, " + std::to_string(tampered_ok) + "/" +
         std::to_string(kHeaders * kTampersPer) + " tampers passed";
  return honest_ok == kHeaders && tampered_ok == 0;
}

// ---------------------------------------------------------------- 3.
// Random block DAGs: import_block's head equals the brute-force
// maximal-td pick, first-seen winning ties.

bool check_fork_choice_oracle(std::string& note) {
  std::mt19937_64 rng(0xf02c'20260816ULL);
  const int kRounds = 200;

  for (int round = 0; round < kRounds; ++round) {
    ChainStore store = fresh_store(1280);
    std::vector<Hash256> inserted = {store.head};
    std::map<Hash256, TotalDifficulty> oracle_td;
    oracle_td[store.head] = store.head_td();

    int blocks = 4 + int(rng() % 17); // 4..20
    for (int i = 0; i < blocks; ++i) {
      const Hash256 parent = inserted[rng() % inserted.size()];
      const Header& ph = store.header(parent);

      Block b;
      b.header.parent_hash = parent;
      b.header.height = ph.height + 1;
      b.header.timestamp = ph.timestamp + 1 + rng() % 25;
      b.header.difficulty = calc_difficulty(ph, b.header.timestamp, store.pow);
      b.header.gas_limit = store.gas_limit;
      b.header.uncle_root = uncle_list_hash({});
      b.header.tx_root = tx_merkle_root({});
      b.header.receipt_root = receipt_merkle_root({});
      b.header.state_root = store.post_states.at(parent).root();
      b = seal(store, std::move(b), rng());

      ImportResult r = store.import_block(b);
      if (r.kind == ImportResult::Kind::Rejected) {
        note = "round " + std::to_string(round) +
               " rejected: " + r.error->to_string();
        return false;
      }
      inserted.push_back(r.hash);
      oracle_td[r.hash] = oracle_td.at(parent) + b.header.difficulty;
    }

    // Brute force: max td, insertion order breaking ties.
    Hash256 best = inserted[0];
    for (const Hash256& h : inserted)
      if (oracle_td.at(h) > oracle_td.at(best)) best = h;

    if (store.head != best) {
      note = "round " + std::to_string(round) + ": head " +
             store.head.short_hex() + " oracle " + best.short_hex();
      return false;
    }
    if (store.head_td() != oracle_td.at(best)) {
      note = "round " + std::to_string(round) + ": td mismatch";
      return false;
    }
  }
  note = std::to_string(kRounds) + " DAGs agree";
  return true;
}

// ------------------------------------------------------------ 4-7, 9.
// Bundled scenarios: run each config, compare against the golden log,
// and require the config's own assertions to hold.

struct BundledRun {
  bool ran = false;
  std::string error;
  ScenarioOutcome outcome;
};

std::string scenario_path(const std::string& name) {
  return std::string(CHAINSIM_SOURCE_DIR) + "/scenarios/" + name + ".json";
}

std::string golden_path(const std::string& name) {
  return std::string(CHAINSIM_SOURCE_DIR) + "/tests/golden/" + name + ".events.jsonl";
}

BundledRun run_bundled(const std::string& name) {
  BundledRun r;
  try {
    json cfg = load_scenario_file(scenario_path(name));
    std::string base_dir = std::string(CHAINSIM_SOURCE_DIR) + "/scenarios";
    r.outcome = run_scenario(cfg, {}, base_dir);
    r.ran = true;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// One scenario's contribution to a criterion: assertions hold and the
// log matches its golden byte for byte.
bool scenario_ok(const BundledRun& r, const std::string& name, std::string& why) {
  if (!r.ran) {
    why += name + ": " + r.error + "; ";
    return false;
  }
  if (!r.outcome.assertions_pass) {
    for (const AssertionResult& a : r.outcome.assertions)
      if (!a.pass) why += name + ": assertion " + a.check + " failed; ";
    return false;
  }
  auto golden = read_file(golden_path(name));
  if (!golden) {
    why += name + ": golden log missing; ";
    return false;
  }
  if (*golden != r.outcome.events_jsonl) {
    why += name + ": log differs from golden; ";
    return false;
  }
  return true;
}

bool log_contains(const BundledRun& r, const std::string& needle) {
  return r.ran && r.outcome.events_jsonl.find(needle) != std::string::npos;
}

// ---------------------------------------------------------------- 8.
// Majority-attack threshold: deterministic seed sweep, depth 2.

bool check_majority_threshold(std::string& note) {
  ChainStore base = fresh_store(16);
  grow(base);
  grow(base, {sensor_tx("dev-1", "lab", 3400, 0)});
  grow(base);

  const std::vector<double> powers = {0.1, 0.3, 0.5, 0.7, 0.9};
  const int kSeeds = 50;
  std::vector<int> wins(powers.size(), 0);

  for (size_t pi = 0; pi < powers.size(); ++pi) {
    for (int s = 0; s < kSeeds; ++s) {
      uint64_t seed = derive_seed(2026, "acceptance-majority",
                                  std::to_string(s) + ":" + std::to_string(pi));
      MajorityOutcome out = majority_attack(base, "lab", "dev-1", 0, -990,
                                            powers[pi], 2, 200, seed);
      if (out.attacker_won) wins[pi] += 1;
    }
  }

  std::ostringstream rates;
  for (size_t pi = 0; pi < powers.size(); ++pi)
    rates << wins[pi] << (pi + 1 < powers.size() ? "/" : "");

  bool low_ok = wins[1] * 10 <= kSeeds;  // <= 10% at power 0.3
  bool high_ok = wins[3] * 10 >= kSeeds * 9; // >= 90% at power 0.7
  bool monotone = true;
  for (size_t pi = 1; pi < powers.size(); ++pi)
    if (wins[pi] < wins[pi - 1]) monotone = false;

  note = "wins " + rates.str() + " of " + std::to_string(kSeeds) +
         " across powers 0.1..0.9";
  return low_ok && high_ok && monotone;
}

} // namespace

int main() {
  // Criteria 1-3: property checks on the core.
  {
    Stopwatch sw;
    std::string note;
    bool ok = check_validation_variants(note);
    double s = sw.seconds();
    report(1, "validation variants and short-circuit order", ok && s < 10.0,
           note + ", " + fmt_secs(s) + " (limit 10s)");
  }
  {
    Stopwatch sw;
    std::string note;
    bool ok = check_pow_tampers(note);
    double s = sw.seconds();
    report(2, "seal tampering never verifies", ok && s < 30.0,
           note + ", " + fmt_secs(s) + " (limit 30s)");
  }
  {
    Stopwatch sw;
    std::string note;
    bool ok = check_fork_choice_oracle(note);
    double s = sw.seconds();
    report(3, "fork choice equals brute-force oracle", ok && s < 30.0,
           note + ", " + fmt_secs(s) + " (limit 30s)");
  }

  // Bundled scenarios, one run each, reused across criteria 4-7.
  const std::vector<std::string> bundled = {"s1-low",       "s1-high", "s2-low",
                                            "s2-high",      "s3-light", "demo-recovery",
                                            "majority-attack"};
  std::map<std::string, BundledRun> runs;
  double demo_seconds = 0;
  for (const std::string& name : bundled) {
    Stopwatch sw;
    runs[name] = run_bundled(name);
    if (name == "demo-recovery") demo_seconds = sw.seconds();
  }

  {
    std::string why;
    bool ok = scenario_ok(runs["s1-low"], "s1-low", why) &
              scenario_ok(runs["s1-high"], "s1-high", why);
    report(4, "tampered block loses fork choice in both td arms", ok,
           why.empty() ? "s1-low + s1-high assertions and goldens hold" : why);
  }
  {
    std::string why;
    bool ok = scenario_ok(runs["s2-low"], "s2-low", why) &
              scenario_ok(runs["s2-high"], "s2-high", why);
    if (!log_contains(runs["s2-low"], "InvalidUncles")) {
      ok = false;
      why += "s2-low log lacks InvalidUncles; ";
    }
    if (!log_contains(runs["s2-high"], "InvalidHeader:BadSeal")) {
      ok = false;
      why += "s2-high log lacks BadSeal; ";
    }
    if (!log_contains(runs["s2-low"], "\"kind\":\"demote\"") ||
        !log_contains(runs["s2-high"], "\"kind\":\"demote\"")) {
      ok = false;
      why += "missing demotion event; ";
    }
    report(5, "hacked miner is rejected and demoted in both arms", ok,
           why.empty() ? "uncle and seal rejections logged, miner silenced" : why);
  }
  {
    std::string why;
    bool ok = scenario_ok(runs["s3-light"], "s3-light", why);
    if (!log_contains(runs["s3-light"], "no_suitable_peer")) {
      ok = false;
      why += "log lacks no_suitable_peer; ";
    }
    if (!log_contains(runs["s3-light"], "stranded_tx")) {
      ok = false;
      why += "log lacks stranded_tx; ";
    }
    report(6, "hacked light node strands, then recovers", ok,
           why.empty() ? "isolation, stranded tx, reorg and mining all present" : why);
  }
  {
    std::string why;
    bool ok = scenario_ok(runs["demo-recovery"], "demo-recovery", why);
    if (ok && demo_seconds >= 60.0) {
      ok = false;
      why += "runtime over 60s; ";
    }
    report(7, "tampered record recovers and the tamper log survives", ok,
           why.empty() ? "3400 restored everywhere, log on chain, " +
                             fmt_secs(demo_seconds) + " (limit 60s)"
                       : why);
  }
  {
    Stopwatch sw;
    std::string note;
    bool ok = check_majority_threshold(note);
    double s = sw.seconds();
    report(8, "majority attack needs majority power", ok && s < 300.0,
           note + ", " + fmt_secs(s) + " (limit 300s)");
  }
  {
    std::string why;
    bool ok = true;
    for (const std::string& name : bundled) {
      const BundledRun& first = runs[name];
      if (!first.ran) {
        ok = false;
        why += name + ": " + first.error + "; ";
        continue;
      }
      BundledRun second = run_bundled(name);
      if (!second.ran || second.outcome.events_jsonl != first.outcome.events_jsonl) {
        ok = false;
        why += name + ": replay differs; ";
      }
      auto golden = read_file(golden_path(name));
      if (!golden || *golden != first.outcome.events_jsonl) {
        ok = false;
        why += name + ": golden mismatch; ";
      }
    }
    report(9, "every bundled scenario replays byte-identically", ok,
           why.empty() ? "7 scenarios x 2 runs, all logs stable and golden" : why);
  }

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all 9 criteria hold\n");
  return 0;
}
