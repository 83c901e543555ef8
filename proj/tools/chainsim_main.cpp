// Command-line runner: executes one scenario config (or a seed sweep),
// writes events.jsonl and summary.json, and reports assertion verdicts.
// Exit codes: 0 pass, 1 assertion failure, 2 bad config or I/O trouble.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "chainsim/scenario.hpp"

namespace fs = std::filesystem;
using namespace chainsim;

namespace {

struct SeedRange {
  uint64_t first = 0;
  uint64_t last = 0;
};

SeedRange parse_seed_range(const std::string& s) {
  size_t dots = s.find("..");
  if (dots == std::string::npos)
    throw ConfigError("--seeds wants A..B, got " + s);
  SeedRange r;
  try {
    r.first = std::stoull(s.substr(0, dots));
    r.last = std::stoull(s.substr(dots + 2));
  } catch (const std::exception&) {
    throw ConfigError("--seeds wants numeric bounds, got " + s);
  }
  if (r.last < r.first) throw ConfigError("--seeds range is backwards: " + s);
  return r;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

void write_artifacts(const ScenarioOutcome& outcome, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "events.jsonl", outcome.events_jsonl);
  write_file(dir / "summary.json", outcome.summary.dump(2) + "\n");
}

void print_outcome(const ScenarioOutcome& outcome) {
  std::cout << "scenario " << outcome.name << " seed " << outcome.seed << "\n";
  for (const AssertionResult& a : outcome.assertions)
    std::cout << "  [" << (a.pass ? "PASS" : "FAIL") << "] " << a.check
              << (a.pass ? "" : "  " + a.detail.dump()) << "\n";
  std::cout << (outcome.assertions_pass ? "PASS" : "FAIL") << "\n";
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic tamper-resistance network simulator"};
  std::string config_path;
  std::string out_dir;
  std::string seeds_arg;
  uint64_t seed = 0;
  uint64_t until_ms = 0;
  bool check_assertions = true;
  app.add_option("--config", config_path, "Scenario config (JSON)")->required();
  auto* seed_opt = app.add_option("--seed", seed, "Override the config's seed");
  auto* until_opt = app.add_option("--until", until_ms, "Override the run horizon (ms)");
  app.add_option("--out", out_dir, "Directory for events.jsonl and summary.json");
  app.add_option("--seeds", seeds_arg, "Run a seed sweep A..B (inclusive)");
  app.add_flag("--assert,!--no-assert", check_assertions,
               "Evaluate assertions and fail on a miss (default on)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    json cfg = load_scenario_file(config_path);
    std::string base_dir = fs::absolute(config_path).parent_path().string();

    ScenarioOverrides overrides;
    if (*seed_opt) overrides.seed = seed;
    if (*until_opt) overrides.until_ms = until_ms;

    bool all_pass = true;
    if (!seeds_arg.empty()) {
      SeedRange range = parse_seed_range(seeds_arg);
      size_t wins = 0;
      size_t runs = 0;
      for (uint64_t s = range.first; s <= range.last; ++s) {
        ScenarioOverrides o = overrides;
        o.seed = s;
        ScenarioOutcome outcome = run_scenario(cfg, o, base_dir);
        print_outcome(outcome);
        if (!out_dir.empty())
          write_artifacts(outcome, fs::path(out_dir) / ("seed-" + std::to_string(s)));
        runs += 1;
        if (outcome.assertions_pass) wins += 1;
        all_pass = all_pass && outcome.assertions_pass;
      }
      std::cout << "sweep: " << wins << "/" << runs << " seeds passed\n";
    } else {
      ScenarioOutcome outcome = run_scenario(cfg, overrides, base_dir);
      print_outcome(outcome);
      if (!out_dir.empty()) write_artifacts(outcome, fs::path(out_dir));
      all_pass = outcome.assertions_pass;
    }
    if (check_assertions && !all_pass) return 1;
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
