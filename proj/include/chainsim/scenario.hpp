#pragma once

// Scenario runner: loads a JSON config describing topology, devices,
// scheduled injections and end-of-run assertions, executes it with the
// deterministic simulator (or the majority-attack race) and reports a
// verdict plus artifacts. Config grammar in docs/config.md.

#include "chainsim/netsim.hpp"

#include <optional>
#include <string>
#include <vector>

namespace chainsim {

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

struct ScenarioOverrides {
  std::optional<uint64_t> seed;
  std::optional<uint64_t> until_ms;
};

struct AssertionResult {
  std::string check;
  bool pass = false;
  json detail;
};

struct ScenarioOutcome {
  std::string name;
  uint64_t seed = 0;
  bool assertions_pass = true;
  std::vector<AssertionResult> assertions;
  std::string events_jsonl;
  json summary;
};

// Parses the file as JSON. Throws ConfigError on IO or syntax errors.
json load_scenario_file(const std::string& path);

// Runs one scenario to completion. base_dir resolves relative fixture
// paths (pass the config file's directory). Throws ConfigError on
// structural problems; assertion failures set assertions_pass instead.
ScenarioOutcome run_scenario(const json& config, const ScenarioOverrides& overrides,
                             const std::string& base_dir);

// Fixture rows: "device time_s temperature_centi", '#' comments and
// blank lines skipped. Returns per-device (time -> reading) tables.
std::map<std::string, std::map<uint64_t, int64_t>> parse_fixture(
    const std::string& text);

} // namespace chainsim
