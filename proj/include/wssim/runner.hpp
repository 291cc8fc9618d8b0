#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wssim/metrics.hpp"
#include "wssim/scenario.hpp"

namespace wssim {

// CLI exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

MetricsReport run_scenario(const Scenario& scenario, uint64_t seed,
                           const std::string& base_dir = "");

struct RunOptions {
    std::vector<uint64_t> seeds;  // empty = scenario's own seed
    std::string out_dir;          // empty = no files, reports only
    bool strict = false;
    std::optional<Fidelity> fidelity;  // overrides the scenario policy
    unsigned threads = 0;              // 0 = hardware concurrency
};

struct RunOutcome {
    int exit_code = kExitOk;
    std::string error;
    std::vector<MetricsReport> reports;
};

// Load, validate and run a scenario over all requested seeds (independent
// workers, merged in seed order). Writes per-seed report.csv /
// handoffs.csv / report.json plus aggregate.json / aggregate.csv when
// out_dir is given.
RunOutcome run_command(const std::string& scenario_path, const RunOptions& options);

}  // namespace wssim
