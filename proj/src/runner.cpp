#include "wssim/runner.hpp"
#include <atomic>

#include <filesystem>
#include <fstream>
#include <thread>

#include "wssim/sim_engine.hpp"

namespace wssim {

namespace fs = std::filesystem;

MetricsReport run_scenario(const Scenario& scenario, uint64_t seed, const std::string& base_dir) {
    Simulator sim(scenario, seed, base_dir);
    return sim.run();
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
}

}  // namespace

RunOutcome run_command(const std::string& scenario_path, const RunOptions& options) {
    RunOutcome outcome;

    Scenario scenario;
    try {
        scenario = load_scenario(scenario_path, options.strict);
    } catch (const std::exception& e) {
        outcome.exit_code = kExitValidation;
        outcome.error = e.what();
        return outcome;
    }
    if (options.fidelity) scenario.policy.fidelity = *options.fidelity;
    const std::string base_dir = fs::path(scenario_path).parent_path().string();

    std::vector<uint64_t> seeds = options.seeds;
    if (seeds.empty()) seeds.push_back(scenario.world.seed);

    outcome.reports.resize(seeds.size());
    std::vector<std::string> errors(seeds.size());
    unsigned workers = options.threads ? options.threads : std::thread::hardware_concurrency();
    workers = std::max(1u, std::min<unsigned>(workers, seeds.size()));

    // Seed fan-out: independent simulators, nothing shared but the
    // immutable scenario; reports land in seed order.
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (size_t i = next.fetch_add(1); i < seeds.size(); i = next.fetch_add(1)) {
                try {
                    outcome.reports[i] = run_scenario(scenario, seeds[i], base_dir);
                } catch (const std::exception& e) {
                    errors[i] = e.what();
                }
            }
        });
    }
    for (auto& t : pool) t.join();

    for (const auto& e : errors) {
        if (!e.empty()) {
            outcome.exit_code = kExitRuntime;
            outcome.error = e;
            return outcome;
        }
    }

    if (!options.out_dir.empty()) {
        try {
            const fs::path root = fs::path(options.out_dir) / scenario.name;
            fs::create_directories(root);
            for (size_t i = 0; i < seeds.size(); ++i) {
                const fs::path dir = root / ("seed_" + std::to_string(seeds[i]));
                fs::create_directories(dir);
                write_file(dir / "report.csv", report_csv(outcome.reports[i]));
                write_file(dir / "handoffs.csv", handoffs_csv(outcome.reports[i]));
                write_file(dir / "report.json", report_json(outcome.reports[i]));
            }
            write_file(root / "aggregate.json", aggregate_json(outcome.reports));
            write_file(root / "aggregate.csv", aggregate_csv(outcome.reports));
        } catch (const std::exception& e) {
            outcome.exit_code = kExitRuntime;
            outcome.error = e.what();
        }
    }
    return outcome;
}

}  // namespace wssim
