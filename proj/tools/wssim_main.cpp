#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "wssim/fixtures.hpp"
#include "wssim/plots.hpp"
#include "wssim/runner.hpp"

namespace {

std::vector<uint64_t> parse_seeds(const std::string& spec) {
    // "7" or "1,2,3" or "1..20"
    std::vector<uint64_t> seeds;
    const auto range = spec.find("..");
    if (range != std::string::npos) {
        const uint64_t lo = std::stoull(spec.substr(0, range));
        const uint64_t hi = std::stoull(spec.substr(range + 2));
        for (uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
        return seeds;
    }
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) seeds.push_back(std::stoull(tok));
    }
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wssim - D-OFDM LPWAN simulator over TV white spaces"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = "out", seeds_spec, fidelity_str, figure_str, out_file;
    std::vector<std::string> run_dirs;
    bool strict = false;
    unsigned threads = 0;

    auto* validate = app.add_subcommand("validate", "Parse and validate a scenario file");
    validate->add_option("scenario", scenario_path, "scenario file")->required();
    validate->add_flag("--strict", strict, "reject unknown keys");

    auto* run = app.add_subcommand("run", "Run a scenario over one or more seeds");
    run->add_option("scenario", scenario_path, "scenario file")->required();
    run->add_option("--seed", seeds_spec, "seed, list (1,2,3) or range (1..20)");
    run->add_option("--seeds", seeds_spec, "alias of --seed");
    run->add_option("--out", out_dir, "output directory (default: out)");
    run->add_option("--fidelity", fidelity_str, "analytic|sample|mixed override");
    run->add_option("--threads", threads, "worker threads for the seed sweep");
    run->add_flag("--strict", strict, "reject unknown keys");

    auto* plot = app.add_subcommand("plot", "Aggregate run outputs into plot-ready CSV");
    plot->add_option("--figure", figure_str, "figure family")->required();
    plot->add_option("--out", out_file, "output CSV path (default: stdout)");
    plot->add_option("runs", run_dirs, "run directories (out/<scenario>)")->required();

    auto* fixtures = app.add_subcommand("fixtures", "Write the bundled scenario fixtures");
    fixtures->add_option("--out", out_dir, "target directory (default: out)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            try {
                (void)wssim::load_scenario(scenario_path, strict);
            } catch (const std::exception& e) {
                std::cerr << e.what() << "\n";
                return wssim::kExitValidation;
            }
            std::cout << "ok\n";
            return wssim::kExitOk;
        }

        if (run->parsed()) {
            wssim::RunOptions opt;
            opt.out_dir = out_dir;
            opt.strict = strict;
            opt.threads = threads;
            if (!seeds_spec.empty()) opt.seeds = parse_seeds(seeds_spec);
            if (!fidelity_str.empty()) {
                if (fidelity_str == "analytic") opt.fidelity = wssim::Fidelity::Analytic;
                else if (fidelity_str == "sample") opt.fidelity = wssim::Fidelity::Sample;
                else if (fidelity_str == "mixed") opt.fidelity = wssim::Fidelity::Mixed;
                else {
                    std::cerr << "unknown fidelity '" << fidelity_str << "'\n";
                    return wssim::kExitValidation;
                }
            }
            const auto outcome = wssim::run_command(scenario_path, opt);
            if (outcome.exit_code != wssim::kExitOk) {
                std::cerr << outcome.error << "\n";
                return outcome.exit_code;
            }
            for (const auto& r : outcome.reports) {
                std::cout << r.scenario_name << " seed " << r.seed << ": cdr " << r.mean_cdr
                          << ", per " << r.mean_per << ", energy " << r.total_energy_j << " J, "
                          << r.handoffs.size() << " handoffs\n";
            }
            return wssim::kExitOk;
        }

        if (plot->parsed()) {
            std::vector<wssim::MetricsReport> reports;
            for (const auto& dir : run_dirs) {
                for (const auto& entry :
                     std::filesystem::recursive_directory_iterator(dir)) {
                    if (entry.path().filename() != "report.json") continue;
                    std::ifstream f(entry.path());
                    std::stringstream ss;
                    ss << f.rdbuf();
                    reports.push_back(wssim::report_from_json(ss.str()));
                }
            }
            if (reports.empty()) {
                std::cerr << "no report.json found under the given run directories\n";
                return wssim::kExitValidation;
            }
            const auto csv = wssim::emit_plot_data(reports, wssim::plot_figure_from_name(figure_str));
            if (out_file.empty()) {
                std::cout << csv;
            } else {
                std::ofstream f(out_file);
                f << csv;
            }
            return wssim::kExitOk;
        }

        if (fixtures->parsed()) {
            wssim::write_fixtures(out_dir);
            std::cout << "wrote " << wssim::bundled_fixtures().size() << " fixtures to " << out_dir
                      << "\n";
            return wssim::kExitOk;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return wssim::kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return wssim::kExitRuntime;
    }
    return wssim::kExitOk;
}
