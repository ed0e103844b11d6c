#include "ambiplan/errors.hpp"
#include "ambiplan/experiment.hpp"
#include "ambiplan/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <optional>

namespace {

enum ExitCode : int { kOk = 0, kConfig = 1, kIo = 2, kVerification = 3 };

}  // namespace

int main(int argc, char** argv) {
    using namespace ambiplan;
    CLI::App app{"Receding-horizon planning under ambiguous data association"};
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    std::optional<double> time_budget_ms;
    std::optional<std::string> out_dir;

    auto* run = app.add_subcommand("run", "Run an experiment sweep from a YAML config");
    std::string config_path;
    bool traces = false;
    run->add_option("config", config_path, "Experiment config file")->required();
    run->add_option("--seed", seed, "Override the base seed");
    run->add_option("--time-budget-ms", time_budget_ms, "Wall-clock budget per plan; replaces any simulation count");
    run->add_option("--out", out_dir, "Output directory");
    run->add_flag("--traces", traces, "Write a JSON-lines trace per waypoint trial");

    auto* rep = app.add_subcommand("report", "Print tables from a sweep summary");
    std::string summary_path;
    rep->add_option("summary", summary_path, "summary.json written by run")->required();

    auto* ver = app.add_subcommand("verify", "Exhaustive inequality checks on random tiny instances");
    std::size_t sweep_size = 200;
    ver->add_option("--sweep-size", sweep_size, "Instances per family")->check(CLI::PositiveNumber);
    ver->add_option("--seed", seed, "Sweep seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*run) {
            ExperimentConfig config = load_config(config_path);
            if (seed) config.seed = *seed;
            if (time_budget_ms) {
                if (!(*time_budget_ms > 0.0)) throw ConfigError("flag '--time-budget-ms': must be positive");
                config.planner.time_budget_s = *time_budget_ms / 1000.0;
                config.planner.max_simulations.reset();
            }
            if (out_dir) config.output = *out_dir;
            if (traces) config.traces = true;
            const SweepFiles files = run_sweep(config);
            std::cout << "wrote " << files.csv.string() << " and " << files.summary.string() << "\n\n";
            report(load_summary(files.summary), std::cout);
        } else if (*rep) {
            report(load_summary(summary_path), std::cout);
        } else if (*ver) {
            const auto results = verify_all(sweep_size, std::cout, seed.value_or(0));
            const bool ok = std::all_of(results.begin(), results.end(), [](const FamilyResult& r) { return r.ok(); });
            std::cout << (ok ? "all families passed" : "verification failed") << '\n';
            return ok ? kOk : kVerification;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    }
    return kOk;
}
