#pragma once

#include "ambiplan/env.hpp"
#include "ambiplan/errors.hpp"
#include "ambiplan/planner.hpp"
#include "ambiplan/serialize.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ambiplan {

enum class ExperimentKind { waypoint, bounds };

/// One solver family and its hyperparameter grid. Exactly one grid is used,
/// chosen by the strategy: epsilon_ratios (adaptive), k_values (k_best),
/// p_values (threshold); `none` has a single cell.
struct SolverSpec {
    std::string name;
    StrategyKind strategy = StrategyKind::adaptive;
    std::vector<double> epsilon_ratios;
    std::vector<std::size_t> k_values;
    std::vector<double> p_values;
};

/// One fully specified grid cell.
struct SolverCell {
    std::string solver;
    StrategyKind strategy = StrategyKind::none;
    /// epsilon ratio, K or p_thresh; 0 for `none`.
    double param = 0.0;

    [[nodiscard]] std::string label() const;
};

struct BoundsSettings {
    std::vector<double> epsilon_ratios{0.0, 0.1, 0.3, 0.5};
    /// Observation samples per tree node at each depth; the last entry repeats.
    std::vector<std::size_t> samples_per_node{8, 2, 1};
    /// Receding-horizon steps timed per trial for the plan_ms column.
    std::size_t episode_steps = 8;
    /// Fixed simulation count for the timed planning calls.
    std::size_t plan_simulations = 200;
    std::size_t reward_state_samples = 16;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::waypoint;
    Preset preset = Preset::waypoint_course;
    WorldOverrides overrides;
    /// Base planner settings; strategy and its parameter come from each cell.
    PlannerConfig planner;
    std::vector<SolverSpec> solvers;
    std::size_t trials = 10;
    /// Episode length; the preset default when unset.
    std::optional<std::size_t> steps;
    std::uint64_t seed = 0;
    std::filesystem::path output = "results";
    std::size_t execution_cap = 4096;
    /// When false every wall-clock field is written as 0 and the CSV is byte-reproducible
    /// (provided planning runs on a simulation count).
    bool record_timing = true;
    /// Worker threads; 0 reads AMBIPLAN_WORKERS and falls back to the hardware count.
    std::size_t workers = 0;
    /// Write one JSON-lines trace per waypoint trial under `output/traces`.
    bool traces = false;
    /// Include belief snapshots in the traces.
    bool trace_snapshots = false;
    BoundsSettings bounds;

    /// Throws ConfigError naming the offending key.
    void validate() const;
    /// Every (solver, parameter) cell in config order.
    [[nodiscard]] std::vector<SolverCell> cells() const;
    /// Planner settings for one cell and trial; the epsilon ratio is scaled by |V_min|.
    [[nodiscard]] PlannerConfig planner_for(const SolverCell& cell, std::size_t trial, std::size_t horizon,
                                            double r_max) const;
};

/// Parses the YAML experiment schema documented in the README.
ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// max(|V_min|, |V_max|) for rewards in [-r_max, 0] summed over depths 0..T.
double value_scale(std::size_t horizon_T, double r_max);

/// Per-trial seed shared by every solver cell.
std::uint64_t trial_seed(std::uint64_t base, std::size_t trial);

struct Stat {
    double mean = 0.0;
    /// Sample standard deviation over sqrt(n); 0 for n < 2.
    double se = 0.0;
    std::size_t n = 0;
};

Stat summarize(const std::vector<double>& xs);
double median(std::vector<double> xs);
/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct SweepFiles {
    std::filesystem::path csv;
    std::filesystem::path summary;
};

/// Runs every (cell, trial) job on a worker pool and writes the per-step (or
/// per-trial for the bounds experiment) CSV and the JSON summary.
SweepFiles run_sweep(const ExperimentConfig& config);

/// Summary aggregates recomputed from a CSV written by run_sweep.
Json aggregate_csv(ExperimentKind kind, std::istream& csv);

/// Reads a summary file; throws IoError on unreadable or malformed input.
Json load_summary(const std::filesystem::path& path);

/// Table-1-shaped success table for waypoint summaries and a Fig-3-shaped
/// listing for bounds summaries.
void report(const Json& summary, std::ostream& out);

}  // namespace ambiplan
