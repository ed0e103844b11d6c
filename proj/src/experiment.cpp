#include "ambiplan/experiment.hpp"

#include "ambiplan/errors.hpp"
#include "ambiplan/estimators.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace ambiplan {

namespace {

[[noreturn]] void config_fail(const std::string& key, const std::string& what) {
    throw ConfigError("config key '" + key + "': " + what);
}

void check_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
    if (!node.IsMap()) config_fail(where, "expected a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) config_fail(where.empty() ? key : where + "." + key, "unknown key");
    }
}

template <class T>
T scalar(const YAML::Node& node, const std::string& key) {
    if (!node.IsScalar()) config_fail(key, "expected a scalar");
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        config_fail(key, "cannot parse '" + node.Scalar() + "'");
    }
}

std::size_t count(const YAML::Node& node, const std::string& key) {
    const auto v = scalar<long long>(node, key);
    if (v < 0) config_fail(key, "must be non-negative");
    return static_cast<std::size_t>(v);
}

/// Scalars are accepted as one-element lists.
template <class T>
std::vector<T> list(const YAML::Node& node, const std::string& key) {
    std::vector<T> out;
    if (node.IsScalar()) {
        out.push_back(scalar<T>(node, key));
        return out;
    }
    if (!node.IsSequence()) config_fail(key, "expected a list");
    for (std::size_t i = 0; i < node.size(); ++i) out.push_back(scalar<T>(node[i], key + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<std::size_t> count_list(const YAML::Node& node, const std::string& key) {
    std::vector<std::size_t> out;
    for (long long v : list<long long>(node, key)) {
        if (v < 0) config_fail(key, "entries must be non-negative");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

WorldOverrides parse_overrides(const YAML::Node& node) {
    const std::string w = "world.overrides";
    check_keys(node, w,
               {"process_var", "obs_var", "landmark_prior_var", "step_size", "d_max", "waypoint_radius", "start",
                "goal", "num_landmarks", "landmark_separation", "landmark_x", "landmark_offset", "root_hypotheses",
                "root_separation", "root_var", "freeze_landmarks", "sample_landmarks", "horizon", "episode_steps"});
    WorldOverrides o;
    auto real = [&](const char* key, std::optional<double>& field) {
        if (node[key]) field = scalar<double>(node[key], w + "." + key);
    };
    auto integer = [&](const char* key, std::optional<int>& field) {
        if (node[key]) field = scalar<int>(node[key], w + "." + key);
    };
    auto flag = [&](const char* key, std::optional<bool>& field) {
        if (node[key]) field = scalar<bool>(node[key], w + "." + key);
    };
    real("process_var", o.process_var);
    real("obs_var", o.obs_var);
    real("landmark_prior_var", o.landmark_prior_var);
    real("step_size", o.step_size);
    real("d_max", o.d_max);
    real("waypoint_radius", o.waypoint_radius);
    real("landmark_separation", o.landmark_separation);
    real("landmark_x", o.landmark_x);
    real("landmark_offset", o.landmark_offset);
    real("root_separation", o.root_separation);
    real("root_var", o.root_var);
    integer("num_landmarks", o.num_landmarks);
    integer("root_hypotheses", o.root_hypotheses);
    integer("horizon", o.horizon);
    integer("episode_steps", o.episode_steps);
    flag("freeze_landmarks", o.freeze_landmarks);
    flag("sample_landmarks", o.sample_landmarks);
    if (node["start"]) o.start = list<double>(node["start"], w + ".start");
    if (node["goal"]) o.goal = list<double>(node["goal"], w + ".goal");
    return o;
}

void parse_planner(const YAML::Node& node, ExperimentConfig& c) {
    check_keys(node, "planner",
               {"ucb_c", "k_o", "alpha_o", "horizon", "time_budget_ms", "max_simulations", "rollout",
                "reward_samples"});
    PlannerConfig& p = c.planner;
    if (node["ucb_c"]) p.ucb_c = scalar<double>(node["ucb_c"], "planner.ucb_c");
    if (node["k_o"]) p.k_o = scalar<double>(node["k_o"], "planner.k_o");
    if (node["alpha_o"]) p.alpha_o = scalar<double>(node["alpha_o"], "planner.alpha_o");
    if (node["horizon"]) c.overrides.horizon = scalar<int>(node["horizon"], "planner.horizon");
    if (node["time_budget_ms"]) p.time_budget_s = scalar<double>(node["time_budget_ms"], "planner.time_budget_ms") / 1000.0;
    if (node["max_simulations"]) p.max_simulations = count(node["max_simulations"], "planner.max_simulations");
    if (node["reward_samples"]) p.reward_samples = count(node["reward_samples"], "planner.reward_samples");
    if (node["rollout"]) {
        const auto name = scalar<std::string>(node["rollout"], "planner.rollout");
        const auto r = parse_rollout(name);
        if (!r) config_fail("planner.rollout", "unknown rollout '" + name + "'");
        p.rollout = *r;
    }
}

SolverSpec parse_solver(const YAML::Node& node, std::size_t index) {
    const std::string where = "solvers[" + std::to_string(index) + "]";
    check_keys(node, where, {"name", "strategy", "epsilon_ratio", "k", "p_thresh"});
    SolverSpec s;
    if (!node["name"]) config_fail(where + ".name", "missing");
    s.name = scalar<std::string>(node["name"], where + ".name");
    if (!node["strategy"]) config_fail(where + ".strategy", "missing");
    const auto name = scalar<std::string>(node["strategy"], where + ".strategy");
    const auto kind = parse_strategy(name);
    if (!kind) config_fail(where + ".strategy", "unknown strategy '" + name + "'");
    s.strategy = *kind;
    if (node["epsilon_ratio"]) s.epsilon_ratios = list<double>(node["epsilon_ratio"], where + ".epsilon_ratio");
    if (node["k"]) s.k_values = count_list(node["k"], where + ".k");
    if (node["p_thresh"]) s.p_values = list<double>(node["p_thresh"], where + ".p_thresh");
    return s;
}

void parse_bounds(const YAML::Node& node, BoundsSettings& b) {
    check_keys(node, "bounds",
               {"epsilon_ratios", "samples_per_node", "episode_steps", "plan_simulations", "reward_state_samples"});
    if (node["epsilon_ratios"]) b.epsilon_ratios = list<double>(node["epsilon_ratios"], "bounds.epsilon_ratios");
    if (node["samples_per_node"]) b.samples_per_node = count_list(node["samples_per_node"], "bounds.samples_per_node");
    if (node["episode_steps"]) b.episode_steps = count(node["episode_steps"], "bounds.episode_steps");
    if (node["plan_simulations"]) b.plan_simulations = count(node["plan_simulations"], "bounds.plan_simulations");
    if (node["reward_state_samples"])
        b.reward_state_samples = count(node["reward_state_samples"], "bounds.reward_state_samples");
}

std::string format_number(double x) {
    if (x == 0.0) return "0";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

double parse_number(const std::string& s) {
    double x = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw IoError("malformed number '" + s + "' in CSV");
    return x;
}

Json stat_json(const Stat& s) { return Json{{"mean", s.mean}, {"se", s.se}, {"n", s.n}}; }

std::size_t worker_count(std::size_t configured, std::size_t jobs) {
    std::size_t n = configured;
    if (n == 0) {
        if (const char* env = std::getenv("AMBIPLAN_WORKERS")) n = static_cast<std::size_t>(std::strtoul(env, nullptr, 10));
    }
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return std::max<std::size_t>(1, std::min(n, jobs));
}

/// Runs job(i) for i in [0, n) on a pool; the first exception is rethrown after joining.
template <class F>
void parallel_for(std::size_t n, std::size_t workers, F&& job) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                job(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

// ---------------------------------------------------------------------------
// Waypoint experiment rows.

const std::vector<std::string> kWaypointColumns{
    "solver", "strategy", "param", "trial", "seed", "step", "action", "reward", "n_hypotheses", "delta_step",
    "apriori_bound", "hindsight_bound", "plan_ms", "simulations", "active_target", "targets_reached", "n_targets",
    "true_x", "true_y"};

struct WaypointRow {
    std::string solver;
    std::string strategy;
    double param = 0.0;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    StepRecord step;
    std::size_t targets_reached = 0;
    std::size_t n_targets = 0;
};

void write_waypoint_row(std::ostream& out, const WaypointRow& r) {
    const StepRecord& s = r.step;
    out << r.solver << ',' << r.strategy << ',' << format_number(r.param) << ',' << r.trial << ',' << r.seed << ','
        << s.step << ',' << to_string(s.action) << ',' << format_number(s.reward) << ',' << s.n_hypotheses << ','
        << format_number(s.delta_step) << ',' << (s.apriori ? format_number(*s.apriori) : std::string()) << ','
        << format_number(s.hindsight) << ',' << format_number(s.plan_wallclock_ms) << ',' << s.simulations << ','
        << s.active_target << ',' << r.targets_reached << ',' << r.n_targets << ','
        << format_number(s.true_position(0)) << ',' << format_number(s.true_position(1)) << '\n';
}

WaypointRow parse_waypoint_row(const std::vector<std::string>& f) {
    if (f.size() != kWaypointColumns.size()) throw IoError("CSV row has " + std::to_string(f.size()) + " fields");
    WaypointRow r;
    r.solver = f[0];
    r.strategy = f[1];
    r.param = parse_number(f[2]);
    r.trial = static_cast<std::size_t>(parse_number(f[3]));
    r.seed = std::stoull(f[4]);
    StepRecord& s = r.step;
    s.step = static_cast<std::size_t>(parse_number(f[5]));
    const auto a = parse_action(f[6]);
    if (!a) throw IoError("unknown action '" + f[6] + "' in CSV");
    s.action = *a;
    s.reward = parse_number(f[7]);
    s.n_hypotheses = static_cast<std::size_t>(parse_number(f[8]));
    s.delta_step = parse_number(f[9]);
    if (!f[10].empty()) s.apriori = parse_number(f[10]);
    s.hindsight = parse_number(f[11]);
    s.plan_wallclock_ms = parse_number(f[12]);
    s.simulations = static_cast<std::size_t>(parse_number(f[13]));
    s.active_target = static_cast<std::size_t>(parse_number(f[14]));
    r.targets_reached = static_cast<std::size_t>(parse_number(f[15]));
    r.n_targets = static_cast<std::size_t>(parse_number(f[16]));
    s.true_position = Vector{{parse_number(f[17]), parse_number(f[18])}};
    return r;
}

/// Per-cell aggregates; rows must be grouped by cell and trial in run order.
Json aggregate_waypoint(const std::vector<WaypointRow>& rows) {
    struct Acc {
        std::string solver, strategy;
        double param = 0.0;
        std::map<std::size_t, std::vector<const WaypointRow*>> trials;
    };
    std::vector<Acc> cells;
    for (const auto& r : rows) {
        if (cells.empty() || cells.back().solver != r.solver || cells.back().param != r.param ||
            cells.back().strategy != r.strategy)
            cells.push_back({r.solver, r.strategy, r.param, {}});
        cells.back().trials[r.trial].push_back(&r);
    }
    Json out = Json::array();
    for (const auto& c : cells) {
        const std::size_t n_targets = c.trials.begin()->second.front()->n_targets;
        std::vector<std::vector<double>> success(n_targets);
        std::vector<double> returns, lengths, plan_ms, hindsight, hyps;
        std::size_t violations = 0;
        for (const auto& [trial, steps] : c.trials) {
            double ret = 0.0;
            for (const WaypointRow* r : steps) {
                ret += r->step.reward;
                plan_ms.push_back(r->step.plan_wallclock_ms);
                hindsight.push_back(r->step.hindsight);
                hyps.push_back(static_cast<double>(r->step.n_hypotheses));
                if (r->step.apriori && r->step.hindsight > *r->step.apriori + 1e-12) ++violations;
            }
            const std::size_t reached = steps.back()->targets_reached;
            for (std::size_t j = 0; j < n_targets; ++j) success[j].push_back(j < reached ? 1.0 : 0.0);
            returns.push_back(ret);
            lengths.push_back(static_cast<double>(steps.size()));
        }
        Json succ = Json::array();
        for (const auto& s : success) succ.push_back(stat_json(summarize(s)));
        out.push_back({{"solver", c.solver},
                       {"strategy", c.strategy},
                       {"param", c.param},
                       {"trials", c.trials.size()},
                       {"success", succ},
                       {"return", stat_json(summarize(returns))},
                       {"episode_steps", stat_json(summarize(lengths))},
                       {"plan_ms", stat_json(summarize(plan_ms))},
                       {"hindsight_bound", stat_json(summarize(hindsight))},
                       {"n_hypotheses", stat_json(summarize(hyps))},
                       {"bound_violations", violations}});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bounds experiment rows.

const std::vector<std::string> kBoundsColumns{"epsilon", "v_full", "v_pruned", "bound_hi",     "bound_lo",
                                              "plan_ms", "trial",  "seed",     "n_hypotheses", "bound"};

struct BoundsRow {
    double epsilon = 0.0;
    double v_full = 0.0;
    double v_pruned = 0.0;
    double bound = 0.0;
    double plan_ms = 0.0;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    double n_hypotheses = 0.0;
};

void write_bounds_row(std::ostream& out, const BoundsRow& r) {
    out << format_number(r.epsilon) << ',' << format_number(r.v_full) << ',' << format_number(r.v_pruned) << ','
        << format_number(r.v_pruned + r.bound) << ',' << format_number(r.v_pruned - r.bound) << ','
        << format_number(r.plan_ms) << ',' << r.trial << ',' << r.seed << ',' << format_number(r.n_hypotheses) << ','
        << format_number(r.bound) << '\n';
}

BoundsRow parse_bounds_row(const std::vector<std::string>& f) {
    if (f.size() != kBoundsColumns.size()) throw IoError("CSV row has " + std::to_string(f.size()) + " fields");
    BoundsRow r;
    r.epsilon = parse_number(f[0]);
    r.v_full = parse_number(f[1]);
    r.v_pruned = parse_number(f[2]);
    r.plan_ms = parse_number(f[5]);
    r.trial = static_cast<std::size_t>(parse_number(f[6]));
    r.seed = std::stoull(f[7]);
    r.n_hypotheses = parse_number(f[8]);
    r.bound = parse_number(f[9]);
    return r;
}

Json aggregate_bounds(const std::vector<BoundsRow>& rows) {
    std::vector<double> order;
    std::map<double, std::vector<const BoundsRow*>> by_eps;
    for (const auto& r : rows) {
        if (!by_eps.count(r.epsilon)) order.push_back(r.epsilon);
        by_eps[r.epsilon].push_back(&r);
    }
    Json out = Json::array();
    for (double eps : order) {
        std::vector<double> full, pruned, bound, ms, hyps;
        std::size_t violations = 0;
        for (const BoundsRow* r : by_eps[eps]) {
            full.push_back(r->v_full);
            pruned.push_back(r->v_pruned);
            bound.push_back(r->bound);
            ms.push_back(r->plan_ms);
            hyps.push_back(r->n_hypotheses);
            if (std::abs(r->v_full - r->v_pruned) > r->bound + 1e-9) ++violations;
        }
        out.push_back({{"epsilon", eps},
                       {"trials", full.size()},
                       {"v_full", stat_json(summarize(full))},
                       {"v_pruned", stat_json(summarize(pruned))},
                       {"bound", stat_json(summarize(bound))},
                       {"plan_ms", stat_json(summarize(ms))},
                       {"plan_ms_median", median(ms)},
                       {"n_hypotheses", stat_json(summarize(hyps))},
                       {"bound_violations", violations}});
    }
    return out;
}

double bounds_spearman(const std::vector<BoundsRow>& rows) {
    std::vector<double> eps, ms;
    for (const auto& r : rows) {
        eps.push_back(r.epsilon);
        ms.push_back(r.plan_ms);
    }
    return spearman(eps, ms);
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

void write_header(std::ostream& out, const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
}

std::vector<std::size_t> padded_samples(const std::vector<std::size_t>& s, std::size_t horizon) {
    std::vector<std::size_t> out(horizon, s.back());
    std::copy_n(s.begin(), std::min(s.size(), horizon), out.begin());
    return out;
}

BoundsRow run_bounds_trial(const ExperimentConfig& c, double ratio, std::size_t trial) {
    const std::uint64_t seed = trial_seed(c.seed, trial);
    World world = make_world(c.preset, c.overrides, seed);
    const double r_max = world.model.r_max();
    const std::size_t horizon = world.horizon;
    const double scale = value_scale(horizon, r_max);
    const SolverCell cell{"DA-MCTS", StrategyKind::adaptive, ratio};
    PlannerConfig pc = c.planner_for(cell, trial, horizon, r_max);
    const PruningStrategy strategy = pc.resolve(r_max);

    const auto samples = padded_samples(c.bounds.samples_per_node, horizon);
    const Policy policy = greedy_policy(world.model);
    const ObservationTree tree = build_observation_tree(world.root, policy, world.model, strategy, samples, seed);
    const RewardSettings reward{c.bounds.reward_state_samples, mix_seed(seed, 1)};
    const SnEstimate full = sn_expected_reward(world.root, tree, world.model, reward);
    const SnEstimate pruned = sn_expected_reward_pruned(world.root, tree, world.model, strategy, reward);

    BoundsRow row;
    row.epsilon = ratio;
    row.trial = trial;
    row.seed = seed;
    row.v_full = full.value / scale;
    row.v_pruned = pruned.value / scale;
    row.bound = bound_estimate(pruned, horizon, r_max) / scale;

    pc.max_simulations = c.bounds.plan_simulations;
    EpisodeOptions opt;
    opt.n_steps = c.bounds.episode_steps;
    opt.max_execution_hypotheses = c.execution_cap;
    opt.timing = c.record_timing;
    const EpisodeTrace trace = run_episode(world, pc, opt);
    for (const auto& s : trace.steps) {
        row.plan_ms += s.plan_wallclock_ms / static_cast<double>(trace.steps.size());
        row.n_hypotheses += static_cast<double>(s.n_hypotheses) / static_cast<double>(trace.steps.size());
    }
    return row;
}

struct WaypointTrial {
    std::vector<WaypointRow> rows;
    EpisodeTrace trace;
};

WaypointTrial run_waypoint_trial(const ExperimentConfig& c, const SolverCell& cell, std::size_t trial) {
    const std::uint64_t seed = trial_seed(c.seed, trial);
    const World world = make_world(c.preset, c.overrides, seed);
    const PlannerConfig pc = c.planner_for(cell, trial, world.horizon, world.model.r_max());
    EpisodeOptions opt;
    opt.n_steps = c.steps.value_or(world.episode_steps);
    opt.max_execution_hypotheses = c.execution_cap;
    opt.timing = c.record_timing;
    opt.snapshots = c.traces && c.trace_snapshots;
    EpisodeTrace trace = run_episode(world, pc, opt);

    std::vector<WaypointRow> rows;
    for (const auto& s : trace.steps) {
        WaypointRow r;
        r.solver = cell.solver;
        r.strategy = std::string(to_string(cell.strategy));
        r.param = cell.param;
        r.trial = trial;
        r.seed = seed;
        r.step = s;
        r.step.snapshot.reset();
        r.n_targets = trace.reached.size();
        for (int at : trace.reached_at)
            if (at >= 0 && static_cast<std::size_t>(at) <= s.step) ++r.targets_reached;
        rows.push_back(std::move(r));
    }
    if (!c.traces) trace = EpisodeTrace{};
    return {std::move(rows), std::move(trace)};
}

std::string trace_name(const SolverCell& cell, std::size_t trial) {
    std::string name = cell.solver;
    if (cell.strategy != StrategyKind::none) name += "_" + format_number(cell.param);
    for (char& ch : name)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '.' && ch != '-') ch = '_';
    return name + "_trial" + std::to_string(trial) + ".jsonl";
}

Json config_json(const ExperimentConfig& c) {
    return Json{{"experiment", c.kind == ExperimentKind::waypoint ? "waypoint" : "bounds"},
                {"preset", std::string(to_string(c.preset))},
                {"seed", c.seed},
                {"trials", c.trials},
                {"record_timing", c.record_timing},
                {"time_budget_ms", c.planner.time_budget_s * 1000.0},
                {"max_simulations", c.planner.max_simulations ? Json(*c.planner.max_simulations) : Json(nullptr)}};
}

}  // namespace

std::string SolverCell::label() const {
    switch (strategy) {
    case StrategyKind::none: return solver;
    case StrategyKind::adaptive: return solver + " (eps/|V|=" + format_number(param) + ")";
    case StrategyKind::k_best: return solver + " (K=" + format_number(param) + ")";
    case StrategyKind::threshold: return solver + " (p=" + format_number(param) + ")";
    }
    return solver;
}

void ExperimentConfig::validate() const {
    if (trials == 0) config_fail("trials", "must be at least 1");
    if (steps && *steps == 0) config_fail("steps", "must be at least 1");
    if (execution_cap == 0) config_fail("execution_cap", "must be at least 1");
    planner.validate();
    if (kind == ExperimentKind::bounds) {
        if (bounds.epsilon_ratios.empty()) config_fail("bounds.epsilon_ratios", "empty solver grid");
        for (double r : bounds.epsilon_ratios)
            if (!(r >= 0.0) || !std::isfinite(r)) config_fail("bounds.epsilon_ratios", "ratios must be >= 0");
        if (bounds.samples_per_node.empty()) config_fail("bounds.samples_per_node", "must not be empty");
        for (std::size_t s : bounds.samples_per_node)
            if (s == 0) config_fail("bounds.samples_per_node", "entries must be at least 1");
        if (bounds.episode_steps == 0) config_fail("bounds.episode_steps", "must be at least 1");
        if (bounds.plan_simulations == 0) config_fail("bounds.plan_simulations", "must be at least 1");
        return;
    }
    if (solvers.empty()) config_fail("solvers", "empty solver grid");
    std::set<std::string> names;
    for (std::size_t i = 0; i < solvers.size(); ++i) {
        const SolverSpec& s = solvers[i];
        const std::string where = "solvers[" + std::to_string(i) + "]";
        if (s.name.empty() || s.name.find_first_of(",\n\"") != std::string::npos)
            config_fail(where + ".name", "must be non-empty without commas or quotes");
        if (!names.insert(s.name).second) config_fail(where + ".name", "duplicate solver name '" + s.name + "'");
        const bool eps = !s.epsilon_ratios.empty();
        const bool k = !s.k_values.empty();
        const bool p = !s.p_values.empty();
        switch (s.strategy) {
        case StrategyKind::none:
            if (eps || k || p) config_fail(where, "strategy 'none' takes no grid");
            break;
        case StrategyKind::adaptive:
            if (!eps) config_fail(where + ".epsilon_ratio", "empty solver grid");
            if (k || p) config_fail(where, "adaptive takes only epsilon_ratio");
            for (double r : s.epsilon_ratios)
                if (!(r >= 0.0) || !std::isfinite(r)) config_fail(where + ".epsilon_ratio", "ratios must be >= 0");
            break;
        case StrategyKind::k_best:
            if (!k) config_fail(where + ".k", "empty solver grid");
            if (eps || p) config_fail(where, "k_best takes only k");
            for (std::size_t v : s.k_values)
                if (v == 0) config_fail(where + ".k", "K must be at least 1");
            break;
        case StrategyKind::threshold:
            if (!p) config_fail(where + ".p_thresh", "empty solver grid");
            if (eps || k) config_fail(where, "threshold takes only p_thresh");
            for (double v : s.p_values)
                if (!(v >= 0.0 && v < 1.0)) config_fail(where + ".p_thresh", "must lie in [0, 1)");
            break;
        }
    }
}

std::vector<SolverCell> ExperimentConfig::cells() const {
    std::vector<SolverCell> out;
    for (const auto& s : solvers) {
        switch (s.strategy) {
        case StrategyKind::none: out.push_back({s.name, s.strategy, 0.0}); break;
        case StrategyKind::adaptive:
            for (double r : s.epsilon_ratios) out.push_back({s.name, s.strategy, r});
            break;
        case StrategyKind::k_best:
            for (std::size_t k : s.k_values) out.push_back({s.name, s.strategy, static_cast<double>(k)});
            break;
        case StrategyKind::threshold:
            for (double p : s.p_values) out.push_back({s.name, s.strategy, p});
            break;
        }
    }
    return out;
}

PlannerConfig ExperimentConfig::planner_for(const SolverCell& cell, std::size_t trial, std::size_t horizon,
                                            double r_max) const {
    PlannerConfig p = planner;
    p.horizon_T = horizon;
    p.strategy = cell.strategy;
    p.seed = trial_seed(seed, trial);
    switch (cell.strategy) {
    case StrategyKind::none: break;
    case StrategyKind::adaptive: p.epsilon_bar = cell.param * value_scale(horizon, r_max); break;
    case StrategyKind::k_best: p.k = static_cast<std::size_t>(cell.param); break;
    case StrategyKind::threshold: p.p_thresh = cell.param; break;
    }
    p.validate();
    return p;
}

ExperimentConfig parse_config(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config is not valid YAML: ") + e.what());
    }
    check_keys(root, "",
               {"experiment", "world", "planner", "solvers", "trials", "steps", "seed", "output", "execution_cap",
                "record_timing", "workers", "traces", "trace_snapshots", "bounds"});
    ExperimentConfig c;
    if (!root["experiment"]) config_fail("experiment", "missing (waypoint or bounds)");
    const auto kind = scalar<std::string>(root["experiment"], "experiment");
    if (kind == "waypoint") {
        c.kind = ExperimentKind::waypoint;
        c.preset = Preset::waypoint_course;
    } else if (kind == "bounds") {
        c.kind = ExperimentKind::bounds;
        c.preset = Preset::two_landmark;
    } else {
        config_fail("experiment", "unknown experiment '" + kind + "'");
    }
    if (const auto w = root["world"]) {
        check_keys(w, "world", {"preset", "overrides"});
        if (w["preset"]) {
            const auto name = scalar<std::string>(w["preset"], "world.preset");
            const auto p = parse_preset(name);
            if (!p) config_fail("world.preset", "unknown preset '" + name + "'");
            c.preset = *p;
        }
        if (w["overrides"]) c.overrides = parse_overrides(w["overrides"]);
    }
    if (root["planner"]) parse_planner(root["planner"], c);
    if (const auto s = root["solvers"]) {
        if (!s.IsSequence()) config_fail("solvers", "expected a list");
        for (std::size_t i = 0; i < s.size(); ++i) c.solvers.push_back(parse_solver(s[i], i));
    }
    if (root["trials"]) c.trials = count(root["trials"], "trials");
    if (root["steps"]) c.steps = count(root["steps"], "steps");
    if (root["seed"]) c.seed = scalar<std::uint64_t>(root["seed"], "seed");
    if (root["output"]) c.output = scalar<std::string>(root["output"], "output");
    if (root["execution_cap"]) c.execution_cap = count(root["execution_cap"], "execution_cap");
    if (root["record_timing"]) c.record_timing = scalar<bool>(root["record_timing"], "record_timing");
    if (root["workers"]) c.workers = count(root["workers"], "workers");
    if (root["traces"]) c.traces = scalar<bool>(root["traces"], "traces");
    if (root["trace_snapshots"]) c.trace_snapshots = scalar<bool>(root["trace_snapshots"], "trace_snapshots");
    if (root["bounds"]) parse_bounds(root["bounds"], c.bounds);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

double value_scale(std::size_t horizon_T, double r_max) { return static_cast<double>(horizon_T + 1) * r_max; }

std::uint64_t trial_seed(std::uint64_t base, std::size_t trial) { return mix_seed(base, trial); }

Stat summarize(const std::vector<double>& xs) {
    Stat s;
    s.n = xs.size();
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.se = std::sqrt(ss / static_cast<double>(s.n - 1)) / std::sqrt(static_cast<double>(s.n));
    }
    return s;
}

double median(std::vector<double> xs) {
    if (xs.empty()) throw ContractViolation("median of an empty sample");
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ContractViolation("spearman needs two equal samples of size >= 2");
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const Stat mx = summarize(rx);
    const Stat my = summarize(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx.mean) * (ry[i] - my.mean);
        sxx += (rx[i] - mx.mean) * (rx[i] - mx.mean);
        syy += (ry[i] - my.mean) * (ry[i] - my.mean);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

SweepFiles run_sweep(const ExperimentConfig& config) {
    config.validate();
    const SweepFiles files{config.output / (config.kind == ExperimentKind::waypoint ? "steps.csv" : "bounds.csv"),
                           config.output / "summary.json"};
    // Fail on an unwritable destination before any trial runs.
    std::ofstream csv = open_output(files.csv);
    Json summary = config_json(config);

    if (config.kind == ExperimentKind::waypoint) {
        const auto cells = config.cells();
        const std::size_t jobs = cells.size() * config.trials;
        std::vector<std::vector<WaypointRow>> results(jobs);
        std::mutex collector;
        parallel_for(jobs, worker_count(config.workers, jobs), [&](std::size_t i) {
            const SolverCell& cell = cells[i / config.trials];
            WaypointTrial t = run_waypoint_trial(config, cell, i % config.trials);
            std::lock_guard lock(collector);
            if (config.traces) {
                std::ofstream out = open_output(config.output / "traces" / trace_name(cell, i % config.trials));
                write_trace_jsonl(out, t.trace);
                if (!out) throw IoError("failed writing a trace under '" + config.output.string() + "'");
            }
            results[i] = std::move(t.rows);
        });
        std::vector<WaypointRow> all;
        write_header(csv, kWaypointColumns);
        for (auto& rs : results)
            for (auto& r : rs) {
                write_waypoint_row(csv, r);
                all.push_back(std::move(r));
            }
        summary["cells"] = aggregate_waypoint(all);
    } else {
        const auto& ratios = config.bounds.epsilon_ratios;
        const std::size_t jobs = ratios.size() * config.trials;
        std::vector<BoundsRow> results(jobs);
        std::mutex collector;
        parallel_for(jobs, worker_count(config.workers, jobs), [&](std::size_t i) {
            BoundsRow row = run_bounds_trial(config, ratios[i / config.trials], i % config.trials);
            std::lock_guard lock(collector);
            results[i] = row;
        });
        write_header(csv, kBoundsColumns);
        for (const auto& r : results) write_bounds_row(csv, r);
        summary["cells"] = aggregate_bounds(results);
        summary["plan_ms_spearman"] = results.size() >= 2 ? Json(bounds_spearman(results)) : Json(nullptr);
    }
    csv.close();
    if (!csv) throw IoError("failed writing '" + files.csv.string() + "'");
    std::ofstream js = open_output(files.summary);
    js << summary.dump(2) << '\n';
    if (!js) throw IoError("failed writing '" + files.summary.string() + "'");
    return files;
}

Json aggregate_csv(ExperimentKind kind, std::istream& csv) {
    std::string line;
    if (!std::getline(csv, line)) throw IoError("empty CSV");
    const auto& cols = kind == ExperimentKind::waypoint ? kWaypointColumns : kBoundsColumns;
    if (split_csv(line) != cols) throw IoError("unexpected CSV header '" + line + "'");
    if (kind == ExperimentKind::waypoint) {
        std::vector<WaypointRow> rows;
        while (std::getline(csv, line))
            if (!line.empty()) rows.push_back(parse_waypoint_row(split_csv(line)));
        return aggregate_waypoint(rows);
    }
    std::vector<BoundsRow> rows;
    while (std::getline(csv, line))
        if (!line.empty()) rows.push_back(parse_bounds_row(split_csv(line)));
    return aggregate_bounds(rows);
}

Json load_summary(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read summary '" + path.string() + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        throw IoError("malformed summary '" + path.string() + "': " + e.what());
    }
    if (!j.is_object() || !j.contains("experiment") || !j.contains("cells") || !j["cells"].is_array())
        throw IoError("malformed summary '" + path.string() + "': missing experiment or cells");
    return j;
}

void report(const Json& summary, std::ostream& out) {
    try {
        const auto kind = summary.at("experiment").get<std::string>();
        const Json& cells = summary.at("cells");
        out << std::fixed;
        if (kind == "waypoint") {
            std::size_t n_targets = 0;
            for (const auto& c : cells) n_targets = std::max(n_targets, c.at("success").size());
            out << "Success rate over trials (mean +/- standard error)\n";
            out << std::left << std::setw(20) << "Solver" << std::setw(12) << "Param";
            for (std::size_t j = 0; j < n_targets; ++j) out << std::setw(18) << ("Waypoint " + std::to_string(j + 1));
            out << std::setw(10) << "Trials" << "plan_ms\n";
            for (const auto& c : cells) {
                const std::string strategy = c.at("strategy").get<std::string>();
                std::ostringstream param;
                if (strategy != "none") param << c.at("param").get<double>();
                out << std::setw(20) << c.at("solver").get<std::string>() << std::setw(12) << param.str();
                for (const auto& s : c.at("success")) {
                    std::ostringstream cell;
                    cell << std::fixed << std::setprecision(0) << 100.0 * s.at("mean").get<double>() << "% +/- "
                         << 100.0 * s.at("se").get<double>();
                    out << std::setw(18) << cell.str();
                }
                out << std::setw(10) << c.at("trials").get<std::size_t>() << std::setprecision(1)
                    << c.at("plan_ms").at("mean").get<double>() << '\n';
            }
        } else if (kind == "bounds") {
            out << "Normalized value estimates and bounds per epsilon ratio\n";
            out << std::right << std::setw(10) << "epsilon" << std::setw(12) << "v_full" << std::setw(12)
                << "v_pruned" << std::setw(12) << "bound_lo" << std::setw(12) << "bound_hi" << std::setw(14)
                << "plan_ms_med" << std::setw(12) << "plan_ms" << '\n';
            for (const auto& c : cells) {
                const double vp = c.at("v_pruned").at("mean").get<double>();
                const double b = c.at("bound").at("mean").get<double>();
                out << std::setprecision(3) << std::setw(10) << c.at("epsilon").get<double>() << std::setprecision(5)
                    << std::setw(12) << c.at("v_full").at("mean").get<double>() << std::setw(12) << vp
                    << std::setw(12) << vp - b << std::setw(12) << vp + b << std::setprecision(2) << std::setw(14)
                    << c.at("plan_ms_median").get<double>() << std::setw(12)
                    << c.at("plan_ms").at("mean").get<double>() << '\n';
            }
            if (summary.contains("plan_ms_spearman") && summary["plan_ms_spearman"].is_number())
                out << "Spearman(epsilon, plan_ms) = " << std::setprecision(3)
                    << summary["plan_ms_spearman"].get<double>() << '\n';
        } else {
            throw IoError("malformed summary: unknown experiment '" + kind + "'");
        }
    } catch (const Json::exception& e) {
        throw IoError(std::string("malformed summary: ") + e.what());
    }
}

}  // namespace ambiplan
