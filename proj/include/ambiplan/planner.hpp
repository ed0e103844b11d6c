#pragma once

#include "ambiplan/belief.hpp"
#include "ambiplan/env.hpp"
#include "ambiplan/estimators.hpp"
#include "ambiplan/pruning.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace ambiplan {

enum class StrategyKind { none, adaptive, k_best, threshold };
enum class RolloutKind { greedy_to_target, uniform_random };

std::string_view to_string(StrategyKind kind);
std::optional<StrategyKind> parse_strategy(std::string_view name);
std::string_view to_string(RolloutKind kind);
std::optional<RolloutKind> parse_rollout(std::string_view name);

struct PlannerConfig {
    double ucb_c = 1.0;
    double k_o = 4.0;
    double alpha_o = 0.5;
    std::size_t horizon_T = 10;
    StrategyKind strategy = StrategyKind::adaptive;
    double epsilon_bar = 0.0;
    std::size_t k = 1;
    double p_thresh = 0.1;
    double time_budget_s = 20.0;
    /// When set, planning runs exactly this many simulation attempts and ignores the clock.
    std::optional<std::size_t> max_simulations;
    RolloutKind rollout = RolloutKind::greedy_to_target;
    std::uint64_t seed = 0;
    std::size_t reward_samples = 16;

    /// Throws ConfigError naming the first invalid field.
    void validate() const;
    /// Concrete pruning rule; adaptive resolves delta from epsilon_bar, T and r_max.
    [[nodiscard]] PruningStrategy resolve(double r_max) const;
    /// A-priori loss bound: epsilon_bar-derived for adaptive, 0 for none, unknown otherwise.
    [[nodiscard]] std::optional<double> apriori(double r_max) const;
};

struct BeliefNode;

struct ChildLink {
    std::unique_ptr<BeliefNode> node;
    double reward = 0.0;
};

struct ActionEdge {
    Action action;
    std::size_t visit_count = 0;
    double q_value = 0.0;
    std::vector<ChildLink> children;
};

struct BeliefNode {
    MixtureBelief belief;
    std::size_t depth = 0;
    std::size_t visit_count = 0;
    /// Mass pruned when this node's belief was formed.
    double delta_step = 0.0;
    /// Running mean of the bound contributions of the paths through this node.
    double hindsight_acc = 0.0;
    /// Running mean of the pruned mass per depth below this node (index = absolute depth).
    std::vector<double> delta_acc;
    std::vector<ActionEdge> edges;
};

/// Search state for one planning call.
class Planner {
public:
    Planner(const WorldModel& model, PlannerConfig config);

    /// Creates a root; `root_delta` is the mass pruned when the root belief was formed.
    std::unique_ptr<BeliefNode> make_root(MixtureBelief belief, double root_delta) const;

    struct SimResult {
        double ret = 0.0;
        /// r_max * sum over this path's nodes below `node` of (T - tau + 1) delta_tau.
        double bound = 0.0;
    };

    /// One simulation from `node` with `depth_remaining` steps to go.
    SimResult simulate(BeliefNode& node, std::size_t depth_remaining, std::mt19937_64& rng);

    /// UCB choice (natural log). Untried edges first, in the model's action order.
    [[nodiscard]] std::size_t select_action(const BeliefNode& node) const;

    /// True when the edge may receive a new observation child.
    [[nodiscard]] bool widening_admits(const ActionEdge& edge) const;

    double rollout(const MixtureBelief& belief, std::size_t depth, std::mt19937_64& rng) const;

    /// Clears the per-depth pruned mass of the current path; depth 0 gets `root_delta`.
    void reset_path(double root_delta);
    /// Pruned mass per absolute depth along the most recent simulation.
    [[nodiscard]] const std::vector<double>& path_delta() const { return path_delta_; }

    [[nodiscard]] const PruningStrategy& strategy() const { return strategy_; }
    [[nodiscard]] const PlannerConfig& config() const { return config_; }

private:
    const WorldModel& model_;
    PlannerConfig config_;
    PruningStrategy strategy_;
    double r_max_;
    std::vector<double> path_delta_;
};

struct QEntry {
    ActionId action;
    std::size_t visits = 0;
    double q_value = 0.0;
};

struct PlanResult {
    ActionId best_action = ActionId::up;
    std::vector<QEntry> q_table;
    std::optional<double> apriori;
    double hindsight = 0.0;
    /// Running mean of pruned mass per depth 0..T at the root.
    std::vector<double> delta_hat;
    std::size_t simulations = 0;
    std::size_t failed_simulations = 0;
    double wallclock_ms = 0.0;
    std::size_t tree_nodes = 0;
};

/// Runs simulations from the root until the budget is spent and returns the
/// best root action (ties by action order) with its bounds.
PlanResult plan(const MixtureBelief& root, const PlannerConfig& config, const WorldModel& model,
                double root_delta = 0.0);

struct EpisodeOptions {
    std::size_t n_steps = 60;
    /// Hard cap on the execution belief (heaviest kept) so unpruned runs stay in memory.
    std::size_t max_execution_hypotheses = 4096;
    /// Record belief snapshots in the trace.
    bool snapshots = false;
    /// Write zeros for every wall-clock field (byte-reproducible traces).
    bool timing = true;
};

struct StepRecord {
    std::size_t step = 0;
    ActionId action = ActionId::up;
    double reward = 0.0;
    std::size_t n_hypotheses = 0;
    double delta_step = 0.0;
    std::size_t pruned_label_count = 0;
    std::optional<double> apriori;
    double hindsight = 0.0;
    double plan_wallclock_ms = 0.0;
    std::size_t simulations = 0;
    std::size_t active_target = 0;
    Vector true_position;
    Vector belief_mean;
    int true_association = 0;
    std::optional<MixtureBelief> snapshot;
};

struct EpisodeTrace {
    std::vector<StepRecord> steps;
    std::vector<bool> reached;
    /// Step index at which each target was first reached (-1 if never).
    std::vector<int> reached_at;
};

/// Receding-horizon loop: plan, execute the first action in the simulator,
/// update and prune the execution belief, switch waypoints, repeat.
EpisodeTrace run_episode(const World& world, const PlannerConfig& config, const EpisodeOptions& options);

}  // namespace ambiplan
