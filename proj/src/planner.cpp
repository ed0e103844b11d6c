#include "ambiplan/planner.hpp"

#include "ambiplan/errors.hpp"
#include "ambiplan/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace ambiplan {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void running_mean(double& acc, double value, std::size_t n) { acc += (value - acc) / static_cast<double>(n); }

}  // namespace

std::string_view to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::none: return "none";
        case StrategyKind::adaptive: return "adaptive";
        case StrategyKind::k_best: return "k_best";
        case StrategyKind::threshold: return "threshold";
    }
    return "?";
}

std::optional<StrategyKind> parse_strategy(std::string_view name) {
    if (name == "none") return StrategyKind::none;
    if (name == "adaptive") return StrategyKind::adaptive;
    if (name == "k_best") return StrategyKind::k_best;
    if (name == "threshold") return StrategyKind::threshold;
    return std::nullopt;
}

std::string_view to_string(RolloutKind kind) {
    return kind == RolloutKind::greedy_to_target ? "greedy_to_target" : "uniform_random";
}

std::optional<RolloutKind> parse_rollout(std::string_view name) {
    if (name == "greedy_to_target") return RolloutKind::greedy_to_target;
    if (name == "uniform_random") return RolloutKind::uniform_random;
    return std::nullopt;
}

void PlannerConfig::validate() const {
    auto fail = [](const char* key, const char* what) {
        throw ConfigError(std::string("planner field '") + key + "': " + what);
    };
    if (!(ucb_c > 0.0)) fail("ucb_c", "must be positive");
    if (!(k_o > 0.0)) fail("k_o", "must be positive");
    if (!(alpha_o > 0.0 && alpha_o < 1.0)) fail("alpha_o", "must lie in (0, 1)");
    if (horizon_T < 1) fail("horizon", "must be at least 1");
    if (!(epsilon_bar >= 0.0)) fail("epsilon_bar", "must be non-negative");
    if (k < 1) fail("k", "must be at least 1");
    if (!(p_thresh >= 0.0 && p_thresh < 1.0)) fail("p_thresh", "must lie in [0, 1)");
    if (!max_simulations && !(time_budget_s > 0.0)) fail("time_budget_s", "must be positive");
    if (max_simulations && *max_simulations == 0) fail("max_simulations", "must be at least 1");
    if (reward_samples < 1) fail("reward_samples", "must be at least 1");
}

PruningStrategy PlannerConfig::resolve(double r_max) const {
    switch (strategy) {
        case StrategyKind::none: return NoPruning{};
        case StrategyKind::adaptive: return AdaptivePruning{delta_from_epsilon(epsilon_bar, horizon_T, r_max)};
        case StrategyKind::k_best: return KBestPruning{k};
        case StrategyKind::threshold: return ThresholdPruning{p_thresh};
    }
    return NoPruning{};
}

std::optional<double> PlannerConfig::apriori(double r_max) const {
    switch (strategy) {
        case StrategyKind::none: return 0.0;
        case StrategyKind::adaptive:
            return apriori_bound(PruneBudget::from_epsilon(epsilon_bar, horizon_T, r_max));
        default: return std::nullopt;
    }
}

Planner::Planner(const WorldModel& model, PlannerConfig config)
    : model_(model), config_(config), strategy_(config.resolve(model.r_max())), r_max_(model.r_max()) {
    config_.validate();
    path_delta_.assign(config_.horizon_T + 1, 0.0);
}

void Planner::reset_path(double root_delta) {
    std::fill(path_delta_.begin(), path_delta_.end(), 0.0);
    path_delta_[0] = root_delta;
}

std::unique_ptr<BeliefNode> Planner::make_root(MixtureBelief belief, double root_delta) const {
    auto root = std::make_unique<BeliefNode>();
    root->belief = std::move(belief);
    root->delta_step = root_delta;
    root->delta_acc.assign(config_.horizon_T + 1, 0.0);
    for (const Action& a : model_.available_actions()) root->edges.push_back(ActionEdge{a, 0, 0.0, {}});
    return root;
}

std::size_t Planner::select_action(const BeliefNode& node) const {
    for (std::size_t i = 0; i < node.edges.size(); ++i) {
        if (node.edges[i].visit_count == 0) return i;
    }
    const double log_n = std::log(static_cast<double>(node.visit_count));
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < node.edges.size(); ++i) {
        const auto& e = node.edges[i];
        const double score = e.q_value + config_.ucb_c * std::sqrt(log_n / static_cast<double>(e.visit_count));
        if (score > best_score) {
            best_score = score;
            best = i;
        }
    }
    return best;
}

bool Planner::widening_admits(const ActionEdge& edge) const {
    return static_cast<double>(edge.children.size()) <=
           config_.k_o * std::pow(static_cast<double>(edge.visit_count), config_.alpha_o);
}

double Planner::rollout(const MixtureBelief& belief, std::size_t depth, std::mt19937_64& rng) const {
    if (depth == 0) return 0.0;
    const auto d = static_cast<Eigen::Index>(model_.agent_dim);
    std::vector<double> w = belief.weights();
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    const auto& comp = belief.components()[pick(rng)].belief;
    std::normal_distribution<double> normal;
    Vector eps(d);
    for (Eigen::Index i = 0; i < d; ++i) eps(i) = normal(rng);
    Vector particle = comp.mean.head(d) + psd_sqrt(comp.covariance.topLeftCorner(d, d)) * eps;
    Vector estimate = belief.components()[belief.max_weight_index()].belief.mean.head(d);
    const Matrix noise_root = psd_sqrt(model_.process_noise.topLeftCorner(d, d));
    std::uniform_int_distribution<std::size_t> any_action(0, model_.actions.size() - 1);

    double total = 0.0;
    for (std::size_t t = 0; t < depth; ++t) {
        const ActionId id = config_.rollout == RolloutKind::greedy_to_target
                                ? greedy_action(estimate, model_.target(), model_)
                                : model_.actions[any_action(rng)];
        const Vector step = model_.action(id).displacement;
        for (Eigen::Index i = 0; i < d; ++i) eps(i) = normal(rng);
        particle += step + noise_root * eps;
        estimate += step;
        total += reward_fn(particle, model_.target(), model_.d_max);
    }
    return total;
}

Planner::SimResult Planner::simulate(BeliefNode& node, std::size_t depth_remaining, std::mt19937_64& rng) {
    if (depth_remaining == 0) return {};
    const std::size_t a = select_action(node);
    ActionEdge& edge = node.edges[a];
    const double T = static_cast<double>(config_.horizon_T);

    SimResult result;
    BeliefNode* child = nullptr;
    double r = 0.0;
    if (widening_admits(edge)) {
        const Observation z = draw_observation(node.belief, edge.action, model_, rng);
        PruneResult pr = apply_pruning(strategy_, mixture_update(node.belief, edge.action, z, model_));
        auto created = std::make_unique<BeliefNode>();
        created->belief = std::move(pr.belief);
        created->depth = node.depth + 1;
        created->delta_step = pr.receipt.delta_step;
        created->delta_acc.assign(config_.horizon_T + 1, 0.0);
        for (const Action& act : model_.available_actions()) created->edges.push_back(ActionEdge{act, 0, 0.0, {}});
        r = mixture_reward(created->belief, model_, config_.reward_samples,
                           mix_seed(config_.seed, static_cast<std::uint64_t>(rng())));
        child = created.get();
        edge.children.push_back(ChildLink{std::move(created), r});
        result.ret = r + rollout(child->belief, depth_remaining - 1, rng);
        std::fill(path_delta_.begin() + static_cast<std::ptrdiff_t>(child->depth), path_delta_.end(), 0.0);
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, edge.children.size() - 1);
        ChildLink& link = edge.children[pick(rng)];
        child = link.node.get();
        r = link.reward;
        const SimResult below = simulate(*child, depth_remaining - 1, rng);
        result.ret = r + below.ret;
        result.bound = below.bound;
    }
    const double tau = static_cast<double>(child->depth);
    result.bound += r_max_ * (T - tau + 1.0) * child->delta_step;
    path_delta_[child->depth] = child->delta_step;

    node.visit_count += 1;
    edge.visit_count += 1;
    edge.q_value += (result.ret - edge.q_value) / static_cast<double>(edge.visit_count);
    running_mean(node.hindsight_acc, result.bound, node.visit_count);
    for (std::size_t d = node.depth + 1; d < node.delta_acc.size(); ++d) {
        running_mean(node.delta_acc[d], path_delta_[d], node.visit_count);
    }
    return result;
}

PlanResult plan(const MixtureBelief& root_belief, const PlannerConfig& config, const WorldModel& model,
                double root_delta) {
    const auto start = Clock::now();
    Planner planner(model, config);
    auto root = planner.make_root(root_belief, root_delta);
    std::mt19937_64 rng(mix_seed(config.seed, 0x706c616eULL));
    const double r_max = model.r_max();

    PlanResult out;
    out.delta_hat.assign(config.horizon_T + 1, 0.0);
    std::size_t attempts = 0;
    const double budget_ms = config.time_budget_s * 1000.0;
    for (;;) {
        if (config.max_simulations) {
            if (attempts >= *config.max_simulations) break;
        } else if (attempts > 0 && elapsed_ms(start) >= budget_ms) {
            break;
        }
        ++attempts;
        try {
            planner.reset_path(root_delta);
            planner.simulate(*root, config.horizon_T, rng);
            ++out.simulations;
            const auto& path = planner.path_delta();
            for (std::size_t d = 0; d < path.size(); ++d) running_mean(out.delta_hat[d], path[d], out.simulations);
        } catch (const TotalLikelihoodCollapse&) {
            ++out.failed_simulations;
        } catch (const NumericalDegeneracy&) {
            ++out.failed_simulations;
        }
    }
    if (out.simulations == 0) {
        throw PlannerStarvation("no simulation completed within the planning budget (" +
                                std::to_string(out.failed_simulations) + " failed)");
    }

    std::size_t best = 0;
    bool have = false;
    for (std::size_t i = 0; i < root->edges.size(); ++i) {
        const auto& e = root->edges[i];
        out.q_table.push_back({e.action.id, e.visit_count, e.q_value});
        if (e.visit_count == 0) continue;
        if (!have || e.q_value > root->edges[best].q_value) {
            best = i;
            have = true;
        }
    }
    out.best_action = root->edges[best].action.id;
    out.apriori = config.apriori(r_max);
    std::vector<DepthDelta> per_depth;
    for (std::size_t d = 0; d < out.delta_hat.size(); ++d) per_depth.push_back({d, out.delta_hat[d]});
    out.hindsight = hindsight_bound(per_depth, config.horizon_T, r_max);
    root->delta_acc = out.delta_hat;
    out.wallclock_ms = elapsed_ms(start);

    std::size_t count = 0;
    std::vector<const BeliefNode*> stack{root.get()};
    while (!stack.empty()) {
        const BeliefNode* n = stack.back();
        stack.pop_back();
        ++count;
        for (const auto& e : n->edges) {
            for (const auto& c : e.children) stack.push_back(c.node.get());
        }
    }
    out.tree_nodes = count;
    return out;
}

EpisodeTrace run_episode(const World& world, const PlannerConfig& config, const EpisodeOptions& options) {
    WorldModel model = world.model;
    GroundTruth truth = world.truth;
    const PruningStrategy strategy = config.resolve(model.r_max());

    EpisodeTrace trace;
    trace.reached.assign(model.targets.size(), false);
    trace.reached_at.assign(model.targets.size(), -1);

    auto prune_execution = [&](MixtureBelief b, double& delta, std::size_t& pruned) {
        PruneResult pr = apply_pruning(strategy, b);
        delta = pr.receipt.delta_step;
        pruned = pr.receipt.pruned_labels.size();
        if (pr.belief.size() > options.max_execution_hypotheses) {
            // Cap mass is removed from an already renormalized belief; rescale to the pre-prune scale.
            PruneResult capped = prune_k_best(pr.belief, options.max_execution_hypotheses);
            delta += (1.0 - delta) * capped.receipt.delta_step;
            pruned += capped.receipt.pruned_labels.size();
            return std::move(capped.belief);
        }
        return std::move(pr.belief);
    };

    double root_delta = 0.0;
    std::size_t root_pruned = 0;
    MixtureBelief belief = prune_execution(world.root, root_delta, root_pruned);

    for (std::size_t step = 0; step < options.n_steps; ++step) {
        PlannerConfig step_config = config;
        step_config.seed = mix_seed(config.seed, step);
        const PlanResult pr = plan(belief, step_config, model, root_delta);

        const Action action = model.action(pr.best_action);
        StepOutcome outcome = world_step(truth, action, model);
        truth = std::move(outcome.truth);

        StepRecord rec;
        rec.step = step;
        rec.action = pr.best_action;
        rec.reward = reward_fn(truth.agent_pos, model.target(), model.d_max);
        rec.apriori = pr.apriori;
        rec.hindsight = pr.hindsight;
        rec.plan_wallclock_ms = options.timing ? pr.wallclock_ms : 0.0;
        rec.simulations = pr.simulations;
        rec.true_position = truth.agent_pos;
        rec.true_association = outcome.association;

        belief = prune_execution(mixture_update(belief, action, outcome.z, model), root_delta, root_pruned);
        rec.n_hypotheses = belief.size();
        rec.delta_step = root_delta;
        rec.pruned_label_count = root_pruned;
        Vector mean = Vector::Zero(static_cast<Eigen::Index>(model.state_dim()));
        for (const auto& c : belief.components()) mean += c.weight() * c.belief.mean;
        rec.belief_mean = mean;
        if (options.snapshots) rec.snapshot = belief;

        const std::size_t before = model.active_target;
        const std::size_t hits = advance_waypoints(model, truth.agent_pos, trace.reached);
        for (std::size_t h = 0; h < hits; ++h) trace.reached_at[before + h] = static_cast<int>(step);
        rec.active_target = model.active_target;
        trace.steps.push_back(std::move(rec));
        if (std::all_of(trace.reached.begin(), trace.reached.end(), [](bool r) { return r; })) break;
    }
    return trace;
}

}  // namespace ambiplan
