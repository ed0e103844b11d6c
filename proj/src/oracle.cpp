#include "ambiplan/oracle.hpp"

#include "ambiplan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace ambiplan {

namespace {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

/// int_a^b y f(y) dy for y ~ N(m, s^2).
double partial_first_moment(double a, double b, double m, double s) {
    const double alpha = (a - m) / s;
    const double beta = (b - m) / s;
    return m * (std_normal_cdf(beta) - std_normal_cdf(alpha)) + s * (std_normal_pdf(alpha) - std_normal_pdf(beta));
}

void check_budget(const TinyPOMDP& tiny) {
    if (tiny.outcome_count() > kOutcomeBudget || tiny.history_count() > kOutcomeBudget)
        throw OutcomeBudgetExceeded("tiny POMDP has " + std::to_string(tiny.outcome_count()) +
                                    " outcomes; the enumeration budget is " + std::to_string(kOutcomeBudget));
}

double observation_probability(const MixtureBelief& b, const Action& action, const Vector& z, const WorldModel& model) {
    return std::exp(log_proposal_density(b, action, z, model));
}

int support_index(const WorldModel& model, const Vector& z) {
    for (std::size_t j = 0; j < model.observation_support.size(); ++j) {
        if (model.observation_support[j] == z) return static_cast<int>(j);
    }
    throw ContractViolation("observation is not a support point");
}

struct Walk {
    const TinyPOMDP& tiny;
    const PruningStrategy* strategy;  ///< nullptr: full model
    std::vector<double> expected_delta;
    std::vector<ActionId> actions;
    std::vector<Vector> observations;

    double value_of(const MixtureBelief& b, std::size_t depth, double root_reward) const {
        return depth == 0 ? root_reward : exact_mixture_reward(b, tiny.model);
    }

    MixtureBelief child(const MixtureBelief& b, const Action& a, const Vector& z, std::size_t depth, double prob) {
        MixtureBelief next = mixture_update(b, a, Observation{z}, tiny.model);
        if (!strategy) return next;
        PruneResult pr = apply_pruning(*strategy, next);
        expected_delta[depth] += prob * pr.receipt.delta_step;
        return std::move(pr.belief);
    }

    double evaluate(const MixtureBelief& b, std::size_t depth, double prob, double root_reward, const Policy& policy) {
        double v = value_of(b, depth, root_reward);
        if (depth == tiny.horizon) return v;
        const ActionId id = policy(PolicyInput{b, depth, actions, observations});
        const Action a = tiny.model.action(id);
        for (const auto& z : tiny.model.observation_support) {
            const double p = observation_probability(b, a, z, tiny.model);
            if (p <= 0.0) continue;
            const MixtureBelief next = child(b, a, z, depth + 1, prob * p);
            actions.push_back(id);
            observations.push_back(z);
            v += p * evaluate(next, depth + 1, prob * p, root_reward, policy);
            actions.pop_back();
            observations.pop_back();
        }
        return v;
    }

    double optimize(const MixtureBelief& b, std::size_t depth, HistoryKey& key, double root_reward,
                    TablePolicy& out) {
        double v = value_of(b, depth, root_reward);
        if (depth == tiny.horizon) return v;
        double best = -std::numeric_limits<double>::infinity();
        ActionId best_id = tiny.model.actions.front();
        for (ActionId id : tiny.model.actions) {
            const Action a = tiny.model.action(id);
            double q = 0.0;
            for (std::size_t j = 0; j < tiny.model.observation_support.size(); ++j) {
                const Vector& z = tiny.model.observation_support[j];
                const double p = observation_probability(b, a, z, tiny.model);
                if (p <= 0.0) continue;
                MixtureBelief next = mixture_update(b, a, Observation{z}, tiny.model);
                if (strategy) next = apply_pruning(*strategy, next).belief;
                key.push_back(static_cast<int>(id));
                key.push_back(static_cast<int>(j));
                q += p * optimize(next, depth + 1, key, root_reward, out);
                key.pop_back();
                key.pop_back();
            }
            if (q > best) {
                best = q;
                best_id = id;
            }
        }
        out.table[key] = best_id;
        return v + best;
    }
};

ExactPruned pruned_walk(const TinyPOMDP& tiny, const Policy& policy, const PruningStrategy& strategy) {
    check_budget(tiny);
    Walk walk{tiny, &strategy, std::vector<double>(tiny.horizon + 1, 0.0), {}, {}};
    const double root_reward = exact_mixture_reward(tiny.root, tiny.model);
    PruneResult root = apply_pruning(strategy, tiny.root);
    walk.expected_delta[0] = root.receipt.delta_step;
    ExactPruned out;
    out.value = walk.evaluate(root.belief, 0, 1.0, root_reward, policy);
    out.expected_delta = walk.expected_delta;
    std::vector<DepthDelta> deltas;
    for (std::size_t d = 0; d < out.expected_delta.size(); ++d) deltas.push_back({d, out.expected_delta[d]});
    out.bound = hindsight_bound(deltas, tiny.horizon, tiny.model.r_max());
    return out;
}

}  // namespace

std::size_t TinyPOMDP::outcome_count() const {
    const double base = static_cast<double>(model.observation_support.size() * model.num_sources());
    return static_cast<std::size_t>(std::pow(base, static_cast<double>(horizon)));
}

std::size_t TinyPOMDP::history_count() const {
    const double base = static_cast<double>(model.observation_support.size() * model.actions.size());
    return static_cast<std::size_t>(std::pow(base, static_cast<double>(horizon)));
}

TinyPOMDP make_tiny(const TinyParams& p) {
    if (p.root_means.size() != p.root_weights.size() || p.root_means.empty())
        throw ContractViolation("tiny root needs one weight per mean");
    LandmarkModelParams lm;
    lm.agent_dim = 1;
    for (double l : p.landmarks) lm.landmarks.push_back(Vector::Constant(1, l));
    lm.landmark_covs.assign(p.landmarks.size(), Matrix::Constant(1, 1, p.landmark_var));
    lm.agent_process_cov = Matrix::Constant(1, 1, p.process_var);
    lm.obs_cov = Matrix::Constant(1, 1, p.obs_var);
    lm.step_size = p.step_size;
    lm.targets = {Vector::Constant(1, p.target)};
    lm.d_max = p.d_max;
    lm.actions = p.actions;

    TinyPOMDP tiny;
    tiny.model = make_landmark_model(lm);
    for (double z : p.support) tiny.model.observation_support.push_back(Vector::Constant(1, z));
    tiny.model.validate();
    tiny.horizon = p.horizon;

    const auto n = static_cast<Eigen::Index>(tiny.model.state_dim());
    std::vector<Component> comps;
    for (std::size_t i = 0; i < p.root_means.size(); ++i) {
        Component c;
        c.label.root = static_cast<int>(i);
        c.log_weight = std::log(p.root_weights[i]);
        c.belief.mean = Vector::Zero(n);
        c.belief.covariance = Matrix::Zero(n, n);
        c.belief.mean(0) = p.root_means[i];
        c.belief.covariance(0, 0) = p.root_var;
        for (std::size_t l = 0; l < p.landmarks.size(); ++l) {
            const auto at = static_cast<Eigen::Index>(1 + l);
            c.belief.mean(at) = p.landmarks[l];
            c.belief.covariance(at, at) = p.landmark_var;
        }
        comps.push_back(std::move(c));
    }
    tiny.root = MixtureBelief(std::move(comps), 0);
    return tiny;
}

TinyPOMDP random_tiny(std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, 0x74696e79ULL));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    TinyParams p;
    const int num_landmarks = pick(1, 2);
    p.landmarks.clear();
    for (int l = 0; l < num_landmarks; ++l) p.landmarks.push_back(uniform(-3.0, 3.0));
    p.landmark_var = u(rng) < 0.2 ? 0.0 : uniform(0.05, 1.0);
    p.process_var = uniform(0.01, 0.5);
    p.obs_var = uniform(0.05, 0.6);
    p.step_size = uniform(0.5, 1.5);
    const int num_support = pick(2, 5);
    p.support.clear();
    for (int j = 0; j < num_support; ++j) p.support.push_back(uniform(-4.0, 4.0));
    std::sort(p.support.begin(), p.support.end());
    const int roots = pick(1, 3);
    p.root_means.clear();
    p.root_weights.clear();
    for (int r = 0; r < roots; ++r) {
        p.root_means.push_back(uniform(-2.0, 2.0));
        p.root_weights.push_back(uniform(0.05, 1.0));
    }
    p.root_var = uniform(0.05, 1.0);
    p.target = uniform(-3.0, 3.0);
    p.d_max = uniform(0.5, 5.0);
    p.horizon = static_cast<std::size_t>(pick(1, 3));
    p.actions = u(rng) < 0.1 ? std::vector<ActionId>{ActionId::right}
                             : std::vector<ActionId>{ActionId::left, ActionId::right};
    return make_tiny(p);
}

TinyPOMDP consistency_instance() {
    TinyParams p;
    p.landmarks = {1.5, 2.5};
    p.landmark_var = 0.2;
    p.process_var = 0.1;
    p.obs_var = 0.3;
    p.step_size = 1.0;
    p.support = {0.0, 1.5};
    p.root_means = {0.0};
    p.root_weights = {1.0};
    p.root_var = 0.2;
    p.target = 3.0;
    p.d_max = 5.0;
    p.horizon = 2;
    p.actions = {ActionId::left, ActionId::right};
    return make_tiny(p);
}

double exact_component_reward(const ConditionalBelief& belief, const WorldModel& model) {
    if (model.reward_kind == RewardKind::constant) return model.reward_constant;
    if (model.agent_dim != 1) throw ContractViolation("closed-form reward is one-dimensional");
    const double m = belief.mean(0) - model.target()(0);
    const double var = belief.covariance(0, 0);
    const double d = model.d_max;
    if (var <= 0.0) return -std::min(std::abs(m), d);
    const double s = std::sqrt(var);
    // E[min(|Y|, d)] = E[|Y|; |Y| <= d] + d P(|Y| > d), Y = x - target.
    const double inside = partial_first_moment(0.0, d, m, s) - partial_first_moment(-d, 0.0, m, s);
    const double outside = std_normal_cdf((-d - m) / s) + (1.0 - std_normal_cdf((d - m) / s));
    return -(inside + d * outside);
}

double exact_mixture_reward(const MixtureBelief& b, const WorldModel& model) {
    double total = 0.0;
    for (const auto& c : b.components()) total += c.weight() * exact_component_reward(c.belief, model);
    return total;
}

double exact_value(const TinyPOMDP& tiny, const Policy& policy) {
    check_budget(tiny);
    Walk walk{tiny, nullptr, std::vector<double>(tiny.horizon + 1, 0.0), {}, {}};
    return walk.evaluate(tiny.root, 0, 1.0, exact_mixture_reward(tiny.root, tiny.model), policy);
}

ExactPruned exact_value_pruned(const TinyPOMDP& tiny, const Policy& policy, const PruningStrategy& strategy) {
    return pruned_walk(tiny, policy, strategy);
}

Policy TablePolicy::as_policy(const WorldModel& model) const {
    return [this, &model](const PolicyInput& in) {
        HistoryKey key;
        for (std::size_t i = 0; i < in.actions.size(); ++i) {
            key.push_back(static_cast<int>(in.actions[i]));
            key.push_back(support_index(model, in.observations[i]));
        }
        const auto it = table.find(key);
        return it == table.end() ? model.actions.front() : it->second;
    };
}

std::vector<RootQ> optimal_root_q(const TinyPOMDP& tiny) {
    check_budget(tiny);
    const double root_reward = exact_mixture_reward(tiny.root, tiny.model);
    Walk walk{tiny, nullptr, {}, {}, {}};
    TablePolicy scratch;
    std::vector<RootQ> out;
    for (ActionId id : tiny.model.actions) {
        const Action a = tiny.model.action(id);
        double q = root_reward;
        for (std::size_t j = 0; j < tiny.model.observation_support.size(); ++j) {
            const Vector& z = tiny.model.observation_support[j];
            const double p = observation_probability(tiny.root, a, z, tiny.model);
            if (p <= 0.0) continue;
            HistoryKey key{static_cast<int>(id), static_cast<int>(j)};
            q += p * walk.optimize(mixture_update(tiny.root, a, Observation{z}, tiny.model), 1, key, root_reward,
                                   scratch);
        }
        out.push_back({id, q});
    }
    return out;
}

RegretCheck optimal_regret_check(const TinyPOMDP& tiny, const PruningStrategy& strategy) {
    check_budget(tiny);
    const double root_reward = exact_mixture_reward(tiny.root, tiny.model);
    RegretCheck out;

    Walk full{tiny, nullptr, {}, {}, {}};
    HistoryKey key;
    out.v_star = full.optimize(tiny.root, 0, key, root_reward, out.pi_star);

    Walk pruned{tiny, &strategy, {}, {}, {}};
    const MixtureBelief pruned_root = apply_pruning(strategy, tiny.root).belief;
    key.clear();
    out.v_bar_of_pi_bar = pruned.optimize(pruned_root, 0, key, root_reward, out.pi_bar);

    out.v_full_of_pi_bar = exact_value(tiny, out.pi_bar.as_policy(tiny.model));
    out.eps_star = pruned_walk(tiny, out.pi_star.as_policy(tiny.model), strategy).bound;
    out.eps_bar = pruned_walk(tiny, out.pi_bar.as_policy(tiny.model), strategy).bound;
    out.regret = out.v_star - out.v_full_of_pi_bar;
    out.bound = 2.0 * std::max(out.eps_star, out.eps_bar);
    return out;
}

}  // namespace ambiplan
