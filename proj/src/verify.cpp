#include "ambiplan/verify.hpp"

#include "ambiplan/oracle.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace ambiplan {

namespace {

/// Strategy parameters drawn per instance so every sweep covers a range of budgets.
std::vector<std::pair<std::string, PruningStrategy>> strategies_for(std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, 0x7374726174));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double delta = 0.01 + 0.4 * u(rng);
    const std::size_t k = 1 + static_cast<std::size_t>(u(rng) * 3.0);
    const double p = 0.05 + 0.4 * u(rng);
    return {{"adaptive", AdaptivePruning{delta}}, {"k_best", KBestPruning{k}}, {"threshold", ThresholdPruning{p}}};
}

std::vector<FamilyResult> per_strategy(const std::string& family) {
    std::vector<FamilyResult> out;
    for (const char* s : {"adaptive", "k_best", "threshold"}) {
        FamilyResult r;
        r.name = family + "/" + s;
        r.worst_margin = std::numeric_limits<double>::infinity();
        out.push_back(r);
    }
    return out;
}

void record(FamilyResult& r, double gap, double bound, std::uint64_t instance) {
    ++r.total;
    const double margin = bound + kInequalitySlack - gap;
    r.worst_margin = std::min(r.worst_margin, margin);
    if (bound > 0.0) {
        ++r.nontrivial;
        r.max_ratio = std::max(r.max_ratio, gap / bound);
    }
    if (margin >= 0.0) {
        ++r.passed;
    } else if (r.first_failure.empty()) {
        std::ostringstream ss;
        ss << "instance " << instance << ": gap " << gap << " > bound " << bound;
        r.first_failure = ss.str();
    }
}

template <class Check>
std::vector<FamilyResult> sweep(const std::string& family, std::size_t instances, std::uint64_t seed, Check&& check) {
    auto results = per_strategy(family);
    for (std::uint64_t i = 0; i < instances; ++i) {
        const std::uint64_t s = mix_seed(seed, i);
        const TinyPOMDP tiny = random_tiny(s);
        const auto strategies = strategies_for(s);
        for (std::size_t k = 0; k < strategies.size(); ++k) {
            const auto [gap, bound] = check(tiny, strategies[k].second, s);
            record(results[k], gap, bound, i);
        }
    }
    return results;
}

ObservationTree tiny_tree(const TinyPOMDP& tiny, const PruningStrategy& strategy, std::uint64_t seed) {
    const std::vector<std::size_t> samples(tiny.horizon, 3);
    return build_observation_tree(tiny.root, history_hash_policy(tiny.model.actions, seed), tiny.model, strategy,
                                  samples, seed);
}

}  // namespace

FamilyResult verify_zero_budget(std::size_t instances, std::uint64_t seed) {
    FamilyResult r;
    r.name = "zero_budget_identity";
    for (std::uint64_t i = 0; i < instances; ++i) {
        const std::uint64_t s = mix_seed(seed, i);
        const TinyPOMDP tiny = random_tiny(s);
        const AdaptivePruning zero{delta_from_epsilon(0.0, tiny.horizon, tiny.model.r_max())};
        const ObservationTree tree = tiny_tree(tiny, zero, s);
        const RewardSettings rs{16, s};
        const SnEstimate full = sn_expected_reward(tiny.root, tree, tiny.model, rs);
        const SnEstimate pruned = sn_expected_reward_pruned(tiny.root, tree, tiny.model, zero, rs);
        const double bound = bound_estimate(pruned, tiny.horizon, tiny.model.r_max());
        ++r.total;
        if (full.value == pruned.value && full.per_depth == pruned.per_depth && bound == 0.0) {
            ++r.passed;
        } else if (r.first_failure.empty()) {
            std::ostringstream ss;
            ss << "instance " << i << ": full " << full.value << ", pruned " << pruned.value << ", bound " << bound;
            r.first_failure = ss.str();
        }
    }
    r.worst_margin = 0.0;
    return r;
}

std::vector<FamilyResult> verify_estimator_bound(std::size_t instances, std::uint64_t seed) {
    return sweep("estimator_gap_bound", instances, seed,
                 [](const TinyPOMDP& tiny, const PruningStrategy& strategy, std::uint64_t s) {
                     const ObservationTree tree = tiny_tree(tiny, strategy, s);
                     const RewardSettings rs{16, s};
                     const SnEstimate full = sn_expected_reward(tiny.root, tree, tiny.model, rs);
                     const SnEstimate pruned = sn_expected_reward_pruned(tiny.root, tree, tiny.model, strategy, rs);
                     return std::pair{std::abs(full.value - pruned.value),
                                      bound_estimate(pruned, tiny.horizon, tiny.model.r_max())};
                 });
}

std::vector<FamilyResult> verify_exact_bound(std::size_t instances, std::uint64_t seed) {
    return sweep("exact_pruning_bound", instances, seed,
                 [](const TinyPOMDP& tiny, const PruningStrategy& strategy, std::uint64_t s) {
                     const Policy policy = history_hash_policy(tiny.model.actions, s);
                     const double full = exact_value(tiny, policy);
                     const ExactPruned pruned = exact_value_pruned(tiny, policy, strategy);
                     return std::pair{std::abs(full - pruned.value), pruned.bound};
                 });
}

std::vector<FamilyResult> verify_regret(std::size_t instances, std::uint64_t seed) {
    return sweep("policy_regret_bound", instances, seed,
                 [](const TinyPOMDP& tiny, const PruningStrategy& strategy, std::uint64_t) {
                     const RegretCheck r = optimal_regret_check(tiny, strategy);
                     return std::pair{r.regret, r.bound};
                 });
}

std::vector<FamilyResult> verify_all(std::size_t instances, std::ostream& out, std::uint64_t seed) {
    std::vector<FamilyResult> all{verify_zero_budget(instances, seed)};
    for (auto&& part : {verify_estimator_bound(instances, seed), verify_exact_bound(instances, seed),
                        verify_regret(instances, seed)})
        all.insert(all.end(), part.begin(), part.end());
    for (const auto& r : all) {
        out << (r.ok() ? "PASS " : "FAIL ") << r.name << ": " << r.passed << "/" << r.total
            << " (worst margin " << r.worst_margin << ", " << r.nontrivial
            << " with a positive bound, max gap/bound " << r.max_ratio << ")";
        if (!r.first_failure.empty()) out << " first failure: " << r.first_failure;
        out << '\n';
    }
    return all;
}

}  // namespace ambiplan
