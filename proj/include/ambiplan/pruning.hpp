#pragma once

#include "ambiplan/belief.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ambiplan {

/// Loss budget for adaptive pruning: a constant per-step prunable mass
/// `delta` derived from the allowable value loss `epsilon_bar`.
struct PruneBudget {
    double epsilon_bar = 0.0;
    std::size_t horizon_T = 1;
    double r_max = 1.0;
    double delta = 0.0;

    static PruneBudget from_epsilon(double epsilon_bar, std::size_t horizon_T, double r_max);
};

/// Record of one pruning step.
struct PruneReceipt {
    std::size_t depth = 0;
    /// Sum of the pruned (normalized) weights before renormalization.
    double delta_step = 0.0;
    std::vector<HypothesisLabel> pruned_labels;
};

struct PruneResult {
    MixtureBelief belief;
    PruneReceipt receipt;
};

struct NoPruning {};
struct AdaptivePruning {
    double delta = 0.0;
};
struct KBestPruning {
    std::size_t k = 1;
};
struct ThresholdPruning {
    double p_thresh = 0.0;
};

using PruningStrategy = std::variant<NoPruning, AdaptivePruning, KBestPruning, ThresholdPruning>;

std::string describe(const PruningStrategy& strategy);

/// delta = 2 eps / (r_max (T^2 + 3T)), clamped to [0, 1].
double delta_from_epsilon(double epsilon_bar, std::size_t horizon_T, double r_max);

/// Prunes smallest-first (ties: lexicographic label) while the cumulative pruned
/// mass stays <= delta. At least one component always survives. A no-op returns
/// the input unchanged, bit for bit.
PruneResult prune_adaptive(const MixtureBelief& b, double delta);

/// Keeps the k heaviest components (ties: lexicographic label).
PruneResult prune_k_best(const MixtureBelief& b, std::size_t k);

/// Drops components with weight strictly below p_thresh; keeps the heaviest if none survive.
PruneResult prune_threshold(const MixtureBelief& b, double p_thresh);

PruneResult apply_pruning(const PruningStrategy& strategy, const MixtureBelief& b);

/// Worst-case value loss guaranteed by a budget: epsilon_bar itself.
double apriori_bound(const PruneBudget& budget);

struct DepthDelta {
    std::size_t depth = 0;
    double delta = 0.0;
};

/// r_max [T d_0 + sum_{k=1..T} sum_{tau=1..k} d_tau], evaluated through the
/// closed form r_max [T d_0 + sum_tau (T - tau + 1) d_tau]. Entries sharing a
/// depth are added.
double hindsight_bound(std::span<const DepthDelta> deltas_by_depth, std::size_t horizon_T, double r_max);

}  // namespace ambiplan
