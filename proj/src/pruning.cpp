#include "ambiplan/pruning.hpp"

#include "ambiplan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ambiplan {

namespace {

/// Builds the survivor mixture and receipt from a keep-mask.
PruneResult split(const MixtureBelief& b, const std::vector<bool>& keep) {
    PruneResult out;
    std::vector<Component> survivors;
    survivors.reserve(b.size());
    const auto& comps = b.components();
    for (std::size_t i = 0; i < comps.size(); ++i) {
        if (keep[i]) {
            survivors.push_back(comps[i]);
        } else {
            out.receipt.delta_step += comps[i].weight();
            out.receipt.pruned_labels.push_back(comps[i].label);
        }
    }
    if (out.receipt.pruned_labels.empty()) {
        out.belief = b;
        out.receipt.delta_step = 0.0;
        return out;
    }
    out.belief = MixtureBelief(std::move(survivors), b.history_len());
    return out;
}

std::vector<std::size_t> order_ascending(const MixtureBelief& b) {
    std::vector<std::size_t> idx(b.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const auto& comps = b.components();
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
        if (comps[x].log_weight != comps[y].log_weight) return comps[x].log_weight < comps[y].log_weight;
        return comps[x].label < comps[y].label;
    });
    return idx;
}

std::vector<std::size_t> order_descending(const MixtureBelief& b) {
    std::vector<std::size_t> idx(b.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const auto& comps = b.components();
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
        if (comps[x].log_weight != comps[y].log_weight) return comps[x].log_weight > comps[y].log_weight;
        return comps[x].label < comps[y].label;
    });
    return idx;
}

}  // namespace

PruneBudget PruneBudget::from_epsilon(double epsilon_bar, std::size_t horizon_T, double r_max) {
    PruneBudget budget;
    budget.epsilon_bar = epsilon_bar;
    budget.horizon_T = horizon_T;
    budget.r_max = r_max;
    budget.delta = delta_from_epsilon(epsilon_bar, horizon_T, r_max);
    return budget;
}

std::string describe(const PruningStrategy& strategy) {
    std::ostringstream os;
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, NoPruning>) {
                os << "none";
            } else if constexpr (std::is_same_v<S, AdaptivePruning>) {
                os << "adaptive(delta=" << s.delta << ")";
            } else if constexpr (std::is_same_v<S, KBestPruning>) {
                os << "k_best(k=" << s.k << ")";
            } else {
                os << "threshold(p=" << s.p_thresh << ")";
            }
        },
        strategy);
    return os.str();
}

double delta_from_epsilon(double epsilon_bar, std::size_t horizon_T, double r_max) {
    if (!(r_max > 0.0)) throw ContractViolation("r_max must be positive");
    if (horizon_T < 1) throw ContractViolation("horizon must be at least 1");
    if (!(epsilon_bar >= 0.0)) throw ContractViolation("epsilon_bar must be non-negative");
    const double t = static_cast<double>(horizon_T);
    const double delta = 2.0 * epsilon_bar / (r_max * (t * t + 3.0 * t));
    return std::clamp(delta, 0.0, 1.0);
}

PruneResult prune_adaptive(const MixtureBelief& b, double delta) {
    std::vector<bool> keep(b.size(), true);
    if (delta > 0.0 && b.size() > 1) {
        const auto order = order_ascending(b);
        const auto& comps = b.components();
        double pruned = 0.0;
        for (std::size_t n = 0; n + 1 < order.size(); ++n) {
            const double w = comps[order[n]].weight();
            if (pruned + w > delta) break;
            pruned += w;
            keep[order[n]] = false;
        }
    }
    return split(b, keep);
}

PruneResult prune_k_best(const MixtureBelief& b, std::size_t k) {
    if (k < 1) throw ContractViolation("k must be at least 1");
    std::vector<bool> keep(b.size(), true);
    if (k < b.size()) {
        const auto order = order_descending(b);
        for (std::size_t n = k; n < order.size(); ++n) keep[order[n]] = false;
    }
    return split(b, keep);
}

PruneResult prune_threshold(const MixtureBelief& b, double p_thresh) {
    if (!(p_thresh >= 0.0 && p_thresh < 1.0)) throw ContractViolation("p_thresh must lie in [0, 1)");
    std::vector<bool> keep(b.size(), true);
    if (p_thresh > 0.0) {
        bool any = false;
        const auto& comps = b.components();
        for (std::size_t i = 0; i < comps.size(); ++i) {
            keep[i] = comps[i].weight() >= p_thresh;
            any = any || keep[i];
        }
        if (!any) keep[b.max_weight_index()] = true;
    }
    return split(b, keep);
}

PruneResult apply_pruning(const PruningStrategy& strategy, const MixtureBelief& b) {
    return std::visit(
        [&](const auto& s) -> PruneResult {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, NoPruning>) {
                return PruneResult{b, {}};
            } else if constexpr (std::is_same_v<S, AdaptivePruning>) {
                return prune_adaptive(b, s.delta);
            } else if constexpr (std::is_same_v<S, KBestPruning>) {
                return prune_k_best(b, s.k);
            } else {
                return prune_threshold(b, s.p_thresh);
            }
        },
        strategy);
}

double apriori_bound(const PruneBudget& budget) {
    const double t = static_cast<double>(budget.horizon_T);
    return budget.r_max * budget.delta * (t * t + 3.0 * t) / 2.0;
}

double hindsight_bound(std::span<const DepthDelta> deltas_by_depth, std::size_t horizon_T, double r_max) {
    const double t = static_cast<double>(horizon_T);
    double total = 0.0;
    for (const auto& dd : deltas_by_depth) {
        if (dd.depth > horizon_T) throw ContractViolation("delta depth exceeds the horizon");
        const double coeff = dd.depth == 0 ? t : t - static_cast<double>(dd.depth) + 1.0;
        total += coeff * dd.delta;
    }
    return r_max * total;
}

}  // namespace ambiplan
