#pragma once

#include "ambiplan/belief.hpp"
#include "ambiplan/estimators.hpp"
#include "ambiplan/pruning.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

namespace ambiplan {

/// A 1-D landmark world with a finite observation support, small enough to
/// enumerate every (association, observation) outcome.
struct TinyPOMDP {
    WorldModel model;
    MixtureBelief root;
    std::size_t horizon = 1;

    /// (|Z| * L)^T.
    [[nodiscard]] std::size_t outcome_count() const;
    /// (|A| * |Z|)^T: size of the history tree searched by the regret check.
    [[nodiscard]] std::size_t history_count() const;
};

inline constexpr std::size_t kOutcomeBudget = 10'000;

struct TinyParams {
    std::vector<double> landmarks{2.0};
    double landmark_var = 0.2;
    double process_var = 0.1;
    double obs_var = 0.2;
    double step_size = 1.0;
    std::vector<double> support{-1.0, 1.0};
    std::vector<double> root_means{0.0};
    std::vector<double> root_weights{1.0};
    double root_var = 0.3;
    double target = 3.0;
    double d_max = 5.0;
    std::size_t horizon = 2;
    std::vector<ActionId> actions{ActionId::left, ActionId::right};
};

TinyPOMDP make_tiny(const TinyParams& params);

/// Random instance: L in {1, 2}, 2-5 support points, horizon 1-3,
/// random root mixture (1-3 components), target and clamp.
TinyPOMDP random_tiny(std::uint64_t seed);

/// The 2-observation, 2-source, horizon-2 instance used for estimator consistency.
TinyPOMDP consistency_instance();

/// Exact E[-min(|x - target|, d_max)] for the 1-D agent marginal of `belief`.
double exact_component_reward(const ConditionalBelief& belief, const WorldModel& model);
double exact_mixture_reward(const MixtureBelief& b, const WorldModel& model);

/// Exact value rho(b0) + sum_{t=1..T} E[rho(b_t)] under `policy`.
double exact_value(const TinyPOMDP& tiny, const Policy& policy);

struct ExactPruned {
    double value = 0.0;
    /// Expected pruned mass per depth 0..T under the pruned observation law.
    std::vector<double> expected_delta;
    /// r_max [T d_0 + sum_tau (T - tau + 1) E[d_tau]].
    double bound = 0.0;
};

/// Exact value of the pruned model: every enumerated posterior is pruned,
/// observation probabilities come from the pruned belief. The depth-0 term
/// uses the unpruned root, like the estimators.
ExactPruned exact_value_pruned(const TinyPOMDP& tiny, const Policy& policy, const PruningStrategy& strategy);

/// Policy as a lookup table over histories (actions and support indices).
using HistoryKey = std::vector<int>;
struct TablePolicy {
    std::map<HistoryKey, ActionId> table;
    [[nodiscard]] Policy as_policy(const WorldModel& model) const;
};

struct RegretCheck {
    double v_star = 0.0;            ///< V^{pi*}(b0), full model
    double v_full_of_pi_bar = 0.0;  ///< V^{pi_bar}(b0), full model
    double v_bar_of_pi_bar = 0.0;   ///< pruned-model value of pi_bar
    double eps_star = 0.0;          ///< exact hindsight bound of pi*
    double eps_bar = 0.0;           ///< exact hindsight bound of pi_bar
    double regret = 0.0;            ///< v_star - v_full_of_pi_bar
    double bound = 0.0;             ///< 2 max(eps_star, eps_bar)
    TablePolicy pi_star;
    TablePolicy pi_bar;
};

/// Optimal full-model value when the first action is fixed, for every action.
struct RootQ {
    ActionId action;
    double value = 0.0;
};
std::vector<RootQ> optimal_root_q(const TinyPOMDP& tiny);

/// Optimal history policies of the full and pruned models by exhaustive
/// search, and the regret of acting with the pruned-optimal one.
RegretCheck optimal_regret_check(const TinyPOMDP& tiny, const PruningStrategy& strategy);

}  // namespace ambiplan
