#pragma once

#include "ambiplan/belief.hpp"
#include "ambiplan/pruning.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace ambiplan {

/// What a policy may look at: the belief the caller maintains, the depth
/// below the root, and the action/observation history since the root.
struct PolicyInput {
    const MixtureBelief& belief;
    std::size_t depth = 0;
    std::span<const ActionId> actions;
    std::span<const Vector> observations;
};

using Policy = std::function<ActionId(const PolicyInput&)>;

Policy constant_policy(ActionId id);

/// Moves toward the active target under the mean of the max-weight hypothesis.
/// Ties go to the first action in the model's action list.
Policy greedy_policy(const WorldModel& model);

/// Deterministic pseudo-random function of the history only (never the belief).
Policy history_hash_policy(std::vector<ActionId> actions, std::uint64_t seed);

/// Action that most reduces the distance from `position` to `target`.
ActionId greedy_action(const Vector& position, const Vector& target, const WorldModel& model);

/// One observation drawn from the predictive mixture Q of a belief.
struct ProposalSample {
    Observation z;
    /// log Q(z) = log sum_beta w(beta) sum_l prior(l) p(z | beta, l).
    double log_proposal = 0.0;
    /// log p(z | beta + l) for every child hypothesis, parent-major, association-minor.
    std::vector<HypothesisLabel> child_labels;
    std::vector<double> child_log_density;
};

/// Draws a component by weight, a source by its prior and z from the pair's
/// predictive (restricted to the support in discrete worlds).
ProposalSample sample_proposal(const MixtureBelief& b, const Action& action, const WorldModel& model,
                               std::mt19937_64& rng);

/// Draws z from Q without evaluating any density beyond the chosen pair.
Observation draw_observation(const MixtureBelief& b, const Action& action, const WorldModel& model,
                             std::mt19937_64& rng);

/// log Q(z) for an arbitrary z.
double log_proposal_density(const MixtureBelief& b, const Action& action, const Vector& z, const WorldModel& model);

/// w_k = exp(log_omega_k) / sum_j exp(log_omega_j), computed in log space.
/// Throws TotalLikelihoodCollapse if every weight is zero.
std::vector<double> self_normalized_weights(std::span<const double> log_omega);

/// A tree of observation samples shared by the full and pruned estimators.
/// Actions are fixed when the tree is built, so both estimators follow the
/// same policy on the same samples.
struct SampleNode {
    std::size_t depth = 0;
    std::size_t parent = 0;
    /// Action taken at this node (meaningless at the leaves).
    ActionId action = ActionId::up;
    /// Observation that led here from the parent (empty at the root).
    Observation z;
    double log_proposal = 0.0;
    /// Number of identical draws merged into this node (discrete worlds only).
    std::size_t multiplicity = 1;
    std::vector<std::size_t> children;
};

struct ObservationTree {
    std::size_t horizon = 0;
    std::vector<SampleNode> nodes;  ///< nodes[0] is the root

    [[nodiscard]] std::size_t leaf_count() const;
};

/// Builds the tree by sampling `samples_per_node[d]` observations at every
/// depth-d node from Q of the node's sampling belief. The sampling belief is
/// the root (and every posterior) pruned by `sampling_strategy`. In discrete
/// worlds equal draws are merged with a multiplicity, which leaves every
/// estimator unchanged.
ObservationTree build_observation_tree(const MixtureBelief& root, const Policy& policy, const WorldModel& model,
                                       const PruningStrategy& sampling_strategy,
                                       std::span<const std::size_t> samples_per_node, std::uint64_t seed);

/// Receipt of one pruning event inside an estimator pass.
struct EstimatorReceipt {
    std::size_t node = 0;
    PruneReceipt prune;
    /// Estimator path mass removed by this event.
    double path_mass = 0.0;
};

struct SnEstimate {
    double value = 0.0;
    /// Expected reward per depth 0..T.
    std::vector<double> per_depth;
    std::vector<EstimatorReceipt> receipts;
    /// Sum of removed path mass per depth 0..T.
    std::vector<double> delta_hat;
    /// Largest hypothesis count seen at any node.
    std::size_t max_hypotheses = 0;
};

struct RewardSettings {
    std::size_t state_samples = 64;
    std::uint64_t seed = 0;
};

/// Full self-normalized estimate: every hypothesis is kept at every node.
SnEstimate sn_expected_reward(const MixtureBelief& root, const ObservationTree& tree, const WorldModel& model,
                              const RewardSettings& reward);

/// Same estimator over the survivors of `strategy`, applied to the root and
/// after every posterior update. The depth-0 term always uses the unpruned root.
SnEstimate sn_expected_reward_pruned(const MixtureBelief& root, const ObservationTree& tree, const WorldModel& model,
                                     const PruningStrategy& strategy, const RewardSettings& reward);

/// Hindsight bound from the per-depth path mass of a pruned estimate.
double bound_estimate(std::span<const EstimatorReceipt> receipts, std::size_t horizon_T, double r_max);
double bound_estimate(const SnEstimate& pruned, std::size_t horizon_T, double r_max);

struct McEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    /// Hypotheses carried by every posterior node. Always 1: a sampled branch
    /// commits to one association sequence.
    std::size_t hypotheses_per_node = 1;
};

/// Naive Monte-Carlo baseline: each rollout draws a root hypothesis, then one
/// association and one observation per step, and follows that single
/// hypothesis. The policy sees the single-hypothesis belief.
McEstimate mc_expected_reward(const MixtureBelief& root, const Policy& policy, std::size_t depth,
                              const WorldModel& model, std::size_t rollouts, const RewardSettings& reward,
                              std::mt19937_64& rng);

}  // namespace ambiplan
