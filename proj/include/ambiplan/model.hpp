#pragma once

#include "ambiplan/types.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace ambiplan {

enum class RewardKind { negative_distance, constant };

/// Linear-Gaussian POMDP with ambiguous landmark observations.
///
/// The state stacks the agent position (agent_dim) and every landmark
/// position (agent_dim each). Source `l` produces z = H_l x + v with
/// v ~ N(0, obs_noise); for landmark worlds H_l x = landmark_l - agent.
/// Actions shift the agent block by a fixed-size displacement and add
/// process noise. The model is immutable once built and freely shared.
struct WorldModel {
    std::size_t agent_dim = 2;
    double step_size = 1.0;
    Matrix process_noise;
    Matrix obs_noise;
    std::vector<Matrix> obs_matrices;
    std::vector<double> association_prior;
    std::vector<Vector> landmark_means;
    std::vector<Matrix> landmark_prior_covs;
    std::vector<Vector> targets;
    std::size_t active_target = 0;
    double d_max = 50.0;
    RewardKind reward_kind = RewardKind::negative_distance;
    double reward_constant = 0.0;
    std::vector<ActionId> actions;
    /// Non-empty turns the model into a discrete-observation world: every
    /// predictive density is restricted to these points and renormalized.
    std::vector<Vector> observation_support;
    double waypoint_radius = 1.0;
    /// Range-gating hook for the association prior. Disabled (nullopt) by default.
    std::optional<double> gating_radius;
    /// Optional per-target source sets: while target k is active only the
    /// sources in target_sources[k] are admissible (uniform among them).
    std::vector<std::vector<int>> target_sources;

    [[nodiscard]] std::size_t state_dim() const { return static_cast<std::size_t>(process_noise.rows()); }
    [[nodiscard]] std::size_t obs_dim() const { return static_cast<std::size_t>(obs_noise.rows()); }
    [[nodiscard]] std::size_t num_sources() const { return obs_matrices.size(); }
    [[nodiscard]] bool discrete_observations() const { return !observation_support.empty(); }

    [[nodiscard]] Action action(ActionId id) const;
    [[nodiscard]] std::vector<Action> available_actions() const;
    /// Lifts an agent displacement into the full state (zeros on landmark blocks).
    [[nodiscard]] Matrix action_lift() const;
    [[nodiscard]] const Vector& target() const;
    /// Bound on the magnitude (and range) of the immediate state reward.
    [[nodiscard]] double r_max() const;
    /// Association prior for a component with the given mean. Uniform unless gating is enabled.
    [[nodiscard]] std::vector<double> association_prior_for(const Vector& mean) const;

    /// Throws ContractViolation if any dimension or range constraint is broken.
    void validate() const;
};

struct LandmarkModelParams {
    std::size_t agent_dim = 2;
    std::vector<Vector> landmarks;
    std::vector<Matrix> landmark_covs;
    Matrix agent_process_cov;
    Matrix obs_cov;
    double step_size = 1.0;
    std::vector<Vector> targets;
    double d_max = 50.0;
    std::vector<ActionId> actions;
};

/// Builds the stacked agent+landmark model with z_l = landmark_l - agent + v.
WorldModel make_landmark_model(const LandmarkModelParams& params);

}  // namespace ambiplan
