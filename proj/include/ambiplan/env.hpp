#pragma once

#include "ambiplan/belief.hpp"
#include "ambiplan/model.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace ambiplan {

/// Simulator state. Landmark positions stay fixed for the whole episode.
struct GroundTruth {
    Vector agent_pos;
    std::vector<Vector> landmark_pos;
    std::mt19937_64 rng;

    /// Agent position followed by every landmark, in the model's state layout.
    [[nodiscard]] Vector state() const;
};

struct StepOutcome {
    GroundTruth truth;
    Observation z;
    /// The true source. Never shown to the agent; kept for tests and traces.
    int association = 0;
};

/// Moves the agent (displacement plus process noise), draws the true source
/// from the association prior at the true state, and measures landmark - agent.
StepOutcome world_step(const GroundTruth& truth, const Action& action, const WorldModel& model);

/// -min(||agent - target||, d_max), where the agent block is the head of `x`.
double reward_fn(const Vector& x, const Vector& target, double d_max);

enum class Preset { two_landmark, waypoint_course };

std::string_view to_string(Preset preset);
std::optional<Preset> parse_preset(std::string_view name);

/// Optional adjustments to a preset. Unset fields keep the preset default.
struct WorldOverrides {
    std::optional<double> process_var;
    std::optional<double> obs_var;
    std::optional<double> landmark_prior_var;
    std::optional<double> step_size;
    std::optional<double> d_max;
    std::optional<double> waypoint_radius;
    std::optional<std::vector<double>> start;
    std::optional<std::vector<double>> goal;
    /// two_landmark only: 1 or 2 sources.
    std::optional<int> num_landmarks;
    /// two_landmark: distance between the two landmarks.
    std::optional<double> landmark_separation;
    /// two_landmark: x coordinate of the landmark pair.
    std::optional<double> landmark_x;
    /// waypoint_course: perpendicular offset of each landmark from its waypoint.
    std::optional<double> landmark_offset;
    /// Number of equally weighted root hypotheses (1 or 2).
    std::optional<int> root_hypotheses;
    /// Distance between the two root hypothesis means (perpendicular to the first leg).
    std::optional<double> root_separation;
    std::optional<double> root_var;
    /// Zero landmark prior covariance; the landmarks are then known exactly.
    std::optional<bool> freeze_landmarks;
    /// Draw the true landmark positions from their prior instead of using the means.
    std::optional<bool> sample_landmarks;
    std::optional<int> horizon;
    std::optional<int> episode_steps;
};

struct World {
    Preset preset = Preset::two_landmark;
    WorldModel model;
    GroundTruth truth;
    MixtureBelief root;
    std::size_t horizon = 10;
    std::size_t episode_steps = 60;
};

/// Builds a preset world. Invalid overrides raise ConfigError naming the field.
World make_world(Preset preset, const WorldOverrides& overrides, std::uint64_t seed);

/// Advances the active target while the true agent is within the waypoint radius.
/// Returns the number of targets reached by this call.
std::size_t advance_waypoints(WorldModel& model, const Vector& true_agent_pos, std::vector<bool>& reached);

}  // namespace ambiplan
