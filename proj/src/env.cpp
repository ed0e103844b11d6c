#include "ambiplan/env.hpp"

#include "ambiplan/errors.hpp"

#include <cmath>

namespace ambiplan {

namespace {

Vector draw_gaussian(const Vector& mean, const Matrix& cov, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Vector eps(mean.size());
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = normal(rng);
    return mean + psd_sqrt(cov) * eps;
}

void require(bool ok, const char* key, const std::string& what) {
    if (!ok) throw ConfigError(std::string("world override '") + key + "': " + what);
}

Vector vec2(const std::vector<double>& v, const char* key) {
    require(v.size() == 2, key, "expected a 2-vector");
    return Vector{{v[0], v[1]}};
}

Vector vec2(double x, double y) { return Vector{{x, y}}; }

}  // namespace

Vector GroundTruth::state() const {
    const auto d = agent_pos.size();
    Vector x(d * static_cast<Eigen::Index>(1 + landmark_pos.size()));
    x.head(d) = agent_pos;
    for (std::size_t l = 0; l < landmark_pos.size(); ++l) x.segment(d * static_cast<Eigen::Index>(1 + l), d) = landmark_pos[l];
    return x;
}

StepOutcome world_step(const GroundTruth& truth, const Action& action, const WorldModel& model) {
    const auto d = static_cast<Eigen::Index>(model.agent_dim);
    if (truth.agent_pos.size() != d || action.displacement.size() != d)
        throw ContractViolation("ground truth or action dimension mismatch");
    StepOutcome out{truth, {}, 0};
    out.truth.agent_pos = draw_gaussian(truth.agent_pos + action.displacement,
                                        model.process_noise.topLeftCorner(d, d), out.truth.rng);

    const Vector x = out.truth.state();
    const std::vector<double> prior = model.association_prior_for(x);
    std::discrete_distribution<int> pick(prior.begin(), prior.end());
    out.association = pick(out.truth.rng);
    const Vector clean = model.obs_matrices[static_cast<std::size_t>(out.association)] * x;
    out.z.value = draw_gaussian(clean, model.obs_noise, out.truth.rng);
    return out;
}

double reward_fn(const Vector& x, const Vector& target, double d_max) {
    if (x.size() < target.size()) throw ContractViolation("state is shorter than the target");
    return -std::min((x.head(target.size()) - target).norm(), d_max);
}

std::string_view to_string(Preset preset) {
    return preset == Preset::two_landmark ? "two_landmark" : "waypoint_course";
}

std::optional<Preset> parse_preset(std::string_view name) {
    if (name == "two_landmark") return Preset::two_landmark;
    if (name == "waypoint_course") return Preset::waypoint_course;
    return std::nullopt;
}

World make_world(Preset preset, const WorldOverrides& o, std::uint64_t seed) {
    const bool waypoint = preset == Preset::waypoint_course;

    const double process_var = o.process_var.value_or(0.05);
    const double obs_var = o.obs_var.value_or(0.1);
    const double landmark_var = o.landmark_prior_var.value_or(0.5);
    const double step = o.step_size.value_or(1.0);
    const double d_max = o.d_max.value_or(50.0);
    const double radius = o.waypoint_radius.value_or(1.0);
    const int roots = o.root_hypotheses.value_or(2);
    const double root_sep = o.root_separation.value_or(1.0);
    const double root_var = o.root_var.value_or(0.1);
    const bool frozen = o.freeze_landmarks.value_or(false);
    const bool sample_landmarks = o.sample_landmarks.value_or(true);
    const int horizon = o.horizon.value_or(10);
    const int steps = o.episode_steps.value_or(waypoint ? 60 : 20);

    require(process_var >= 0.0, "process_var", "must be non-negative");
    require(obs_var > 0.0, "obs_var", "must be positive");
    require(landmark_var >= 0.0, "landmark_prior_var", "must be non-negative");
    require(step > 0.0, "step_size", "must be positive");
    require(d_max > 0.0, "d_max", "must be positive");
    require(radius > 0.0, "waypoint_radius", "must be positive");
    require(roots == 1 || roots == 2, "root_hypotheses", "must be 1 or 2");
    require(root_sep >= 0.0, "root_separation", "must be non-negative");
    require(root_var > 0.0, "root_var", "must be positive");
    require(horizon >= 1, "horizon", "must be at least 1");
    require(steps >= 1, "episode_steps", "must be at least 1");

    const Vector start = o.start ? vec2(*o.start, "start") : vec2(0.0, 0.0);
    const Matrix eye = Matrix::Identity(2, 2);

    LandmarkModelParams params;
    params.agent_dim = 2;
    params.agent_process_cov = process_var * eye;
    params.obs_cov = obs_var * eye;
    params.step_size = step;
    params.d_max = d_max;

    std::vector<std::vector<int>> target_sources;
    if (waypoint) {
        require(!o.goal, "goal", "not used by waypoint_course (targets are fixed)");
        require(!o.num_landmarks, "num_landmarks", "not used by waypoint_course");
        require(!o.landmark_separation && !o.landmark_x, "landmark_separation",
                "not used by waypoint_course; use landmark_offset");
        const double off = o.landmark_offset.value_or(2.0);
        require(off > 0.0, "landmark_offset", "must be positive");
        params.targets = {vec2(20.0, 0.0), vec2(20.0, 20.0), vec2(0.0, 20.0)};
        // Each pair straddles its waypoint, perpendicular to the leg that approaches it.
        params.landmarks = {vec2(20.0, off),  vec2(20.0, -off), vec2(20.0 - off, 20.0),
                            vec2(20.0 + off, 20.0), vec2(0.0, 20.0 + off), vec2(0.0, 20.0 - off)};
        target_sources = {{0, 1}, {2, 3}, {4, 5}};
    } else {
        require(!o.landmark_offset, "landmark_offset", "not used by two_landmark; use landmark_separation");
        const int num = o.num_landmarks.value_or(2);
        require(num == 1 || num == 2, "num_landmarks", "must be 1 or 2");
        const double sep = o.landmark_separation.value_or(2.0);
        require(sep > 0.0, "landmark_separation", "must be positive");
        const double lx = o.landmark_x.value_or(5.0);
        params.targets = {o.goal ? vec2(*o.goal, "goal") : vec2(10.0, 0.0)};
        if (num == 1) {
            params.landmarks = {vec2(lx, 0.0)};
        } else {
            params.landmarks = {vec2(lx, 0.5 * sep), vec2(lx, -0.5 * sep)};
        }
    }
    params.landmark_covs.assign(params.landmarks.size(), (frozen ? 0.0 : landmark_var) * eye);

    World world;
    world.preset = preset;
    world.horizon = static_cast<std::size_t>(horizon);
    world.episode_steps = static_cast<std::size_t>(steps);
    try {
        world.model = make_landmark_model(params);
    } catch (const ContractViolation& e) {
        throw ConfigError(std::string("world override produced an invalid model: ") + e.what());
    }
    world.model.waypoint_radius = radius;
    world.model.target_sources = std::move(target_sources);
    world.model.validate();

    world.truth.rng.seed(mix_seed(seed, 0x6772'6f75'6e64ULL));
    world.truth.agent_pos = start;
    for (std::size_t l = 0; l < params.landmarks.size(); ++l) {
        world.truth.landmark_pos.push_back(sample_landmarks
                                               ? draw_gaussian(params.landmarks[l], params.landmark_covs[l], world.truth.rng)
                                               : params.landmarks[l]);
    }

    const auto n = static_cast<Eigen::Index>(world.model.state_dim());
    ConditionalBelief base;
    base.mean = Vector::Zero(n);
    base.covariance = Matrix::Zero(n, n);
    base.mean.head(2) = start;
    base.covariance.topLeftCorner(2, 2) = root_var * eye;
    for (std::size_t l = 0; l < params.landmarks.size(); ++l) {
        const auto at = static_cast<Eigen::Index>(2 * (1 + l));
        base.mean.segment(at, 2) = params.landmarks[l];
        base.covariance.block(at, at, 2, 2) = params.landmark_covs[l];
    }
    if (roots == 1) {
        world.root = MixtureBelief::single(std::move(base));
    } else {
        Vector leg = params.targets.front() - start;
        if (leg.norm() == 0.0) leg = vec2(1.0, 0.0);
        const Vector perp = vec2(-leg(1), leg(0)).normalized();
        std::vector<Component> comps(2);
        for (int k = 0; k < 2; ++k) {
            comps[static_cast<std::size_t>(k)].label.root = k;
            comps[static_cast<std::size_t>(k)].belief = base;
            comps[static_cast<std::size_t>(k)].belief.mean.head(2) += (k == 0 ? 0.5 : -0.5) * root_sep * perp;
        }
        world.root = MixtureBelief(std::move(comps), 0);
    }
    return world;
}

std::size_t advance_waypoints(WorldModel& model, const Vector& true_agent_pos, std::vector<bool>& reached) {
    if (reached.size() != model.targets.size()) reached.assign(model.targets.size(), false);
    std::size_t count = 0;
    while (!reached[model.active_target] &&
           (true_agent_pos - model.targets[model.active_target]).norm() <= model.waypoint_radius) {
        reached[model.active_target] = true;
        ++count;
        if (model.active_target + 1 < model.targets.size()) ++model.active_target;
    }
    return count;
}

}  // namespace ambiplan
