#include "ambiplan/model.hpp"

#include "ambiplan/errors.hpp"

#include <cmath>
#include <string>

namespace ambiplan {

Action WorldModel::action(ActionId id) const {
    Action a;
    a.id = id;
    a.displacement = Vector::Zero(static_cast<Eigen::Index>(agent_dim));
    if (agent_dim == 1) {
        switch (id) {
            case ActionId::left: a.displacement(0) = -step_size; break;
            case ActionId::right: a.displacement(0) = step_size; break;
            default: throw ContractViolation("action '" + std::string(to_string(id)) + "' undefined in 1-D worlds");
        }
        return a;
    }
    switch (id) {
        case ActionId::up: a.displacement(1) = step_size; break;
        case ActionId::down: a.displacement(1) = -step_size; break;
        case ActionId::left: a.displacement(0) = -step_size; break;
        case ActionId::right: a.displacement(0) = step_size; break;
    }
    return a;
}

std::vector<Action> WorldModel::available_actions() const {
    std::vector<Action> out;
    out.reserve(actions.size());
    for (auto id : actions) out.push_back(action(id));
    return out;
}

Matrix WorldModel::action_lift() const {
    Matrix g = Matrix::Zero(static_cast<Eigen::Index>(state_dim()), static_cast<Eigen::Index>(agent_dim));
    g.topRows(static_cast<Eigen::Index>(agent_dim)).setIdentity();
    return g;
}

const Vector& WorldModel::target() const {
    if (active_target >= targets.size()) throw ContractViolation("active target index out of range");
    return targets[active_target];
}

double WorldModel::r_max() const {
    if (reward_kind == RewardKind::constant) return std::abs(reward_constant);
    return d_max;
}

std::vector<double> WorldModel::association_prior_for(const Vector& mean) const {
    if (!target_sources.empty()) {
        const auto& active = target_sources.at(active_target);
        std::vector<double> prior(association_prior.size(), 0.0);
        for (int l : active) prior[static_cast<std::size_t>(l)] = 1.0 / static_cast<double>(active.size());
        return prior;
    }
    if (!gating_radius) return association_prior;
    // Range gate on the predicted measurement norm; falls back to the plain prior
    // when nothing is in range.
    std::vector<double> gated(association_prior.size(), 0.0);
    double total = 0.0;
    for (std::size_t l = 0; l < obs_matrices.size(); ++l) {
        const double range = (obs_matrices[l] * mean).norm();
        if (range <= *gating_radius) {
            gated[l] = association_prior[l];
            total += gated[l];
        }
    }
    if (total <= 0.0) return association_prior;
    for (auto& p : gated) p /= total;
    return gated;
}

void WorldModel::validate() const {
    const auto n = static_cast<Eigen::Index>(state_dim());
    const auto m = static_cast<Eigen::Index>(obs_dim());
    if (agent_dim == 0 || static_cast<Eigen::Index>(agent_dim) > n)
        throw ContractViolation("agent_dim must be in [1, state_dim]");
    if (process_noise.cols() != n) throw ContractViolation("process_noise must be square");
    if (obs_noise.cols() != m || m == 0) throw ContractViolation("obs_noise must be square and non-empty");
    if (obs_matrices.empty()) throw ContractViolation("world needs at least one observation source");
    for (const auto& h : obs_matrices) {
        if (h.rows() != m || h.cols() != n) throw ContractViolation("observation matrix has wrong shape");
    }
    if (association_prior.size() != obs_matrices.size())
        throw ContractViolation("association prior size must equal the number of sources");
    double total = 0.0;
    for (double p : association_prior) {
        if (!(p >= 0.0)) throw ContractViolation("association prior entries must be non-negative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ContractViolation("association prior must sum to 1");
    if (!(d_max > 0.0)) throw ContractViolation("d_max must be positive");
    if (!(step_size > 0.0)) throw ContractViolation("step_size must be positive");
    if (reward_kind == RewardKind::negative_distance) {
        if (targets.empty()) throw ContractViolation("negative-distance reward needs a target");
        for (const auto& t : targets) {
            if (t.size() != static_cast<Eigen::Index>(agent_dim)) throw ContractViolation("target dimension mismatch");
        }
        if (active_target >= targets.size()) throw ContractViolation("active target index out of range");
    }
    if (!target_sources.empty()) {
        if (target_sources.size() != targets.size())
            throw ContractViolation("target_sources needs one source set per target");
        for (const auto& set : target_sources) {
            if (set.empty()) throw ContractViolation("target source set is empty");
            for (int l : set) {
                if (l < 0 || static_cast<std::size_t>(l) >= obs_matrices.size())
                    throw ContractViolation("target source index out of range");
            }
        }
    }
    if (actions.empty()) throw ContractViolation("world needs at least one action");
    for (auto id : actions) (void)action(id);
    for (const auto& z : observation_support) {
        if (z.size() != m) throw ContractViolation("observation support point has wrong dimension");
    }
}

WorldModel make_landmark_model(const LandmarkModelParams& params) {
    const std::size_t d = params.agent_dim;
    const std::size_t num_landmarks = params.landmarks.size();
    if (d == 0) throw ContractViolation("agent_dim must be positive");
    if (num_landmarks == 0) throw ContractViolation("landmark world needs at least one landmark");
    if (params.landmark_covs.size() != num_landmarks)
        throw ContractViolation("one prior covariance per landmark is required");
    const auto di = static_cast<Eigen::Index>(d);
    if (params.agent_process_cov.rows() != di || params.agent_process_cov.cols() != di)
        throw ContractViolation("agent process covariance has wrong shape");
    if (params.obs_cov.rows() != di || params.obs_cov.cols() != di)
        throw ContractViolation("observation covariance has wrong shape");

    const auto n = static_cast<Eigen::Index>(d * (1 + num_landmarks));
    WorldModel model;
    model.agent_dim = d;
    model.step_size = params.step_size;
    model.process_noise = Matrix::Zero(n, n);
    model.process_noise.topLeftCorner(di, di) = params.agent_process_cov;
    model.obs_noise = params.obs_cov;
    for (std::size_t l = 0; l < num_landmarks; ++l) {
        if (params.landmarks[l].size() != di) throw ContractViolation("landmark dimension mismatch");
        Matrix h = Matrix::Zero(di, n);
        h.leftCols(di) = -Matrix::Identity(di, di);
        h.block(0, static_cast<Eigen::Index>(d * (1 + l)), di, di).setIdentity();
        model.obs_matrices.push_back(std::move(h));
    }
    model.association_prior.assign(num_landmarks, 1.0 / static_cast<double>(num_landmarks));
    model.landmark_means = params.landmarks;
    model.landmark_prior_covs = params.landmark_covs;
    model.targets = params.targets;
    model.d_max = params.d_max;
    model.actions = params.actions;
    if (model.actions.empty()) {
        if (d == 1) {
            model.actions = {ActionId::left, ActionId::right};
        } else {
            model.actions.assign(kActionOrder.begin(), kActionOrder.end());
        }
    }
    model.validate();
    return model;
}

}  // namespace ambiplan
