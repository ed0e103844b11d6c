#include "ambiplan/belief.hpp"

#include "ambiplan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace ambiplan {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

std::string who_string(const HypothesisLabel* who) {
    return who ? " for hypothesis " + to_string(*who) : std::string{};
}

}  // namespace

double log_sum_exp(std::span<const double> values) {
    double peak = kNegInf;
    for (double v : values) peak = std::max(peak, v);
    if (peak == kNegInf || std::isnan(peak)) return peak;
    double acc = 0.0;
    for (double v : values) acc += std::exp(v - peak);
    return peak + std::log(acc);
}

Matrix psd_sqrt(const Matrix& cov) {
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() == Eigen::Success) {
        Matrix l = llt.matrixL();
        if ((l.diagonal().array() > 1e-150).all()) return l;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal();
}

void ConditionalBelief::validate() const {
    if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
        throw ContractViolation("covariance dimension does not match mean dimension");
    const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw ContractViolation("covariance is not symmetric");
    if (mean.size() > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(covariance, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-9 * scale) throw ContractViolation("covariance is not PSD");
    }
}

double Component::weight() const { return std::exp(log_weight); }

MixtureBelief::MixtureBelief(std::vector<Component> components, std::size_t history_len)
    : components_(std::move(components)), history_len_(history_len) {
    if (components_.empty()) throw ContractViolation("mixture belief needs at least one component");
    std::vector<double> lw;
    lw.reserve(components_.size());
    for (const auto& c : components_) lw.push_back(c.log_weight);
    const double norm = log_sum_exp(lw);
    if (!std::isfinite(norm)) throw TotalLikelihoodCollapse("all mixture weights are zero");
    const std::size_t len = history_len_;
    const auto dim = components_.front().belief.mean.size();
    for (auto& c : components_) {
        c.log_weight -= norm;
        if (c.label.length() != len) throw ContractViolation("label length differs from history length");
        if (c.belief.mean.size() != dim || c.belief.covariance.rows() != dim)
            throw ContractViolation("component dimensions differ");
    }
}

MixtureBelief MixtureBelief::single(ConditionalBelief belief) {
    std::vector<Component> comps(1);
    comps[0].belief = std::move(belief);
    return MixtureBelief(std::move(comps), 0);
}

std::size_t MixtureBelief::dim() const { return components_.empty() ? 0 : components_.front().belief.dim(); }

std::vector<double> MixtureBelief::weights() const {
    std::vector<double> out;
    out.reserve(components_.size());
    for (const auto& c : components_) out.push_back(c.weight());
    return out;
}

std::size_t MixtureBelief::max_weight_index() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < components_.size(); ++i) {
        const auto& c = components_[i];
        const auto& b = components_[best];
        if (c.log_weight > b.log_weight || (c.log_weight == b.log_weight && c.label < b.label)) best = i;
    }
    return best;
}

void MixtureBelief::validate() const {
    if (components_.empty()) throw ContractViolation("mixture belief is empty");
    double total = 0.0;
    std::vector<const HypothesisLabel*> labels;
    labels.reserve(components_.size());
    for (const auto& c : components_) {
        if (c.label.length() != history_len_) throw ContractViolation("label length differs from history length");
        c.belief.validate();
        total += c.weight();
        labels.push_back(&c.label);
    }
    if (std::abs(total - 1.0) > 1e-12 + 4e-16 * static_cast<double>(components_.size()))
        throw ContractViolation("mixture weights do not sum to one");
    std::sort(labels.begin(), labels.end(), [](auto* a, auto* b) { return *a < *b; });
    for (std::size_t i = 1; i < labels.size(); ++i) {
        if (*labels[i] == *labels[i - 1]) throw ContractViolation("duplicate hypothesis label " + to_string(*labels[i]));
    }
}

Predictive::Predictive(Vector mean, Matrix covariance) : mean_(std::move(mean)), covariance_(std::move(covariance)) {
    symmetrize(covariance_);
    llt_.compute(covariance_);
    degenerate_ = llt_.info() != Eigen::Success;
    if (!degenerate_) {
        const auto diag = llt_.matrixLLT().diagonal();
        if ((diag.array() <= 0.0).any() || !diag.allFinite()) {
            degenerate_ = true;
        } else {
            log_norm_ = -0.5 * static_cast<double>(mean_.size()) * std::log(2.0 * std::numbers::pi) -
                        diag.array().log().sum();
        }
    }
}

double Predictive::log_density(const Vector& z) const {
    if (degenerate_) throw NumericalDegeneracy("density of a degenerate predictive");
    const Vector y = z - mean_;
    const Vector w = llt_.matrixL().solve(y);
    return log_norm_ - 0.5 * w.squaredNorm();
}

Vector Predictive::sample(std::mt19937_64& rng) const {
    if (degenerate_) throw NumericalDegeneracy("sampling a degenerate predictive");
    std::normal_distribution<double> normal;
    Vector eps(mean_.size());
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = normal(rng);
    return mean_ + llt_.matrixL() * eps;
}

Matrix Predictive::solve(const Matrix& rhs) const {
    if (degenerate_) throw NumericalDegeneracy("solve against a degenerate predictive");
    return llt_.solve(rhs);
}

double UpdateResult::likelihood() const { return std::exp(log_likelihood); }

ConditionalBelief predict(const ConditionalBelief& belief, const Action& action, const WorldModel& model) {
    const auto n = static_cast<Eigen::Index>(model.state_dim());
    const auto d = static_cast<Eigen::Index>(model.agent_dim);
    if (belief.mean.size() != n || belief.covariance.rows() != n || belief.covariance.cols() != n)
        throw ContractViolation("belief dimension does not match the world model");
    if (action.displacement.size() != d) throw ContractViolation("action displacement dimension mismatch");
    ConditionalBelief out;
    out.mean = belief.mean;
    out.mean.head(d) += action.displacement;
    out.covariance = belief.covariance + model.process_noise;
    return out;
}

Predictive observation_predictive(const ConditionalBelief& predicted, int assoc, const WorldModel& model) {
    if (assoc < 0 || static_cast<std::size_t>(assoc) >= model.num_sources())
        throw ContractViolation("association id " + std::to_string(assoc) + " is not a valid source");
    const Matrix& h = model.obs_matrices[static_cast<std::size_t>(assoc)];
    if (h.cols() != predicted.mean.size()) throw ContractViolation("belief dimension does not match the world model");
    return Predictive(h * predicted.mean, h * predicted.covariance * h.transpose() + model.obs_noise);
}

double observation_log_likelihood(const Predictive& predictive, const Vector& z, const WorldModel& model) {
    const double log_p = predictive.log_density(z);
    if (!model.discrete_observations()) return log_p;
    std::vector<double> support;
    support.reserve(model.observation_support.size());
    for (const auto& zj : model.observation_support) support.push_back(predictive.log_density(zj));
    return log_p - log_sum_exp(support);
}

UpdateResult conditional_update(const ConditionalBelief& belief, const Observation& z, int assoc,
                                const WorldModel& model, const HypothesisLabel* who) {
    if (z.value.size() != static_cast<Eigen::Index>(model.obs_dim()))
        throw ContractViolation("observation dimension mismatch");
    const Predictive pred = observation_predictive(belief, assoc, model);
    if (pred.degenerate())
        throw NumericalDegeneracy("singular innovation covariance" + who_string(who) + " (source " +
                                  std::to_string(assoc) + ")");
    const Matrix& h = model.obs_matrices[static_cast<std::size_t>(assoc)];
    const Matrix hp = h * belief.covariance;                  // m x n
    const Matrix gain = pred.solve(hp).transpose();           // n x m
    UpdateResult out;
    out.posterior.mean = belief.mean + gain * (z.value - pred.mean());
    out.posterior.covariance = belief.covariance - gain * hp;
    symmetrize(out.posterior.covariance);
    out.log_likelihood = observation_log_likelihood(pred, z.value, model);
    return out;
}

std::vector<double> posterior_weights(std::span<const double> parent_weights, std::span<const double> assoc_prior,
                                      std::span<const double> likelihoods) {
    const std::size_t num_l = assoc_prior.size();
    if (likelihoods.size() != parent_weights.size() * num_l)
        throw ContractViolation("likelihood count must equal parents x associations");
    std::vector<double> lw;
    lw.reserve(likelihoods.size());
    for (std::size_t i = 0; i < parent_weights.size(); ++i) {
        for (std::size_t l = 0; l < num_l; ++l) {
            lw.push_back(std::log(parent_weights[i]) + std::log(assoc_prior[l]) + std::log(likelihoods[i * num_l + l]));
        }
    }
    const double norm = log_sum_exp(lw);
    if (!std::isfinite(norm)) throw TotalLikelihoodCollapse("all posterior weights are zero");
    for (auto& v : lw) v = std::exp(v - norm);
    return lw;
}

std::vector<ChildHypothesis> expand_hypotheses(const MixtureBelief& b, const Action& action, const Observation& z,
                                               const WorldModel& model) {
    std::vector<ChildHypothesis> children;
    children.reserve(b.size() * model.num_sources());
    const auto& comps = b.components();
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const auto& parent = comps[i];
        const ConditionalBelief predicted = predict(parent.belief, action, model);
        const std::vector<double> prior = model.association_prior_for(predicted.mean);
        for (std::size_t l = 0; l < prior.size(); ++l) {
            if (prior[l] <= 0.0) continue;
            const int assoc = static_cast<int>(l);
            UpdateResult upd = conditional_update(predicted, z, assoc, model, &parent.label);
            ChildHypothesis child;
            child.parent = i;
            child.association = assoc;
            child.log_assoc_prior = std::log(prior[l]);
            child.log_likelihood = upd.log_likelihood;
            child.component.label = parent.label.extended(assoc);
            child.component.log_weight = parent.log_weight + child.log_assoc_prior + upd.log_likelihood;
            child.component.belief = std::move(upd.posterior);
            children.push_back(std::move(child));
        }
    }
    return children;
}

MixtureBelief mixture_update(const MixtureBelief& b, const Action& action, const Observation& z,
                             const WorldModel& model) {
    auto children = expand_hypotheses(b, action, z, model);
    std::vector<Component> comps;
    comps.reserve(children.size());
    for (auto& c : children) comps.push_back(std::move(c.component));
    return MixtureBelief(std::move(comps), b.history_len() + 1);
}

double component_reward(const ConditionalBelief& belief, const HypothesisLabel& label, const WorldModel& model,
                        std::size_t n_state_samples, std::uint64_t seed) {
    if (n_state_samples == 0) throw ContractViolation("n_state_samples must be at least 1");
    if (model.reward_kind == RewardKind::constant) return model.reward_constant;

    const auto d = static_cast<Eigen::Index>(model.agent_dim);
    const Vector mean = belief.mean.head(d);
    const Matrix root = psd_sqrt(belief.covariance.topLeftCorner(d, d));
    const Vector& target = model.target();
    auto reward_at = [&](const Vector& pos) { return -std::min((pos - target).norm(), model.d_max); };

    // Antithetic pairs: the odd moments of the sampling error cancel.
    std::mt19937_64 rng(mix_seed(seed, label.hash()));
    std::normal_distribution<double> normal;
    Vector eps(d);
    double total = 0.0;
    std::size_t drawn = 0;
    while (drawn < n_state_samples) {
        for (Eigen::Index i = 0; i < d; ++i) eps(i) = normal(rng);
        const Vector offset = root * eps;
        total += reward_at(mean + offset);
        ++drawn;
        if (drawn < n_state_samples) {
            total += reward_at(mean - offset);
            ++drawn;
        }
    }
    return total / static_cast<double>(n_state_samples);
}

double mixture_reward(const MixtureBelief& b, const WorldModel& model, std::size_t n_state_samples,
                      std::uint64_t seed) {
    double total = 0.0;
    for (const auto& c : b.components()) {
        total += c.weight() * component_reward(c.belief, c.label, model, n_state_samples, seed);
    }
    return total;
}

}  // namespace ambiplan
