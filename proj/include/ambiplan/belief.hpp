#pragma once

#include "ambiplan/model.hpp"
#include "ambiplan/types.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ambiplan {

/// Association-conditioned Gaussian over the stacked state.
struct ConditionalBelief {
    Vector mean;
    Matrix covariance;

    [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
    /// Symmetry (1e-9 relative) and PSD (eigenvalues >= -1e-9) check.
    void validate() const;
};

struct Component {
    HypothesisLabel label;
    /// Natural log of the normalized mixture weight.
    double log_weight = 0.0;
    ConditionalBelief belief;

    [[nodiscard]] double weight() const;
};

/// Weighted set of association-conditioned Gaussians.
class MixtureBelief {
public:
    MixtureBelief() = default;
    /// Takes unnormalized log weights and normalizes them. Validates labels.
    MixtureBelief(std::vector<Component> components, std::size_t history_len);

    static MixtureBelief single(ConditionalBelief belief);

    [[nodiscard]] const std::vector<Component>& components() const { return components_; }
    [[nodiscard]] std::size_t size() const { return components_.size(); }
    [[nodiscard]] bool empty() const { return components_.empty(); }
    [[nodiscard]] std::size_t history_len() const { return history_len_; }
    [[nodiscard]] std::size_t dim() const;
    [[nodiscard]] std::vector<double> weights() const;
    /// Highest weight; ties go to the lexicographically smaller label.
    [[nodiscard]] std::size_t max_weight_index() const;

    /// Distinct labels of equal length, consistent dimensions.
    void validate() const;

private:
    std::vector<Component> components_;
    std::size_t history_len_ = 0;
};

/// Gaussian predictive of one (component, source) pair, with its Cholesky factor.
class Predictive {
public:
    Predictive(Vector mean, Matrix covariance);

    [[nodiscard]] const Vector& mean() const { return mean_; }
    [[nodiscard]] const Matrix& covariance() const { return covariance_; }
    [[nodiscard]] bool degenerate() const { return degenerate_; }
    /// Log density of the continuous Gaussian at z.
    [[nodiscard]] double log_density(const Vector& z) const;
    [[nodiscard]] Vector sample(std::mt19937_64& rng) const;
    /// covariance^{-1} * rhs via the stored factorization.
    [[nodiscard]] Matrix solve(const Matrix& rhs) const;

private:
    Vector mean_;
    Matrix covariance_;
    Eigen::LLT<Matrix> llt_;
    double log_norm_ = 0.0;
    bool degenerate_ = false;
};

struct UpdateResult {
    ConditionalBelief posterior;
    double log_likelihood = 0.0;

    [[nodiscard]] double likelihood() const;
};

/// mean' = mean + G d, covariance' = covariance + Q.
ConditionalBelief predict(const ConditionalBelief& belief, const Action& action, const WorldModel& model);

/// Predictive of z under source `assoc` for an already-predicted belief.
Predictive observation_predictive(const ConditionalBelief& predicted, int assoc, const WorldModel& model);

/// Log predictive mass/density of z. For discrete worlds the Gaussian is
/// restricted to the support and renormalized.
double observation_log_likelihood(const Predictive& predictive, const Vector& z, const WorldModel& model);

/// Conjugate measurement update against source `assoc`. The returned
/// likelihood is the predictive density of z under the prior belief.
/// `who` names the hypothesis in degeneracy errors.
UpdateResult conditional_update(const ConditionalBelief& belief, const Observation& z, int assoc,
                                const WorldModel& model, const HypothesisLabel* who = nullptr);

/// Child produced by one (parent, association) pair before normalization.
struct ChildHypothesis {
    std::size_t parent = 0;
    int association = 0;
    double log_assoc_prior = 0.0;
    double log_likelihood = 0.0;
    Component component;  ///< log_weight holds the unnormalized child weight
};

/// Predict every component, then spawn one child per admissible association.
/// Children are ordered parent-major, association-minor.
std::vector<ChildHypothesis> expand_hypotheses(const MixtureBelief& b, const Action& action,
                                               const Observation& z, const WorldModel& model);

/// Normalized posterior weights parent_w * prior * likelihood (parent-major,
/// association-minor), computed in log space.
std::vector<double> posterior_weights(std::span<const double> parent_weights, std::span<const double> assoc_prior,
                                      std::span<const double> likelihoods);

MixtureBelief mixture_update(const MixtureBelief& b, const Action& action, const Observation& z,
                             const WorldModel& model);

/// Seeded sample mean of the state reward over one component.
/// The stream is derived from (seed, label hash), never from the position.
double component_reward(const ConditionalBelief& belief, const HypothesisLabel& label, const WorldModel& model,
                        std::size_t n_state_samples, std::uint64_t seed);

/// sum_beta w(beta) * component_reward(beta).
double mixture_reward(const MixtureBelief& b, const WorldModel& model, std::size_t n_state_samples,
                      std::uint64_t seed);

/// Numerically stable log(sum(exp(values))). Returns -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> values);

/// Matrix square root S with S S^T = cov, tolerant of PSD (singular) input.
Matrix psd_sqrt(const Matrix& cov);

}  // namespace ambiplan
