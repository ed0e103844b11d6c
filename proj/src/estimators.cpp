#include "ambiplan/estimators.hpp"

#include "ambiplan/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace ambiplan {

namespace {

/// Draws z from one predictive, honoring a discrete observation support.
Vector sample_observation(const Predictive& pred, const WorldModel& model, std::mt19937_64& rng) {
    if (!model.discrete_observations()) return pred.sample(rng);
    std::vector<double> lw;
    lw.reserve(model.observation_support.size());
    for (const auto& zj : model.observation_support) lw.push_back(pred.log_density(zj));
    const double norm = log_sum_exp(lw);
    for (auto& v : lw) v = std::exp(v - norm);
    std::discrete_distribution<std::size_t> pick(lw.begin(), lw.end());
    return model.observation_support[pick(rng)];
}

struct PairPredictive {
    std::size_t parent;
    int association;
    double log_prior;
    ConditionalBelief predicted;
    Predictive predictive;
};

/// Predicted components and their per-source predictives, parent-major.
std::vector<PairPredictive> pair_predictives(const MixtureBelief& b, const Action& action, const WorldModel& model) {
    std::vector<PairPredictive> out;
    out.reserve(b.size() * model.num_sources());
    const auto& comps = b.components();
    for (std::size_t i = 0; i < comps.size(); ++i) {
        ConditionalBelief predicted = predict(comps[i].belief, action, model);
        const std::vector<double> prior = model.association_prior_for(predicted.mean);
        for (std::size_t l = 0; l < prior.size(); ++l) {
            if (prior[l] <= 0.0) continue;
            Predictive pred = observation_predictive(predicted, static_cast<int>(l), model);
            if (pred.degenerate())
                throw NumericalDegeneracy("degenerate predictive for hypothesis " + to_string(comps[i].label) +
                                          " (source " + std::to_string(l) + ")");
            out.push_back({i, static_cast<int>(l), std::log(prior[l]), predicted, std::move(pred)});
        }
    }
    return out;
}

double mixture_log_density(const MixtureBelief& b, const std::vector<PairPredictive>& pairs, const Vector& z,
                           const WorldModel& model) {
    std::vector<double> terms;
    terms.reserve(pairs.size());
    for (const auto& p : pairs) {
        terms.push_back(b.components()[p.parent].log_weight + p.log_prior +
                        observation_log_likelihood(p.predictive, z, model));
    }
    return log_sum_exp(terms);
}

struct HistoryScratch {
    std::vector<ActionId> actions;
    std::vector<Vector> observations;
};

void grow_tree(ObservationTree& tree, std::size_t node_index, const MixtureBelief& sampling, const Policy& policy,
               const WorldModel& model, const PruningStrategy& strategy, std::span<const std::size_t> samples,
               std::uint64_t seed, HistoryScratch& history) {
    const std::size_t depth = tree.nodes[node_index].depth;
    if (depth == tree.horizon) return;

    const ActionId chosen = policy(PolicyInput{sampling, depth, history.actions, history.observations});
    tree.nodes[node_index].action = chosen;
    const Action action = model.action(chosen);
    const auto pairs = pair_predictives(sampling, action, model);

    std::mt19937_64 rng(mix_seed(seed, node_index));
    std::vector<Vector> draws;
    std::vector<std::size_t> counts;
    const std::size_t n = samples[depth];
    if (model.discrete_observations()) {
        // Sample counts straight from the marginal over the support.
        std::vector<double> q;
        for (const auto& zj : model.observation_support) q.push_back(mixture_log_density(sampling, pairs, zj, model));
        const double norm = log_sum_exp(q);
        for (auto& v : q) v = std::exp(v - norm);
        std::discrete_distribution<std::size_t> pick(q.begin(), q.end());
        std::vector<std::size_t> hits(q.size(), 0);
        std::vector<std::size_t> first_seen;
        for (std::size_t s = 0; s < n; ++s) {
            const std::size_t j = pick(rng);
            if (hits[j]++ == 0) first_seen.push_back(j);
        }
        for (std::size_t j : first_seen) {
            draws.push_back(model.observation_support[j]);
            counts.push_back(hits[j]);
        }
    } else {
        std::vector<double> w = sampling.weights();
        std::discrete_distribution<std::size_t> pick_parent(w.begin(), w.end());
        for (std::size_t s = 0; s < n; ++s) {
            const std::size_t parent = pick_parent(rng);
            std::vector<std::size_t> options;
            std::vector<double> prior;
            for (std::size_t k = 0; k < pairs.size(); ++k) {
                if (pairs[k].parent == parent) {
                    options.push_back(k);
                    prior.push_back(std::exp(pairs[k].log_prior));
                }
            }
            std::discrete_distribution<std::size_t> pick_source(prior.begin(), prior.end());
            draws.push_back(sample_observation(pairs[options[pick_source(rng)]].predictive, model, rng));
            counts.push_back(1);
        }
    }

    for (std::size_t k = 0; k < draws.size(); ++k) {
        SampleNode child;
        child.depth = depth + 1;
        child.parent = node_index;
        child.z.value = draws[k];
        child.log_proposal = mixture_log_density(sampling, pairs, draws[k], model);
        child.multiplicity = counts[k];
        const std::size_t child_index = tree.nodes.size();
        tree.nodes.push_back(std::move(child));
        tree.nodes[node_index].children.push_back(child_index);
    }

    const auto children = tree.nodes[node_index].children;
    for (std::size_t child_index : children) {
        const MixtureBelief posterior =
            apply_pruning(strategy, mixture_update(sampling, action, tree.nodes[child_index].z, model)).belief;
        history.actions.push_back(chosen);
        history.observations.push_back(tree.nodes[child_index].z.value);
        grow_tree(tree, child_index, posterior, policy, model, strategy, samples, seed, history);
        history.actions.pop_back();
        history.observations.pop_back();
    }
}

/// A hypothesis inside an estimator pass: its belief-level component and
/// its estimator path weight (root weight x association priors x SN weights).
struct Tracked {
    Component comp;
    double log_path = 0.0;
};

struct SnPass {
    const ObservationTree& tree;
    const WorldModel& model;
    const PruningStrategy& strategy;
    const RewardSettings& reward;
    std::vector<double> numerator;
    std::vector<double> mass;
    SnEstimate out;

    /// Prunes a normalized mixture whose components line up with `paths`.
    std::vector<Tracked> prune(const MixtureBelief& belief, const std::vector<double>& paths, std::size_t node) {
        PruneResult pr = apply_pruning(strategy, belief);
        std::vector<Tracked> survivors;
        survivors.reserve(pr.belief.size());
        double removed = 0.0;
        const auto& all = belief.components();
        const auto& kept = pr.belief.components();
        std::size_t j = 0;
        for (std::size_t i = 0; i < all.size(); ++i) {
            if (j < kept.size() && kept[j].label == all[i].label) {
                survivors.push_back({kept[j], paths[i]});
                ++j;
            } else {
                removed += std::exp(paths[i]);
            }
        }
        const std::size_t depth = tree.nodes[node].depth;
        out.max_hypotheses = std::max(out.max_hypotheses, belief.size());
        if (!pr.receipt.pruned_labels.empty()) {
            pr.receipt.depth = depth;
            out.delta_hat[depth] += removed;
            out.receipts.push_back({node, std::move(pr.receipt), removed});
        }
        return survivors;
    }

    void visit(std::size_t node_index, const std::vector<Tracked>& hyps, std::size_t history_len) {
        const SampleNode& node = tree.nodes[node_index];
        const std::size_t depth = node.depth;
        if (depth > 0) {
            const std::uint64_t node_seed = mix_seed(reward.seed, node_index);
            for (const auto& h : hyps) {
                const double p = std::exp(h.log_path);
                numerator[depth] +=
                    p * component_reward(h.comp.belief, h.comp.label, model, reward.state_samples, node_seed);
                mass[depth] += p;
            }
        }
        if (depth == tree.horizon || node.children.empty()) return;

        const Action action = model.action(node.action);
        const std::size_t num_children = node.children.size();

        struct Pair {
            std::size_t parent;
            int association;
            double log_prior;
            Vector mean;
            Vector predicted_z;
            Matrix gain;
            Matrix covariance;
            std::vector<double> log_p;
            std::vector<double> log_w;
        };
        std::vector<Pair> pairs;
        pairs.reserve(hyps.size() * model.num_sources());
        for (std::size_t i = 0; i < hyps.size(); ++i) {
            const ConditionalBelief predicted = predict(hyps[i].comp.belief, action, model);
            const std::vector<double> prior = model.association_prior_for(predicted.mean);
            for (std::size_t l = 0; l < prior.size(); ++l) {
                if (prior[l] <= 0.0) continue;
                const Predictive pred = observation_predictive(predicted, static_cast<int>(l), model);
                if (pred.degenerate())
                    throw NumericalDegeneracy("singular innovation covariance for hypothesis " +
                                              to_string(hyps[i].comp.label) + " (source " + std::to_string(l) + ")");
                const Matrix& h = model.obs_matrices[l];
                const Matrix hp = h * predicted.covariance;
                Pair p;
                p.parent = i;
                p.association = static_cast<int>(l);
                p.log_prior = std::log(prior[l]);
                p.mean = predicted.mean;
                p.predicted_z = pred.mean();
                p.gain = pred.solve(hp).transpose();
                p.covariance = predicted.covariance - p.gain * hp;
                p.covariance = 0.5 * (p.covariance + p.covariance.transpose()).eval();
                p.log_p.resize(num_children);
                p.log_w.resize(num_children);
                for (std::size_t k = 0; k < num_children; ++k) {
                    const SampleNode& child = tree.nodes[node.children[k]];
                    p.log_p[k] = observation_log_likelihood(pred, child.z.value, model);
                    p.log_w[k] = std::log(static_cast<double>(child.multiplicity)) + p.log_p[k] - child.log_proposal;
                }
                const double norm = log_sum_exp(p.log_w);
                if (!std::isfinite(norm))
                    throw TotalLikelihoodCollapse("every importance weight vanished for hypothesis " +
                                                  to_string(hyps[i].comp.label));
                for (auto& v : p.log_w) v -= norm;
                pairs.push_back(std::move(p));
            }
        }

        for (std::size_t k = 0; k < num_children; ++k) {
            const std::size_t child_index = node.children[k];
            const Vector& z = tree.nodes[child_index].z.value;
            std::vector<Component> comps;
            std::vector<double> paths;
            comps.reserve(pairs.size());
            paths.reserve(pairs.size());
            for (const auto& p : pairs) {
                Component c;
                c.label = hyps[p.parent].comp.label.extended(p.association);
                c.log_weight = hyps[p.parent].comp.log_weight + p.log_prior + p.log_p[k];
                c.belief.mean = p.mean + p.gain * (z - p.predicted_z);
                c.belief.covariance = p.covariance;
                comps.push_back(std::move(c));
                paths.push_back(hyps[p.parent].log_path + p.log_prior + p.log_w[k]);
            }
            const MixtureBelief posterior(std::move(comps), history_len + 1);
            const std::vector<Tracked> survivors = prune(posterior, paths, child_index);
            visit(child_index, survivors, history_len + 1);
        }
    }
};

SnEstimate run_sn(const MixtureBelief& root, const ObservationTree& tree, const WorldModel& model,
                  const PruningStrategy& strategy, const RewardSettings& reward) {
    if (tree.nodes.empty()) throw ContractViolation("observation tree is empty");
    SnPass pass{tree, model, strategy, reward, {}, {}, {}};
    const std::size_t T = tree.horizon;
    pass.numerator.assign(T + 1, 0.0);
    pass.mass.assign(T + 1, 0.0);
    pass.out.delta_hat.assign(T + 1, 0.0);
    pass.out.per_depth.assign(T + 1, 0.0);

    pass.out.per_depth[0] = mixture_reward(root, model, reward.state_samples, mix_seed(reward.seed, 0));
    std::vector<double> paths;
    for (const auto& c : root.components()) paths.push_back(c.log_weight);
    const std::vector<Tracked> survivors = pass.prune(root, paths, 0);
    pass.visit(0, survivors, root.history_len());

    pass.out.value = pass.out.per_depth[0];
    for (std::size_t t = 1; t <= T; ++t) {
        if (pass.mass[t] > 0.0) pass.out.per_depth[t] = pass.numerator[t] / pass.mass[t];
        pass.out.value += pass.out.per_depth[t];
    }
    return std::move(pass.out);
}

}  // namespace

Policy constant_policy(ActionId id) {
    return [id](const PolicyInput&) { return id; };
}

ActionId greedy_action(const Vector& position, const Vector& target, const WorldModel& model) {
    ActionId best = model.actions.front();
    double best_dist = std::numeric_limits<double>::infinity();
    for (ActionId id : model.actions) {
        const double dist = (position + model.action(id).displacement - target).norm();
        if (dist < best_dist) {
            best_dist = dist;
            best = id;
        }
    }
    return best;
}

Policy greedy_policy(const WorldModel& model) {
    return [&model](const PolicyInput& in) {
        const auto& c = in.belief.components()[in.belief.max_weight_index()];
        return greedy_action(c.belief.mean.head(static_cast<Eigen::Index>(model.agent_dim)), model.target(), model);
    };
}

Policy history_hash_policy(std::vector<ActionId> actions, std::uint64_t seed) {
    if (actions.empty()) throw ContractViolation("history policy needs at least one action");
    return [actions = std::move(actions), seed](const PolicyInput& in) {
        std::uint64_t h = mix_seed(seed, in.depth);
        for (ActionId a : in.actions) h = mix_seed(h, static_cast<std::uint64_t>(a) + 1);
        for (const auto& z : in.observations) {
            for (Eigen::Index i = 0; i < z.size(); ++i) h = mix_seed(h, std::bit_cast<std::uint64_t>(z(i)));
        }
        return actions[h % actions.size()];
    };
}

ProposalSample sample_proposal(const MixtureBelief& b, const Action& action, const WorldModel& model,
                               std::mt19937_64& rng) {
    const auto pairs = pair_predictives(b, action, model);
    std::vector<double> w = b.weights();
    std::discrete_distribution<std::size_t> pick_parent(w.begin(), w.end());
    const std::size_t parent = pick_parent(rng);
    std::vector<std::size_t> options;
    std::vector<double> prior;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (pairs[k].parent == parent) {
            options.push_back(k);
            prior.push_back(std::exp(pairs[k].log_prior));
        }
    }
    std::discrete_distribution<std::size_t> pick_source(prior.begin(), prior.end());
    ProposalSample out;
    out.z.value = sample_observation(pairs[options[pick_source(rng)]].predictive, model, rng);
    out.log_proposal = mixture_log_density(b, pairs, out.z.value, model);
    for (const auto& p : pairs) {
        out.child_labels.push_back(b.components()[p.parent].label.extended(p.association));
        out.child_log_density.push_back(observation_log_likelihood(p.predictive, out.z.value, model));
    }
    return out;
}

Observation draw_observation(const MixtureBelief& b, const Action& action, const WorldModel& model,
                             std::mt19937_64& rng) {
    std::vector<double> w = b.weights();
    std::discrete_distribution<std::size_t> pick_parent(w.begin(), w.end());
    const Component& c = b.components()[pick_parent(rng)];
    const ConditionalBelief predicted = predict(c.belief, action, model);
    const std::vector<double> prior = model.association_prior_for(predicted.mean);
    std::discrete_distribution<int> pick_source(prior.begin(), prior.end());
    const Predictive pred = observation_predictive(predicted, pick_source(rng), model);
    return Observation{sample_observation(pred, model, rng)};
}

double log_proposal_density(const MixtureBelief& b, const Action& action, const Vector& z, const WorldModel& model) {
    return mixture_log_density(b, pair_predictives(b, action, model), z, model);
}

std::vector<double> self_normalized_weights(std::span<const double> log_omega) {
    const double norm = log_sum_exp(log_omega);
    if (!std::isfinite(norm)) throw TotalLikelihoodCollapse("every importance weight is zero");
    std::vector<double> out;
    out.reserve(log_omega.size());
    for (double v : log_omega) out.push_back(std::exp(v - norm));
    return out;
}

std::size_t ObservationTree::leaf_count() const {
    std::size_t n = 0;
    for (const auto& node : nodes) {
        if (node.depth == horizon) n += 1;
    }
    return n;
}

ObservationTree build_observation_tree(const MixtureBelief& root, const Policy& policy, const WorldModel& model,
                                       const PruningStrategy& sampling_strategy,
                                       std::span<const std::size_t> samples_per_node, std::uint64_t seed) {
    ObservationTree tree;
    tree.horizon = samples_per_node.size();
    for (std::size_t s : samples_per_node) {
        if (s == 0) throw ContractViolation("every depth needs at least one observation sample");
    }
    tree.nodes.emplace_back();
    HistoryScratch history;
    const MixtureBelief sampling = apply_pruning(sampling_strategy, root).belief;
    grow_tree(tree, 0, sampling, policy, model, sampling_strategy, samples_per_node, seed, history);
    return tree;
}

SnEstimate sn_expected_reward(const MixtureBelief& root, const ObservationTree& tree, const WorldModel& model,
                              const RewardSettings& reward) {
    return run_sn(root, tree, model, NoPruning{}, reward);
}

SnEstimate sn_expected_reward_pruned(const MixtureBelief& root, const ObservationTree& tree, const WorldModel& model,
                                     const PruningStrategy& strategy, const RewardSettings& reward) {
    return run_sn(root, tree, model, strategy, reward);
}

double bound_estimate(std::span<const EstimatorReceipt> receipts, std::size_t horizon_T, double r_max) {
    std::vector<DepthDelta> deltas;
    deltas.reserve(receipts.size());
    for (const auto& r : receipts) deltas.push_back({r.prune.depth, r.path_mass});
    return hindsight_bound(deltas, horizon_T, r_max);
}

double bound_estimate(const SnEstimate& pruned, std::size_t horizon_T, double r_max) {
    std::vector<DepthDelta> deltas;
    for (std::size_t d = 0; d < pruned.delta_hat.size(); ++d) deltas.push_back({d, pruned.delta_hat[d]});
    return hindsight_bound(deltas, horizon_T, r_max);
}

McEstimate mc_expected_reward(const MixtureBelief& root, const Policy& policy, std::size_t depth,
                              const WorldModel& model, std::size_t rollouts, const RewardSettings& reward,
                              std::mt19937_64& rng) {
    if (rollouts == 0) throw ContractViolation("at least one rollout is required");
    const double immediate = mixture_reward(root, model, reward.state_samples, mix_seed(reward.seed, 0));
    McEstimate out;
    if (depth == 0) {
        out.value = immediate;
        return out;
    }
    std::vector<double> w = root.weights();
    std::discrete_distribution<std::size_t> pick_root(w.begin(), w.end());
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t r = 0; r < rollouts; ++r) {
        const Component& start = root.components()[pick_root(rng)];
        std::vector<Component> single{start};
        single[0].log_weight = 0.0;
        MixtureBelief b(std::move(single), root.history_len());
        std::vector<ActionId> actions;
        std::vector<Vector> observations;
        double total = 0.0;
        for (std::size_t t = 1; t <= depth; ++t) {
            const ActionId chosen = policy(PolicyInput{b, t - 1, actions, observations});
            const Action action = model.action(chosen);
            const Component& c = b.components().front();
            const ConditionalBelief predicted = predict(c.belief, action, model);
            const std::vector<double> prior = model.association_prior_for(predicted.mean);
            std::discrete_distribution<int> pick_source(prior.begin(), prior.end());
            const int assoc = pick_source(rng);
            const Predictive pred = observation_predictive(predicted, assoc, model);
            Observation z{sample_observation(pred, model, rng)};
            UpdateResult upd = conditional_update(predicted, z, assoc, model, &c.label);
            std::vector<Component> next(1);
            next[0].label = c.label.extended(assoc);
            next[0].belief = std::move(upd.posterior);
            b = MixtureBelief(std::move(next), b.history_len() + 1);
            total += component_reward(b.components().front().belief, b.components().front().label, model,
                                      reward.state_samples, mix_seed(reward.seed, t));
            actions.push_back(chosen);
            observations.push_back(z.value);
        }
        sum += total;
        sum_sq += total * total;
    }
    const double n = static_cast<double>(rollouts);
    const double mean = sum / n;
    out.value = immediate + mean;
    out.standard_error = rollouts > 1 ? std::sqrt(std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) / n) : 0.0;
    return out;
}

}  // namespace ambiplan
