#include <doctest.h>

#include "ambiplan/belief.hpp"
#include "ambiplan/errors.hpp"
#include "support/grid_bayes.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace ambiplan;
using ambiplan::testing::linear_world;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

ConditionalBelief gaussian1(double mean, double var) {
    return ConditionalBelief{Vector::Constant(1, mean), scalar(var)};
}

/// Two landmarks in the plane, agent at the origin.
WorldModel two_landmark_model() {
    LandmarkModelParams p;
    p.agent_dim = 2;
    p.landmarks = {Vector{{5.0, 1.0}}, Vector{{5.0, -1.0}}};
    p.landmark_covs = {Matrix::Identity(2, 2) * 0.5, Matrix::Identity(2, 2) * 0.5};
    p.agent_process_cov = Matrix::Identity(2, 2) * 0.05;
    p.obs_cov = Matrix::Identity(2, 2) * 0.1;
    p.targets = {Vector{{10.0, 0.0}}};
    p.actions = {ActionId::up, ActionId::down, ActionId::left, ActionId::right};
    return make_landmark_model(p);
}

MixtureBelief landmark_root(const WorldModel& model) {
    ConditionalBelief b;
    b.mean = Vector::Zero(6);
    b.mean.segment(2, 2) = model.landmark_means[0];
    b.mean.segment(4, 2) = model.landmark_means[1];
    b.covariance = Matrix::Identity(6, 6) * 0.5;
    b.covariance.topLeftCorner(2, 2) = Matrix::Identity(2, 2) * 0.1;
    return MixtureBelief::single(b);
}

/// Mean of |X| for X ~ N(mu, s^2 I_2): Rice distribution mean.
double rice_mean(double nu, double s) {
    const double x = -nu * nu / (2.0 * s * s);
    const double laguerre =
        std::exp(x / 2.0) * ((1.0 - x) * std::cyl_bessel_i(0.0, -x / 2.0) - x * std::cyl_bessel_i(1.0, -x / 2.0));
    return s * std::sqrt(M_PI / 2.0) * laguerre;
}

}  // namespace

TEST_CASE("predict") {
    const WorldModel model = linear_world(scalar(1.0), scalar(1.0), scalar(0.5));
    SUBCASE("1-D drift and process noise") {
        const ConditionalBelief out = predict(gaussian1(0.0, 1.0), model.action(ActionId::right), model);
        CHECK(out.mean(0) == doctest::Approx(1.0));
        CHECK(out.covariance(0, 0) == doctest::Approx(1.5));
    }
    SUBCASE("zero displacement and zero noise leave the belief unchanged") {
        WorldModel still = linear_world(scalar(1.0), scalar(1.0), scalar(0.0));
        Action stay = still.action(ActionId::right);
        stay.displacement.setZero();
        const ConditionalBelief in = gaussian1(0.3, 0.7);
        const ConditionalBelief out = predict(in, stay, still);
        CHECK(out.mean == in.mean);
        CHECK(out.covariance == in.covariance);
    }
    SUBCASE("matches grid propagation") {
        const ConditionalBelief out = predict(gaussian1(0.0, 1.0), model.action(ActionId::right), model);
        CHECK(ambiplan::testing::predict_tv(0.0, 1.0, 1.0, 0.5, out.mean(0), out.covariance(0, 0), 1e-3) < 1e-3);
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(predict(ConditionalBelief{Vector::Zero(2), Matrix::Identity(2, 2)},
                                model.action(ActionId::right), model),
                        ContractViolation);
    }
}

TEST_CASE("conditional_update") {
    SUBCASE("1-D conjugate example") {
        const WorldModel model = linear_world(scalar(1.0), scalar(1.0), scalar(0.0));
        const UpdateResult r = conditional_update(gaussian1(0.0, 1.0), Observation{Vector::Constant(1, 1.0)}, 0, model);
        CHECK(r.posterior.mean(0) == doctest::Approx(0.5));
        CHECK(r.posterior.covariance(0, 0) == doctest::Approx(0.5));
        CHECK(r.likelihood() == doctest::Approx(std::exp(-0.25) / std::sqrt(4.0 * M_PI)));
        CHECK(r.likelihood() == doctest::Approx(0.2197).epsilon(1e-3));
    }
    SUBCASE("uninformative measurement leaves the prior") {
        const WorldModel model = linear_world(scalar(1.0), scalar(1e6 * 0.8), scalar(0.0));
        const UpdateResult r = conditional_update(gaussian1(1.2, 0.8), Observation{Vector::Constant(1, 5.0)}, 0, model);
        CHECK(std::abs(r.posterior.mean(0) - 1.2) <= 1e-3 * 1.2);
        CHECK(std::abs(r.posterior.covariance(0, 0) - 0.8) <= 1e-3 * 0.8);
    }
    SUBCASE("matches grid Bayes on random cases") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto c = ambiplan::testing::random_grid_case(seed);
            const WorldModel model = linear_world(c.h, c.obs_cov, Matrix::Zero(c.h.cols(), c.h.cols()));
            const UpdateResult r = conditional_update(c.prior, Observation{c.z}, 0, model);
            const double pitch = c.h.cols() == 1 ? 1e-3 : 2e-2;
            CHECK(ambiplan::testing::update_tv(c, r.posterior, pitch) < 1e-3);
        }
    }
    SUBCASE("posterior covariance never exceeds the prior") {
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            const auto c = ambiplan::testing::random_grid_case(seed);
            const WorldModel model = linear_world(c.h, c.obs_cov, Matrix::Zero(c.h.cols(), c.h.cols()));
            const UpdateResult r = conditional_update(c.prior, Observation{c.z}, 0, model);
            const Eigen::SelfAdjointEigenSolver<Matrix> es(c.prior.covariance - r.posterior.covariance);
            CHECK(es.eigenvalues().minCoeff() >= -1e-12);
            r.posterior.validate();
        }
    }
    SUBCASE("singular innovation names the hypothesis") {
        const WorldModel model = linear_world(scalar(0.0), scalar(1.0), scalar(0.0));
        WorldModel bad = model;
        bad.obs_noise = scalar(0.0);
        const HypothesisLabel who{1, {0, 0}};
        try {
            (void)conditional_update(gaussian1(0.0, 1.0), Observation{Vector::Constant(1, 0.0)}, 0, bad, &who);
            FAIL("expected a degeneracy error");
        } catch (const NumericalDegeneracy& e) {
            CHECK(std::string(e.what()).find(to_string(who)) != std::string::npos);
        }
    }
}

TEST_CASE("mixture_update") {
    SUBCASE("Bayes arithmetic") {
        const std::vector<double> parents{0.5, 0.5};
        const std::vector<double> prior{0.5, 0.5};
        const std::vector<double> lik{1.0, 3.0, 1.0, 3.0};
        const auto w = posterior_weights(parents, prior, lik);
        REQUIRE(w.size() == 4);
        CHECK(w[0] == doctest::Approx(0.125));
        CHECK(w[1] == doctest::Approx(0.375));
        CHECK(w[2] == doctest::Approx(0.125));
        CHECK(w[3] == doctest::Approx(0.375));
    }
    SUBCASE("all-zero likelihood collapses") {
        const std::vector<double> parents{1.0};
        const std::vector<double> prior{0.5, 0.5};
        const std::vector<double> lik{0.0, 0.0};
        CHECK_THROWS_AS(posterior_weights(parents, prior, lik), TotalLikelihoodCollapse);
    }
    SUBCASE("single source commutes with conditional_update") {
        const WorldModel model = linear_world(scalar(1.0), scalar(0.3), scalar(0.2));
        std::vector<Component> comps{{HypothesisLabel{0, {}}, std::log(0.3), gaussian1(0.0, 1.0)},
                                     {HypothesisLabel{1, {}}, std::log(0.7), gaussian1(2.0, 0.5)}};
        const MixtureBelief b(comps, 0);
        const Action a = model.action(ActionId::right);
        const Observation z{Vector::Constant(1, 1.4)};
        const MixtureBelief post = mixture_update(b, a, z, model);
        REQUIRE(post.size() == 2);
        double total = 0.0;
        for (std::size_t i = 0; i < 2; ++i) {
            const UpdateResult r = conditional_update(predict(b.components()[i].belief, a, model), z, 0, model);
            CHECK(post.components()[i].belief.mean == r.posterior.mean);
            CHECK(post.components()[i].belief.covariance == r.posterior.covariance);
            total += post.components()[i].weight();
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }
    SUBCASE("two sources double the hypotheses every step") {
        const WorldModel model = two_landmark_model();
        MixtureBelief b = landmark_root(model);
        std::mt19937_64 rng(3);
        std::normal_distribution<double> n(0.0, 0.3);
        for (std::size_t d = 1; d <= 10; ++d) {
            const Observation z{Vector{{5.0 - static_cast<double>(d) + n(rng), 1.0 + n(rng)}}};
            b = mixture_update(b, model.action(ActionId::right), z, model);
            CHECK(b.size() == (std::size_t{1} << d));
            CHECK(b.history_len() == d);
            double total = 0.0;
            for (double w : b.weights()) total += w;
            CHECK(std::abs(total - 1.0) <= 1e-12);
        }
        CHECK(b.size() == 1024);
    }
}

TEST_CASE("mixture_reward") {
    WorldModel model = two_landmark_model();
    model.targets = {Vector{{0.0, 0.0}}};
    auto point = [&](double x) {
        ConditionalBelief c;
        c.mean = Vector::Zero(6);
        c.mean(0) = x;
        c.covariance = Matrix::Zero(6, 6);
        return c;
    };
    SUBCASE("weighted mean of zero-variance components") {
        const MixtureBelief b({{HypothesisLabel{0, {}}, std::log(0.6), point(2.0)},
                               {HypothesisLabel{1, {}}, std::log(0.4), point(1.0)}},
                              0);
        CHECK(mixture_reward(b, model, 8, 1) == doctest::Approx(-1.6).epsilon(1e-12));
    }
    SUBCASE("agent at the target") {
        CHECK(mixture_reward(MixtureBelief::single(point(0.0)), model, 8, 1) == 0.0);
    }
    SUBCASE("high-sample mean matches the closed form") {
        ConditionalBelief c = point(3.0);
        const double s = 0.2;
        c.covariance.topLeftCorner(2, 2) = Matrix::Identity(2, 2) * s * s;
        const std::size_t n = 100000;
        const double exact = rice_mean(3.0, s);
        const double sd = std::sqrt(9.0 + 2.0 * s * s - exact * exact);
        const double got = -mixture_reward(MixtureBelief::single(c), model, n, 42);
        CHECK(std::abs(got - exact) <= 3.0 * sd / std::sqrt(static_cast<double>(n)));
    }
    SUBCASE("component order does not matter") {
        std::vector<Component> comps;
        for (int i = 0; i < 5; ++i) {
            ConditionalBelief c = point(0.5 * i);
            c.covariance.topLeftCorner(2, 2) = Matrix::Identity(2, 2) * 0.3;
            comps.push_back({HypothesisLabel{i, {}}, std::log(1.0 + i), c});
        }
        const double forward = mixture_reward(MixtureBelief(comps, 0), model, 32, 9);
        std::reverse(comps.begin(), comps.end());
        const double backward = mixture_reward(MixtureBelief(comps, 0), model, 32, 9);
        CHECK(std::abs(forward - backward) <= 1e-12);
    }
    SUBCASE("zero samples is a contract violation") {
        CHECK_THROWS_AS(mixture_reward(MixtureBelief::single(point(0.0)), model, 0, 1), ContractViolation);
    }
}

TEST_CASE("mixture invariants") {
    SUBCASE("duplicate labels are rejected") {
        const ConditionalBelief c{Vector::Zero(1), scalar(1.0)};
        const MixtureBelief b({{HypothesisLabel{0, {}}, 0.0, c}, {HypothesisLabel{0, {}}, 0.0, c}}, 0);
        CHECK_THROWS_AS(b.validate(), ContractViolation);
    }
    SUBCASE("label lengths must match the history") {
        const ConditionalBelief c{Vector::Zero(1), scalar(1.0)};
        CHECK_THROWS_AS(MixtureBelief({{HypothesisLabel{0, {1}}, 0.0, c}}, 0), ContractViolation);
    }
    SUBCASE("asymmetric covariance fails validation") {
        ConditionalBelief c{Vector::Zero(2), Matrix::Identity(2, 2)};
        c.covariance(0, 1) = 0.5;
        CHECK_THROWS_AS(c.validate(), ContractViolation);
    }
    SUBCASE("label flat round trip and order") {
        const HypothesisLabel a{1, {0, 1, 1}};
        CHECK(HypothesisLabel::from_flat(a.flat()) == a);
        CHECK(HypothesisLabel{0, {1}} < HypothesisLabel{1, {0}});
        CHECK(HypothesisLabel{0, {0, 1}} < HypothesisLabel{0, {1, 0}});
        CHECK(a.hash() == HypothesisLabel{1, {0, 1, 1}}.hash());
        CHECK(a.hash() != HypothesisLabel{1, {0, 1, 0}}.hash());
    }
}
