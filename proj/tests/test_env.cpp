#include <doctest.h>

#include "ambiplan/env.hpp"
#include "ambiplan/errors.hpp"

#include <cmath>

using namespace ambiplan;

namespace {

WorldOverrides noiseless() {
    WorldOverrides o;
    o.process_var = 0.0;
    o.obs_var = 1e-16;
    o.sample_landmarks = false;
    return o;
}

/// Upper-tail chi-square probability via the regularized incomplete gamma
/// continued fraction (enough accuracy for a p > 0.01 gate).
double chi2_survival(double x, int dof) {
    const double a = 0.5 * dof;
    const double z = 0.5 * x;
    if (z < a + 1.0) {
        double sum = 1.0 / a;
        double term = sum;
        for (int n = 1; n < 500; ++n) {
            term *= z / (a + n);
            sum += term;
        }
        return 1.0 - sum * std::exp(-z + a * std::log(z) - std::lgamma(a));
    }
    double b = z + 1.0 - a;
    double c = 1e300;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        d = 1.0 / d;
        c = b + an / c;
        h *= d * c;
    }
    return std::exp(-z + a * std::log(z) - std::lgamma(a)) * h;
}

}  // namespace

TEST_CASE("world_step") {
    WorldOverrides o = noiseless();
    o.num_landmarks = 1;
    o.landmark_x = 5.0;
    World w = make_world(Preset::two_landmark, o, 1);
    SUBCASE("noiseless motion") {
        const StepOutcome s = world_step(w.truth, w.model.action(ActionId::right), w.model);
        CHECK(s.truth.agent_pos(0) == doctest::Approx(1.0));
        CHECK(s.truth.agent_pos(1) == doctest::Approx(0.0));
        CHECK(s.association == 0);
        CHECK(s.z.value(0) == doctest::Approx(4.0).epsilon(1e-5));
        CHECK(s.z.value(1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-5));
    }
    SUBCASE("landmarks never move") {
        GroundTruth t = w.truth;
        for (int i = 0; i < 5; ++i) t = world_step(t, w.model.action(ActionId::up), w.model).truth;
        CHECK(t.landmark_pos[0] == w.truth.landmark_pos[0]);
    }
}

TEST_CASE("association frequencies follow the uniform prior") {
    World w = make_world(Preset::two_landmark, WorldOverrides{}, 7);
    std::array<int, 2> counts{0, 0};
    GroundTruth t = w.truth;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const StepOutcome s = world_step(t, w.model.action(i % 2 ? ActionId::left : ActionId::right), w.model);
        ++counts[static_cast<std::size_t>(s.association)];
        t = s.truth;
    }
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - n / 2.0) * (c - n / 2.0) / (n / 2.0);
    CHECK(chi2_survival(chi2, 1) > 0.01);
}

TEST_CASE("reward_fn") {
    const Vector target = Vector::Zero(2);
    CHECK(reward_fn(Vector::Zero(6), target, 50.0) == 0.0);
    CHECK(reward_fn(Vector{{3.0, 0.0}}, target, 50.0) == doctest::Approx(-3.0));
    CHECK(reward_fn(Vector{{100.0, 0.0}}, target, 50.0) == doctest::Approx(-50.0));
}

TEST_CASE("make_world presets") {
    SUBCASE("waypoint course targets and landmark pairs") {
        const World w = make_world(Preset::waypoint_course, WorldOverrides{}, 3);
        REQUIRE(w.model.targets.size() == 3);
        CHECK(w.model.targets[0] == Vector{{20.0, 0.0}});
        CHECK(w.model.targets[1] == Vector{{20.0, 20.0}});
        CHECK(w.model.targets[2] == Vector{{0.0, 20.0}});
        CHECK(w.model.num_sources() == 6);
        CHECK(w.episode_steps == 60);
        CHECK(w.root.size() == 2);
        CHECK(w.root.weights()[0] == doctest::Approx(0.5));
        // Each landmark sits 2 units from its waypoint.
        for (std::size_t l = 0; l < 6; ++l)
            CHECK((w.model.landmark_means[l] - w.model.targets[l / 2]).norm() == doctest::Approx(2.0));
        CHECK(w.model.r_max() == 50.0);
    }
    SUBCASE("two landmark doubles hypotheses to 1024 at depth 10") {
        WorldOverrides o;
        o.root_hypotheses = 1;
        World w = make_world(Preset::two_landmark, o, 5);
        CHECK(w.horizon == 10);
        MixtureBelief b = w.root;
        GroundTruth t = w.truth;
        for (std::size_t d = 1; d <= w.horizon; ++d) {
            const Action a = w.model.action(ActionId::right);
            const StepOutcome s = world_step(t, a, w.model);
            b = mixture_update(b, a, s.z, w.model);
            t = s.truth;
            CHECK(b.size() == (std::size_t{1} << d));
        }
    }
    SUBCASE("a single landmark gives a unimodal belief that stays unimodal") {
        WorldOverrides o;
        o.num_landmarks = 1;
        o.root_hypotheses = 1;
        World w = make_world(Preset::two_landmark, o, 5);
        const Action a = w.model.action(ActionId::right);
        const StepOutcome s = world_step(w.truth, a, w.model);
        CHECK(mixture_update(w.root, a, s.z, w.model).size() == 1);
    }
    SUBCASE("invalid overrides name the key") {
        WorldOverrides o;
        o.obs_var = -1.0;
        try {
            (void)make_world(Preset::two_landmark, o, 1);
            FAIL("expected a config error");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("obs_var") != std::string::npos);
        }
        WorldOverrides g;
        g.goal = std::vector<double>{1.0, 2.0};
        CHECK_THROWS_AS(make_world(Preset::waypoint_course, g, 1), ConfigError);
        WorldOverrides r;
        r.root_hypotheses = 3;
        CHECK_THROWS_AS(make_world(Preset::two_landmark, r, 1), ConfigError);
    }
    SUBCASE("same seed, same world") {
        const World a = make_world(Preset::waypoint_course, WorldOverrides{}, 9);
        const World b = make_world(Preset::waypoint_course, WorldOverrides{}, 9);
        for (std::size_t l = 0; l < a.truth.landmark_pos.size(); ++l)
            CHECK(a.truth.landmark_pos[l] == b.truth.landmark_pos[l]);
    }
}

TEST_CASE("noiseless single landmark filtering") {
    WorldOverrides o = noiseless();
    o.num_landmarks = 1;
    o.root_hypotheses = 1;
    o.freeze_landmarks = true;
    World w = make_world(Preset::two_landmark, o, 2);
    MixtureBelief b = w.root;
    GroundTruth t = w.truth;
    double previous_trace = b.components()[0].belief.covariance.topLeftCorner(2, 2).trace();
    for (int i = 0; i < 8; ++i) {
        const Action a = w.model.action(i % 3 == 0 ? ActionId::up : ActionId::right);
        const StepOutcome s = world_step(t, a, w.model);
        b = mixture_update(b, a, s.z, w.model);
        t = s.truth;
        const auto& c = b.components()[0].belief;
        CHECK((c.mean.head(2) - t.agent_pos).norm() <= 1e-6);
        const double tr = c.covariance.topLeftCorner(2, 2).trace();
        CHECK(tr <= previous_trace + 1e-15);
        previous_trace = tr;
    }
}

TEST_CASE("waypoints advance inside the radius") {
    World w = make_world(Preset::waypoint_course, WorldOverrides{}, 1);
    std::vector<bool> reached;
    CHECK(advance_waypoints(w.model, Vector{{10.0, 0.0}}, reached) == 0);
    CHECK(w.model.active_target == 0);
    CHECK(advance_waypoints(w.model, Vector{{19.5, 0.5}}, reached) == 1);
    CHECK(w.model.active_target == 1);
    CHECK(reached[0]);
    CHECK(advance_waypoints(w.model, Vector{{20.0, 20.0}}, reached) == 1);
    CHECK(advance_waypoints(w.model, Vector{{0.0, 19.2}}, reached) == 1);
    CHECK(w.model.active_target == 2);
    CHECK(reached == std::vector<bool>{true, true, true});
}
