#include <doctest.h>

#include "ambiplan/env.hpp"
#include "ambiplan/errors.hpp"
#include "ambiplan/oracle.hpp"
#include "ambiplan/planner.hpp"

#include <cmath>
#include <functional>
#include <map>

using namespace ambiplan;

namespace {

PlannerConfig counted(std::size_t sims, std::uint64_t seed = 1) {
    PlannerConfig c;
    c.max_simulations = sims;
    c.seed = seed;
    c.horizon_T = 4;
    c.reward_samples = 8;
    return c;
}

World small_world(int roots, std::uint64_t seed) {
    WorldOverrides o;
    o.root_hypotheses = roots;
    o.landmark_x = 3.0;
    o.horizon = 4;
    return make_world(Preset::two_landmark, o, seed);
}

void check_tree(const BeliefNode& node, const PlannerConfig& cfg) {
    std::size_t sum = 0;
    for (const auto& e : node.edges) {
        sum += e.visit_count;
        const double cap = std::ceil(cfg.k_o * std::pow(static_cast<double>(e.visit_count), cfg.alpha_o)) + 1.0;
        CHECK(static_cast<double>(e.children.size()) <= cap);
        for (const auto& c : e.children) check_tree(*c.node, cfg);
    }
    // Leaves created by expansion carry no visits of their own.
    CHECK(node.visit_count == sum);
    CHECK(std::isfinite(node.hindsight_acc));
    CHECK(node.hindsight_acc >= 0.0);
}

}  // namespace

TEST_CASE("config validation names the field") {
    PlannerConfig c;
    c.alpha_o = 1.5;
    try {
        c.validate();
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("alpha_o") != std::string::npos);
    }
    PlannerConfig k;
    k.k = 0;
    CHECK_THROWS_AS(k.validate(), ConfigError);
    CHECK(parse_strategy("k_best") == StrategyKind::k_best);
    CHECK(!parse_strategy("bogus"));
    CHECK(parse_rollout("uniform_random") == RolloutKind::uniform_random);
}

TEST_CASE("simulate") {
    const World w = small_world(2, 1);
    const PlannerConfig cfg = counted(1);
    Planner planner(w.model, cfg);
    SUBCASE("depth zero touches nothing") {
        auto root = planner.make_root(w.root, 0.0);
        std::mt19937_64 rng(1);
        const auto r = planner.simulate(*root, 0, rng);
        CHECK(r.ret == 0.0);
        CHECK(root->visit_count == 0);
        for (const auto& e : root->edges) CHECK(e.visit_count == 0);
    }
    SUBCASE("untried actions come first in fixed order") {
        auto root = planner.make_root(w.root, 0.0);
        std::mt19937_64 rng(2);
        for (std::size_t i = 0; i < root->edges.size(); ++i) {
            CHECK(planner.select_action(*root) == i);
            planner.reset_path(0.0);
            planner.simulate(*root, 3, rng);
        }
        CHECK(root->edges[0].action.id == ActionId::up);
        CHECK(root->edges[3].action.id == ActionId::right);
    }
    SUBCASE("UCB arithmetic with the natural log") {
        auto root = planner.make_root(w.root, 0.0);
        root->edges.resize(2);
        root->visit_count = 8;
        root->edges[0].visit_count = 4;
        root->edges[1].visit_count = 2;
        root->edges[0].q_value = 1.0;
        root->edges[1].q_value = 1.0;
        CHECK(planner.select_action(*root) == 1);
        CHECK(std::sqrt(std::log(8.0) / 2.0) == doctest::Approx(1.0197).epsilon(1e-4));
        CHECK(std::sqrt(std::log(8.0) / 4.0) == doctest::Approx(0.7210).epsilon(1e-4));
    }
    SUBCASE("counts, running means and widening stay consistent") {
        auto root = planner.make_root(w.root, 0.0);
        std::mt19937_64 rng(3);
        std::map<std::size_t, std::vector<double>> returns;
        for (int i = 0; i < 200; ++i) {
            std::vector<std::size_t> before;
            for (const auto& e : root->edges) before.push_back(e.visit_count);
            planner.reset_path(0.0);
            const auto r = planner.simulate(*root, cfg.horizon_T, rng);
            for (std::size_t a = 0; a < before.size(); ++a) {
                if (root->edges[a].visit_count != before[a]) returns[a].push_back(r.ret);
            }
        }
        for (const auto& [a, rs] : returns) {
            double mean = 0.0;
            for (double v : rs) mean += v / static_cast<double>(rs.size());
            CHECK(root->edges[a].q_value == doctest::Approx(mean).epsilon(1e-9));
        }
        check_tree(*root, cfg);
    }
}

TEST_CASE("plan") {
    SUBCASE("single hypothesis world has no pruning loss") {
        WorldOverrides o;
        o.num_landmarks = 1;
        o.root_hypotheses = 1;
        const World w = make_world(Preset::two_landmark, o, 1);
        for (StrategyKind s : {StrategyKind::adaptive, StrategyKind::k_best, StrategyKind::threshold}) {
            PlannerConfig c = counted(100);
            c.strategy = s;
            c.epsilon_bar = 10.0;
            c.p_thresh = 0.3;
            const PlanResult r = plan(w.root, c, w.model);
            CHECK(r.hindsight == 0.0);
        }
    }
    SUBCASE("no pruning and a zero budget agree") {
        const World w = small_world(2, 4);
        PlannerConfig none = counted(150, 7);
        none.strategy = StrategyKind::none;
        PlannerConfig zero = counted(150, 7);
        zero.strategy = StrategyKind::adaptive;
        zero.epsilon_bar = 0.0;
        const PlanResult a = plan(w.root, none, w.model);
        const PlanResult b = plan(w.root, zero, w.model);
        CHECK(a.best_action == b.best_action);
        CHECK(a.hindsight == 0.0);
        CHECK(b.hindsight == 0.0);
        REQUIRE(a.q_table.size() == b.q_table.size());
        for (std::size_t i = 0; i < a.q_table.size(); ++i) CHECK(a.q_table[i].q_value == b.q_table[i].q_value);
        CHECK(a.apriori == 0.0);
    }
    SUBCASE("hindsight never exceeds the a-priori bound") {
        const World w = small_world(2, 5);
        for (double eps : {1.0, 5.0, 20.0}) {
            PlannerConfig c = counted(200, 3);
            c.epsilon_bar = eps;
            const PlanResult r = plan(w.root, c, w.model);
            REQUIRE(r.apriori);
            CHECK(r.hindsight <= *r.apriori + 1e-12);
            CHECK(*r.apriori == doctest::Approx(eps));
        }
    }
    SUBCASE("identical seeds give identical plans") {
        const World w = small_world(2, 6);
        PlannerConfig c = counted(120, 11);
        c.strategy = StrategyKind::k_best;
        c.k = 2;
        const PlanResult a = plan(w.root, c, w.model);
        const PlanResult b = plan(w.root, c, w.model);
        CHECK(a.best_action == b.best_action);
        CHECK(a.hindsight == b.hindsight);
        for (std::size_t i = 0; i < a.q_table.size(); ++i) CHECK(a.q_table[i].q_value == b.q_table[i].q_value);
    }
    SUBCASE("best action matches the exhaustive optimum on tiny instances") {
        int agree = 0;
        int total = 0;
        for (std::uint64_t seed = 0; total < 30; ++seed) {
            TinyPOMDP tiny = random_tiny(seed);
            if (tiny.model.actions.size() < 2) continue;
            const auto q = optimal_root_q(tiny);
            if (std::abs(q[0].value - q[1].value) < 0.05) continue;
            const ActionId best = q[0].value > q[1].value ? q[0].action : q[1].action;
            PlannerConfig c;
            c.max_simulations = 4000;
            c.horizon_T = tiny.horizon;
            c.strategy = StrategyKind::none;
            c.reward_samples = 64;
            c.seed = seed;
            const PlanResult r = plan(tiny.root, c, tiny.model);
            ++total;
            if (r.best_action == best) ++agree;
        }
        CHECK(agree >= 28);
    }
}

TEST_CASE("run_episode") {
    SUBCASE("noiseless single landmark tracks the true pose") {
        WorldOverrides o;
        o.num_landmarks = 1;
        o.root_hypotheses = 1;
        o.process_var = 0.0;
        o.obs_var = 1e-16;
        o.freeze_landmarks = true;
        o.sample_landmarks = false;
        o.horizon = 3;
        const World w = make_world(Preset::two_landmark, o, 2);
        PlannerConfig c = counted(20);
        c.horizon_T = 3;
        EpisodeOptions opt;
        opt.n_steps = 6;
        const EpisodeTrace t = run_episode(w, c, opt);
        REQUIRE(t.steps.size() == 6);
        for (const auto& s : t.steps) CHECK((s.belief_mean.head(2) - s.true_position).norm() <= 1e-6);
    }
    SUBCASE("unpruned two-landmark hypotheses double every step") {
        WorldOverrides o;
        o.root_hypotheses = 1;
        o.horizon = 2;
        const World w = make_world(Preset::two_landmark, o, 3);
        PlannerConfig c = counted(5);
        c.horizon_T = 2;
        c.strategy = StrategyKind::none;
        EpisodeOptions opt;
        opt.n_steps = 10;
        const EpisodeTrace t = run_episode(w, c, opt);
        for (const auto& s : t.steps) CHECK(s.n_hypotheses == (std::size_t{1} << (s.step + 1)));
        CHECK(t.steps.back().n_hypotheses == 1024);
    }
    SUBCASE("adaptive episodes respect the a-priori bound and replay exactly") {
        const World w = small_world(2, 4);
        PlannerConfig c = counted(40, 5);
        c.epsilon_bar = 10.0;
        EpisodeOptions opt;
        opt.n_steps = 8;
        opt.timing = false;
        const EpisodeTrace a = run_episode(w, c, opt);
        const EpisodeTrace b = run_episode(w, c, opt);
        REQUIRE(a.steps.size() == b.steps.size());
        for (std::size_t i = 0; i < a.steps.size(); ++i) {
            CHECK(a.steps[i].hindsight <= *a.steps[i].apriori + 1e-12);
            CHECK(a.steps[i].action == b.steps[i].action);
            CHECK(a.steps[i].hindsight == b.steps[i].hindsight);
            CHECK(a.steps[i].plan_wallclock_ms == 0.0);
            CHECK(a.steps[i].delta_step <= delta_from_epsilon(10.0, 4, 50.0) + 1e-15);
        }
    }
    SUBCASE("the execution cap bounds the belief") {
        WorldOverrides o;
        o.root_hypotheses = 1;
        o.horizon = 2;
        const World w = make_world(Preset::two_landmark, o, 3);
        PlannerConfig c = counted(3);
        c.horizon_T = 2;
        c.strategy = StrategyKind::none;
        EpisodeOptions opt;
        opt.n_steps = 6;
        opt.max_execution_hypotheses = 10;
        const EpisodeTrace t = run_episode(w, c, opt);
        for (const auto& s : t.steps) CHECK(s.n_hypotheses <= 10);
        CHECK(t.steps.back().delta_step > 0.0);
    }
}
