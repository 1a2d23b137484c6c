#include "fixtures.hpp"
#include "oracles.hpp"

#include "mdplab/first_order.hpp"
#include "mdplab/harness.hpp"

#include <doctest.h>

#include <cmath>

using namespace mdplab;
using namespace fixtures;

namespace {

SolverConfig storing(double tol = 1e-10) {
    SolverConfig cfg;
    cfg.tol = tol;
    cfg.store_iterates = true;
    return cfg;
}

void check_same_trace(const SolverTrace<double>& a, const SolverTrace<double>& b) {
    REQUIRE(a.iterates.size() == b.iterates.size());
    CHECK(a.residuals == b.residuals);
    for (std::size_t t = 0; t < a.iterates.size(); ++t)
        CHECK(a.iterates[t] == b.iterates[t]);
    CHECK(a.termination == b.termination);
}

} // namespace

TEST_CASE("value iteration iterates") {
    const auto s1 = solve_vi(m1(), zeros(1), storing());
    REQUIRE(s1.trace.iterates.size() > 3);
    CHECK(s1.trace.iterates[1](0) == 1.0);
    CHECK(s1.trace.iterates[2](0) == doctest::Approx(1.9).epsilon(1e-15));
    CHECK(s1.trace.iterates[3](0) == doctest::Approx(2.71).epsilon(1e-15));
    CHECK(s1.trace.termination == Termination::converged);
    CHECK(s1.trace.final_residual() <= 1e-10);

    const auto s2 = solve_vi(m2(), zeros(2), storing());
    CHECK(s2.trace.iterates[1] == vec({1, 0}));
    CHECK(s2.trace.iterates[2] == vec({1.5, 0}));
    CHECK(s2.trace.iterates[3] == vec({1.75, 0}));
    CHECK(sup_norm(s2.v - vec({2, 0})) <= 1e-9);
    CHECK(s2.policy.argmax_actions() == std::vector<Index>{0, 0});

    const auto at_fixed_point = solve_vi(m1(), vec({10}));
    CHECK(at_fixed_point.trace.iterations() == 1);
    CHECK(at_fixed_point.trace.residuals[0] == 0.0);
    CHECK(at_fixed_point.trace.termination == Termination::converged);

    SolverConfig short_run;
    short_run.max_iter = 5;
    const auto capped = solve_vi(m1(), zeros(1), short_run);
    CHECK(capped.trace.termination == Termination::max_iter);
    CHECK(capped.trace.residuals.size() == capped.trace.iterations());
}

TEST_CASE("value computation") {
    const auto pi1 = Policy<double>::uniform(1, 1);
    check_same_trace(solve_vc(m1(), pi1, zeros(1), storing()).trace, solve_vi(m1(), zeros(1), storing()).trace);

    const auto s = solve_vc(m2(), stay(), zeros(2));
    CHECK(sup_norm(s.v - vec({2, 0})) <= 1e-10 * 1.5 / 0.5);
    const auto j = solve_vc(m2(), jump(), vec({7, 7}));
    CHECK(sup_norm(j.v) <= 1e-10 * 1.5 / 0.5);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto m = random_mdp(20, 3, 0.9, seed);
        const auto pi = Policy<double>::uniform(20, 3);
        CHECK(sup_norm(solve_vc(m, pi, zeros(20)).v - policy_value(m, pi)) <= 1e-8);
    }
}

TEST_CASE("relaxed value iteration") {
    SolverConfig one = storing();
    one.alpha = 1.0;
    check_same_trace(solve_rvi(m2(), zeros(2), one).trace, solve_vi(m2(), zeros(2), storing()).trace);

    SolverConfig half = storing();
    half.alpha = 0.5;
    CHECK(solve_rvi(m1(), zeros(1), half).trace.iterates[1](0) == 0.5);

    SolverConfig too_big;
    too_big.alpha = 2.5 / 1.9;
    CHECK_THROWS_AS(solve_rvi(m1(), zeros(1), too_big), ValidationError);
    too_big.alpha = 2.0 / 1.9;
    CHECK_THROWS_AS(solve_rvi(m1(), zeros(1), too_big), ValidationError);
    too_big.alpha = 0.0;
    CHECK_THROWS_AS(solve_rvi(m1(), zeros(1), too_big), ValidationError);
}

TEST_CASE("step-size tunings") {
    const auto a9 = avi_step_sizes(0.9);
    CHECK(a9.alpha == doctest::Approx(0.526316).epsilon(1e-6));
    CHECK(a9.gamma == doctest::Approx(0.626789).epsilon(1e-6));
    const auto a5 = avi_step_sizes(0.5);
    CHECK(a5.alpha == doctest::Approx(2.0 / 3.0));
    CHECK(a5.gamma == doctest::Approx(0.267949).epsilon(1e-6));
    const auto a0 = avi_step_sizes(1e-9);
    CHECK(a0.alpha == doctest::Approx(1.0));
    CHECK(a0.gamma == doctest::Approx(0.0));

    const auto m9 = mvi_step_sizes(0.9);
    CHECK(m9.alpha == doctest::Approx(1.392864).epsilon(1e-6));
    CHECK(m9.beta == doctest::Approx(0.392864).epsilon(1e-6));
    const auto m5 = mvi_step_sizes(0.5);
    CHECK(m5.alpha == doctest::Approx(1.071797).epsilon(1e-6));
    CHECK(m5.beta == doctest::Approx(0.071797).epsilon(1e-6));
    const auto m0 = mvi_step_sizes(1e-9);
    CHECK(m0.alpha == doctest::Approx(1.0));
    CHECK(m0.beta == doctest::Approx(0.0));

    CHECK_THROWS_AS(avi_step_sizes(1.0), ValidationError);
    CHECK_THROWS_AS(mvi_step_sizes(0.0), ValidationError);
}

TEST_CASE("accelerated and momentum value iteration") {
    SolverConfig plain = storing();
    plain.alpha = 1.0;
    plain.gamma = 0.0;
    plain.beta_momentum = 0.0;
    const auto vi = solve_vi(m2(), zeros(2), storing()).trace;
    check_same_trace(solve_avi(m2(), zeros(2), std::nullopt, plain).trace, vi);
    check_same_trace(solve_mvi(m2(), zeros(2), std::nullopt, plain).trace, vi);

    const auto avi = solve_avi(m1(), zeros(1), zeros(1), storing());
    CHECK(avi.trace.iterates[2](0) == doctest::Approx(1.0 / 1.9));
    const auto mvi = solve_mvi(m1(), zeros(1), zeros(1), storing());
    CHECK(mvi.trace.iterates[2](0) == doctest::Approx(1.392864).epsilon(1e-6));

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto m = random_mdp(30, 5, 0.9, seed);
        const auto vstar = oracle::optimal_value_by_vi(m);
        const auto a = solve_avi(m, zeros(30));
        const auto b = solve_mvi(m, zeros(30));
        CHECK(a.trace.termination == Termination::converged);
        CHECK(b.trace.termination == Termination::converged);
        CHECK(oracle::sup_distance(a.v, vstar) <= 1e-8);
        CHECK(oracle::sup_distance(b.v, vstar) <= 1e-8);
    }
}

TEST_CASE("accelerated and momentum value computation") {
    const auto pi1 = Policy<double>::uniform(1, 1);
    CHECK(solve_avc(m1(), pi1, zeros(1)).v(0) == doctest::Approx(10.0));
    CHECK(solve_mvc(m1(), pi1, zeros(1)).v(0) == doctest::Approx(10.0));

    const auto rev = generate({InstanceKind::reversible_pair, 50, 1, 0.9, 4, 1.0});
    const auto pi = Policy<double>::uniform(50, 1);
    const double sk = std::sqrt(1.0 / 19.0);
    const auto avc = solve_avc(rev, pi, zeros(50));
    const auto mvc = solve_mvc(rev, pi, zeros(50));
    CHECK(sup_norm(avc.v - policy_value(rev, pi)) <= 1e-8);
    CHECK(sup_norm(mvc.v - policy_value(rev, pi)) <= 1e-8);
    CHECK(estimate_rate(avc.trace).rate <= 1 - sk + 0.02);
    CHECK(estimate_rate(mvc.trace).rate <= (1 - sk) / (1 + sk) + 0.02);
}

TEST_CASE("divergence is detected and labelled") {
    // A 2-cycle has eigenvalue -1, so over-relaxation blows up.
    const auto cycle = generate({InstanceKind::hard_cycle, 2, 1, 0.9, 0, 1.0});
    SolverConfig cfg;
    cfg.alpha = 1.5;
    cfg.gamma = 0.0;
    const auto s = solve_avi(cycle, zeros(2), std::nullopt, cfg);
    CHECK(s.trace.termination == Termination::diverged);
    CHECK(s.trace.iterations() < cfg.max_iter);
    CHECK(s.trace.final_residual() > cfg.divergence_cap);

    SolverConfig momentum;
    momentum.alpha = 1.9;
    // Error recursion e' = -2.11 e - 0.5 e_prev has a root near -1.84.
    momentum.beta_momentum = 0.5;
    CHECK(solve_mvc(cycle, Policy<double>::uniform(2, 1), zeros(2), std::nullopt, momentum).trace.termination ==
          Termination::diverged);
}

TEST_CASE("stopping rule") {
    CHECK(stop_check(vec({0}), vec({0.0055555}), 0.1, 0.9));
    CHECK_FALSE(stop_check(vec({0}), vec({0.0055557}), 0.1, 0.9));
    CHECK(stop_check(vec({3, 4}), vec({3, 4}), 1e-12, 0.99));
    CHECK_THROWS_AS(stop_check(vec({0}), vec({0}), 0.0, 0.9), ValidationError);
    CHECK_THROWS_AS(stop_check(vec({0}), vec({0}), -1.0, 0.9), ValidationError);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto m = random_mdp(20, 4, 0.9, 100 + seed);
        const auto vstar = oracle::optimal_value_by_vi(m);
        Vector<double> v = zeros(20);
        for (;;) {
            const Vector<double> next = bellman_values(m, v);
            if (stop_check(v, next, 1e-3, 0.9)) {
                const auto greedy = greedy_actions(m, next);
                CHECK(oracle::sup_distance(policy_value(m, Policy<double>::deterministic(greedy, 4)), vstar) <=
                      1e-3);
                break;
            }
            v = next;
        }
    }
}

TEST_CASE("value iteration error and difference contraction") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const double lambda = 0.8 + 0.015 * static_cast<double>(seed);
        const auto m = random_mdp(25, 4, lambda, 200 + seed);
        const auto vstar = oracle::optimal_value_by_vi(m);
        const auto sol = solve_vi(m, zeros(25), storing());
        const long double e0 = oracle::sup_distance(sol.trace.iterates[0], vstar);
        long double bound = e0;
        for (std::size_t t = 0; t < sol.trace.iterates.size(); ++t) {
            CHECK(oracle::sup_distance(sol.trace.iterates[t], vstar) <= bound + 1e-12L);
            bound *= lambda;
        }
        const auto& it = sol.trace.iterates;
        for (std::size_t t = 0; t + 2 < it.size(); ++t)
            CHECK(sup_norm(it[t + 2] - it[t + 1]) <= lambda * sup_norm(it[t + 1] - it[t]) + 1e-13);
    }
}

TEST_CASE("mirror-descent value iteration") {
    SolverConfig greedy = storing();
    greedy.eta_mirror = std::numeric_limits<double>::infinity();
    const auto vi = solve_vi(m2(), zeros(2), storing()).trace;
    const auto md = solve_md_vi(m2(), zeros(2), Policy<double>::uniform(2, 2), greedy);
    REQUIRE(md.trace.iterates.size() == vi.iterates.size());
    for (std::size_t t = 0; t < vi.iterates.size(); ++t)
        CHECK(sup_norm(md.trace.iterates[t] - vi.iterates[t]) <= 1e-9);

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto m = random_mdp(15, 4, 0.9, seed);
        const auto a = solve_md_vi(m, zeros(15), Policy<double>::uniform(15, 4), greedy).trace;
        const auto b = solve_vi(m, zeros(15), storing()).trace;
        REQUIRE(a.iterates.size() == b.iterates.size());
        for (std::size_t t = 0; t < a.iterates.size(); ++t)
            CHECK(sup_norm(a.iterates[t] - b.iterates[t]) <= 1e-9);
    }

    const auto pi1 = Policy<double>::uniform(1, 1);
    check_same_trace(solve_md_vi(m1(), zeros(1), pi1, storing()).trace, solve_vc(m1(), pi1, zeros(1), storing()).trace);

    SolverConfig one_step;
    one_step.max_iter = 1;
    const auto first = solve_md_vi(m2(), zeros(2), Policy<double>::uniform(2, 2), one_step);
    const double e = std::exp(1.0);
    CHECK(first.policy.probs()(0, 0) == doctest::Approx(e / (e + 1.0)));
    CHECK(first.policy.probs()(0, 0) == doctest::Approx(0.7311).epsilon(1e-4));

    SolverConfig euclid;
    euclid.divergence_kind = DivergenceKind::squared_euclidean;
    euclid.max_iter = 1;
    const auto eu = solve_md_vi(m2(), zeros(2), Policy<double>::uniform(2, 2), euclid);
    // Projection of (0.5, 0.5) + (1/2)(1, 0) onto the simplex.
    CHECK(eu.policy.probs()(0, 0) == doctest::Approx(0.75));

    for (bool variant : {false, true}) {
        SolverConfig cfg;
        cfg.mirror_variant = variant;
        const auto m = random_mdp(10, 3, 0.8, 9);
        const auto sol = solve_md_vi(m, zeros(10), Policy<double>::uniform(10, 3), cfg);
        CHECK(sol.trace.termination == Termination::converged);
        CHECK(oracle::sup_distance(sol.v, oracle::optimal_value_by_vi(m)) <= 1e-8);
    }
}

TEST_CASE("mirror step pieces") {
    const Vector<double> p = project_simplex(vec({0.2, 0.9, -0.5}));
    CHECK(p.sum() == doctest::Approx(1.0));
    CHECK((p.array() >= 0).all());
    CHECK(p(2) == 0.0);
    CHECK(project_simplex(vec({0.3, 0.7})) == vec({0.3, 0.7}));

    const Vector<double> floored = floor_distribution(vec({1, 0}));
    CHECK(floored(1) > 0);
    CHECK(floored.sum() == doctest::Approx(1.0));
    CHECK(std::isfinite(bregman_divergence(vec({0.5, 0.5}), floored, DivergenceKind::kullback_leibler)));
    CHECK(bregman_divergence(vec({0.5, 0.5}), vec({0.5, 0.5}), DivergenceKind::kullback_leibler) == 0.0);
    CHECK(bregman_divergence(vec({1, 0}), vec({0, 1}), DivergenceKind::squared_euclidean) == 2.0);
}
