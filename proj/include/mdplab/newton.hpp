#pragma once

#include "mdplab/bellman.hpp"
#include "mdplab/trace.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace mdplab {

/// Upper bound on the number of PI iterations: n^2 A / (1-lambda) log(n^2 / (1-lambda)).
inline double ye_bound(Index n, Index a, double lambda) {
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    return n2 * static_cast<double>(a) / (1.0 - lambda) * std::log(n2 / (1.0 - lambda));
}

/// FNV-1a over the action indices of a deterministic policy.
inline std::uint64_t policy_hash(const std::vector<Index>& actions) {
    std::uint64_t h = 1469598103934665603ULL;
    for (Index act : actions) {
        auto x = static_cast<std::uint64_t>(act);
        for (int byte = 0; byte < 8; ++byte) {
            h ^= (x >> (8 * byte)) & 0xffULL;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

template <typename Scalar> struct PiTrace {
    std::vector<std::vector<Index>> policies;
    std::vector<Vector<Scalar>> values;
    std::vector<Scalar> returns;
    /// |v_t - T(v_t)|_inf of each evaluated policy value.
    std::vector<Scalar> bellman_residuals;
    std::size_t iterations = 0;
    double ye_bound = 0;
};

template <typename Scalar> struct PiSolution {
    Vector<Scalar> v_star;
    Policy<Scalar> pi_star;
    PiTrace<Scalar> trace;
};

/// Howard's Policy Iteration with exact evaluation. A state keeps its current
/// action whenever that action is within kTieTol of the best one, so the loop
/// stops at the first repeated policy. `pi0` must be deterministic; when
/// absent a random deterministic policy is drawn from `seed`.
template <typename Scalar>
PiSolution<Scalar> solve_pi(const Mdp<Scalar>& mdp, const std::optional<NonDeduced<Policy<Scalar>>>& pi0 = std::nullopt,
                            std::uint64_t seed = 0) {
    const Index n = mdp.states();
    const Index a = mdp.actions();
    std::vector<Index> actions(static_cast<std::size_t>(n));
    if (pi0) {
        detail::check_policy(mdp, *pi0);
        if (!pi0->is_deterministic())
            throw ValidationError("policy iteration requires a deterministic initial policy");
        actions = pi0->argmax_actions();
    } else {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<Index> pick(0, a - 1);
        for (auto& act : actions)
            act = pick(rng);
    }

    PiTrace<Scalar> trace;
    trace.ye_bound = ye_bound(n, a, static_cast<double>(mdp.lambda()));
    // Finitely many policies and strict improvement bound the loop; the cap only
    // guards against a broken tie rule.
    const auto cap = static_cast<std::size_t>(std::ceil(trace.ye_bound)) + 1;
    for (;;) {
        const auto pi = Policy<Scalar>::deterministic(actions, a);
        Vector<Scalar> v = policy_value(mdp, pi);
        const Matrix<Scalar> q = action_values(mdp, v);
        const Vector<Scalar> tv = q.rowwise().maxCoeff();
        trace.policies.push_back(actions);
        trace.values.push_back(v);
        trace.returns.push_back(mdp.p0().dot(v));
        trace.bellman_residuals.push_back(sup_norm(v - tv));
        ++trace.iterations;

        std::vector<Index> next(actions);
        for (Index s = 0; s < n; ++s) {
            const auto si = static_cast<std::size_t>(s);
            const Index best = detail::argmax_lowest(q, s);
            if (q(s, actions[si]) < q(s, best) - Scalar(kTieTol))
                next[si] = best;
        }
        if (next == actions || trace.iterations >= cap)
            return {std::move(v), pi, std::move(trace)};
        actions = std::move(next);
    }
}

enum class StepMatch { match, mismatch, not_applicable };

template <typename Scalar> struct NewtonStepCheck {
    Vector<Scalar> pi_step;
    Vector<Scalar> newton_step;
    Scalar difference;
    StepMatch match;
};

/// Compares one PI step from v_t (evaluate the greedy policy) with the Newton
/// step v_t - J^{-1} F(v_t). Equality is only asserted where the greedy
/// policy is unique, i.e. where F is differentiable.
template <typename Scalar, typename Derived>
NewtonStepCheck<Scalar> pi_newton_step_check(const Mdp<Scalar>& mdp, const Eigen::MatrixBase<Derived>& v_t) {
    const Vector<Scalar> v = v_t;
    const auto jac = bellman_jacobian(mdp, v);
    Vector<Scalar> pi_step = policy_value(mdp, jac.greedy);
    const Vector<Scalar> f = v - bellman_values(mdp, v);
    Vector<Scalar> newton_step = v - jac.j.partialPivLu().solve(f);
    const Scalar diff = sup_norm(pi_step - newton_step);
    StepMatch match = StepMatch::not_applicable;
    if (jac.unique)
        match = diff <= Scalar(1e-8) ? StepMatch::match : StepMatch::mismatch;
    return {std::move(pi_step), std::move(newton_step), diff, match};
}

/// Newton-Raphson on F_beta(v) = v - T_beta(v) with the closed-form Jacobian.
/// `damping` scales every step; 1 is the undamped method.
template <typename Scalar>
ValueSolution<Scalar> solve_newton_smoothed(const Mdp<Scalar>& mdp, NonDeduced<Scalar> beta,
                                            const NonDeduced<Vector<Scalar>>& v0,
                                            const SolverConfig& cfg = {}, double damping = 1.0) {
    detail::check_length(mdp, v0);
    detail::check_beta(beta);
    if (!(damping > 0.0 && damping <= 1.0))
        throw ValidationError("damping must lie in (0,1]");
    detail::TraceRecorder<Scalar> rec(cfg);
    Vector<Scalar> v = v0;
    for (;;) {
        const Vector<Scalar> f = v - smoothed_bellman_apply(mdp, beta, v);
        if (rec.record(sup_norm(f), v))
            break;
        const Eigen::PartialPivLU<Matrix<Scalar>> lu(smoothed_jacobian(mdp, beta, v));
        const Vector<Scalar> step = lu.solve(f);
        if (!all_finite(step))
            throw NumericalError("smoothed Newton: Jacobian solve failed");
        v -= Scalar(damping) * step;
    }
    return {std::move(v), rec.take()};
}

} // namespace mdplab
