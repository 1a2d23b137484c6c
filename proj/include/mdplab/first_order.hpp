#pragma once

#include "mdplab/bellman.hpp"
#include "mdplab/trace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace mdplab {

struct AviStepSizes {
    double alpha;
    double gamma;
};

struct MviStepSizes {
    double alpha;
    double beta;
};

inline void check_lambda(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw ValidationError("lambda must lie in the open interval (0,1)");
}

/// Nesterov tuning with mu = 1 - lambda, L = 1 + lambda.
inline AviStepSizes avi_step_sizes(double lambda) {
    check_lambda(lambda);
    const double root = std::sqrt(1.0 - lambda * lambda);
    return {1.0 / (1.0 + lambda), (1.0 - root) / lambda};
}

/// Heavy-ball tuning with mu = 1 - lambda, L = 1 + lambda.
inline MviStepSizes mvi_step_sizes(double lambda) {
    check_lambda(lambda);
    const double root = std::sqrt(1.0 - lambda * lambda);
    return {2.0 / (1.0 + root), (1.0 - root) / (1.0 + root)};
}

/// VI stopping rule: once |v_t - v_next| <= eps (1 - lambda) / (2 lambda) the
/// greedy policy of v_next is eps-optimal.
template <typename DerivedA, typename DerivedB>
bool stop_check(const Eigen::MatrixBase<DerivedA>& v_t, const Eigen::MatrixBase<DerivedB>& v_next, double epsilon,
                double lambda) {
    if (!(epsilon > 0))
        throw ValidationError("epsilon must be positive");
    check_lambda(lambda);
    if (v_t.size() != v_next.size())
        throw DimensionError("value vectors differ in length");
    const double gap = static_cast<double>(sup_norm(v_t - v_next));
    return gap <= epsilon * (1.0 - lambda) / (2.0 * lambda);
}

namespace detail {

/// v <- (1 - alpha) v + alpha op(v); alpha == 1 is the plain fixed-point step.
template <typename Scalar, typename Op>
ValueSolution<Scalar> relaxed_loop(const Op& op, Vector<Scalar> v, Scalar alpha, const SolverConfig& cfg) {
    TraceRecorder<Scalar> rec(cfg);
    for (;;) {
        Vector<Scalar> tv = op(v);
        if (rec.record(sup_norm(v - tv), v))
            break;
        if (alpha == Scalar(1))
            v = std::move(tv);
        else
            v = (Scalar(1) - alpha) * v + alpha * tv;
    }
    return {std::move(v), rec.take()};
}

/// h_t = v_t + gamma (v_t - v_{t-1}); v_{t+1} = (1 - alpha) h_t + alpha op(h_t).
template <typename Scalar, typename Op>
ValueSolution<Scalar> accelerated_loop(const Op& op, Vector<Scalar> v_prev, std::optional<Vector<Scalar>> v1,
                                       Scalar alpha, Scalar gamma, const SolverConfig& cfg) {
    TraceRecorder<Scalar> rec(cfg);
    Vector<Scalar> t_prev = op(v_prev);
    if (rec.record(sup_norm(v_prev - t_prev), v_prev))
        return {std::move(v_prev), rec.take()};
    Vector<Scalar> v = v1 ? std::move(*v1) : t_prev;
    Vector<Scalar> tv = op(v);
    for (;;) {
        if (rec.record(sup_norm(v - tv), v))
            break;
        Vector<Scalar> h = v + gamma * (v - v_prev);
        const Vector<Scalar> th = (h == v) ? tv : op(h);
        Vector<Scalar> next = (alpha == Scalar(1)) ? th : Vector<Scalar>((Scalar(1) - alpha) * h + alpha * th);
        v_prev = std::move(v);
        v = std::move(next);
        tv = op(v);
    }
    return {std::move(v), rec.take()};
}

/// v_{t+1} = (1 - alpha) v_t + alpha op(v_t) + beta (v_t - v_{t-1}).
template <typename Scalar, typename Op>
ValueSolution<Scalar> momentum_loop(const Op& op, Vector<Scalar> v_prev, std::optional<Vector<Scalar>> v1,
                                    Scalar alpha, Scalar beta, const SolverConfig& cfg) {
    TraceRecorder<Scalar> rec(cfg);
    Vector<Scalar> t_prev = op(v_prev);
    if (rec.record(sup_norm(v_prev - t_prev), v_prev))
        return {std::move(v_prev), rec.take()};
    Vector<Scalar> v = v1 ? std::move(*v1) : t_prev;
    for (;;) {
        Vector<Scalar> tv = op(v);
        if (rec.record(sup_norm(v - tv), v))
            break;
        Vector<Scalar> step = (alpha == Scalar(1)) ? tv : Vector<Scalar>((Scalar(1) - alpha) * v + alpha * tv);
        Vector<Scalar> next = step + beta * (v - v_prev);
        v_prev = std::move(v);
        v = std::move(next);
    }
    return {std::move(v), rec.take()};
}

template <typename Scalar> auto max_operator(const Mdp<Scalar>& mdp) {
    return [&mdp](const Vector<Scalar>& v) { return bellman_values(mdp, v); };
}

template <typename Scalar> Solution<Scalar> with_greedy(const Mdp<Scalar>& mdp, ValueSolution<Scalar> sol) {
    auto greedy = bellman_apply(mdp, sol.v).greedy;
    return {std::move(sol.v), std::move(greedy), std::move(sol.trace)};
}

template <typename Scalar> void check_two_point(const Mdp<Scalar>& mdp, const Vector<Scalar>& v0,
                                                const std::optional<Vector<Scalar>>& v1) {
    check_length(mdp, v0);
    if (v1)
        check_length(mdp, *v1);
}

inline void check_rvi_alpha(double alpha, double lambda) {
    const double upper = 2.0 / (1.0 + lambda);
    if (!(alpha > 0.0 && alpha < upper))
        throw ValidationError("step size alpha must lie in (0, 2/(1+lambda))");
}

} // namespace detail

/// Value Iteration v_{t+1} = T(v_t).
template <typename Scalar>
Solution<Scalar> solve_vi(const Mdp<Scalar>& mdp, const NonDeduced<Vector<Scalar>>& v0, const SolverConfig& cfg = {}) {
    detail::check_length(mdp, v0);
    return detail::with_greedy(mdp, detail::relaxed_loop<Scalar>(detail::max_operator(mdp), v0, Scalar(1), cfg));
}

/// Value Computation v_{t+1} = T_pi(v_t).
template <typename Scalar>
ValueSolution<Scalar> solve_vc(const Mdp<Scalar>& mdp, const Policy<Scalar>& pi, const NonDeduced<Vector<Scalar>>& v0,
                               const SolverConfig& cfg = {}) {
    detail::check_length(mdp, v0);
    const PolicyOperator<Scalar> op(mdp, pi);
    return detail::relaxed_loop<Scalar>(op, v0, Scalar(1), cfg);
}

/// Relaxed VI v_{t+1} = v_t - alpha (v_t - T(v_t)), alpha in (0, 2/(1+lambda)).
template <typename Scalar>
Solution<Scalar> solve_rvi(const Mdp<Scalar>& mdp, const NonDeduced<Vector<Scalar>>& v0, const SolverConfig& cfg = {}) {
    detail::check_length(mdp, v0);
    const double alpha = cfg.alpha.value_or(1.0);
    detail::check_rvi_alpha(alpha, static_cast<double>(mdp.lambda()));
    return detail::with_greedy(mdp,
                               detail::relaxed_loop<Scalar>(detail::max_operator(mdp), v0, Scalar(alpha), cfg));
}

/// Accelerated VI; alpha/gamma default to avi_step_sizes, v1 to T(v0).
template <typename Scalar>
Solution<Scalar> solve_avi(const Mdp<Scalar>& mdp, const NonDeduced<Vector<Scalar>>& v0,
                           std::optional<NonDeduced<Vector<Scalar>>> v1 = std::nullopt, const SolverConfig& cfg = {}) {
    detail::check_two_point(mdp, v0, v1);
    const auto tuned = avi_step_sizes(static_cast<double>(mdp.lambda()));
    return detail::with_greedy(
        mdp, detail::accelerated_loop<Scalar>(detail::max_operator(mdp), v0, std::move(v1),
                                              Scalar(cfg.alpha.value_or(tuned.alpha)),
                                              Scalar(cfg.gamma.value_or(tuned.gamma)), cfg));
}

/// Momentum VI; alpha/beta default to mvi_step_sizes, v1 to T(v0).
template <typename Scalar>
Solution<Scalar> solve_mvi(const Mdp<Scalar>& mdp, const NonDeduced<Vector<Scalar>>& v0,
                           std::optional<NonDeduced<Vector<Scalar>>> v1 = std::nullopt, const SolverConfig& cfg = {}) {
    detail::check_two_point(mdp, v0, v1);
    const auto tuned = mvi_step_sizes(static_cast<double>(mdp.lambda()));
    return detail::with_greedy(
        mdp, detail::momentum_loop<Scalar>(detail::max_operator(mdp), v0, std::move(v1),
                                           Scalar(cfg.alpha.value_or(tuned.alpha)),
                                           Scalar(cfg.beta_momentum.value_or(tuned.beta)), cfg));
}

/// Accelerated Value Computation: AVI with T replaced by T_pi.
template <typename Scalar>
ValueSolution<Scalar> solve_avc(const Mdp<Scalar>& mdp, const Policy<Scalar>& pi, const NonDeduced<Vector<Scalar>>& v0,
                                std::optional<NonDeduced<Vector<Scalar>>> v1 = std::nullopt,
                                const SolverConfig& cfg = {}) {
    detail::check_two_point(mdp, v0, v1);
    const auto tuned = avi_step_sizes(static_cast<double>(mdp.lambda()));
    const PolicyOperator<Scalar> op(mdp, pi);
    return detail::accelerated_loop<Scalar>(op, v0, std::move(v1), Scalar(cfg.alpha.value_or(tuned.alpha)),
                                            Scalar(cfg.gamma.value_or(tuned.gamma)), cfg);
}

/// Momentum Value Computation: MVI with T replaced by T_pi.
template <typename Scalar>
ValueSolution<Scalar> solve_mvc(const Mdp<Scalar>& mdp, const Policy<Scalar>& pi, const NonDeduced<Vector<Scalar>>& v0,
                                std::optional<NonDeduced<Vector<Scalar>>> v1 = std::nullopt,
                                const SolverConfig& cfg = {}) {
    detail::check_two_point(mdp, v0, v1);
    const auto tuned = mvi_step_sizes(static_cast<double>(mdp.lambda()));
    const PolicyOperator<Scalar> op(mdp, pi);
    return detail::momentum_loop<Scalar>(op, v0, std::move(v1), Scalar(cfg.alpha.value_or(tuned.alpha)),
                                         Scalar(cfg.beta_momentum.value_or(tuned.beta)), cfg);
}

// ---------------------------------------------------------------------------
// Mirror-descent value iteration

/// Floor applied to policy entries before KL steps.
inline constexpr double kKlFloor = 1e-12;

/// Euclidean projection onto the probability simplex.
template <typename Derived> auto project_simplex(const Eigen::MatrixBase<Derived>& y) {
    using Scalar = typename Derived::Scalar;
    Vector<Scalar> sorted = y;
    std::sort(sorted.data(), sorted.data() + sorted.size(), std::greater<Scalar>());
    Scalar cumulative = 0;
    Scalar theta = 0;
    for (Index i = 0; i < sorted.size(); ++i) {
        cumulative += sorted(i);
        const Scalar candidate = (cumulative - Scalar(1)) / Scalar(i + 1);
        if (sorted(i) - candidate > Scalar(0))
            theta = candidate;
    }
    return Vector<Scalar>((y.array() - theta).cwiseMax(Scalar(0)).matrix());
}

template <typename Derived> auto floor_distribution(const Eigen::MatrixBase<Derived>& p) {
    using Scalar = typename Derived::Scalar;
    Vector<Scalar> out = p.array().cwiseMax(Scalar(kKlFloor)).matrix();
    return Vector<Scalar>(out / out.sum());
}

/// D(p, q) for the configured Bregman divergence (q already floored for KL).
template <typename DerivedP, typename DerivedQ>
auto bregman_divergence(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q,
                        DivergenceKind kind) {
    using Scalar = typename DerivedP::Scalar;
    if (kind == DivergenceKind::squared_euclidean)
        return Scalar((p - q).squaredNorm());
    Scalar d = 0;
    for (Index i = 0; i < p.size(); ++i)
        if (p(i) > Scalar(0))
            d += p(i) * std::log(p(i) / q(i));
    return d;
}

/// One regularized greedy step in a single state:
/// argmax_pi <pi, c> - (1/eta) D(pi, previous). eta = +inf gives the greedy vertex.
template <typename DerivedC, typename DerivedP>
auto mirror_step(const Eigen::MatrixBase<DerivedC>& c, const Eigen::MatrixBase<DerivedP>& previous, double eta,
                 DivergenceKind kind) {
    using Scalar = typename DerivedC::Scalar;
    const Index a = c.size();
    Vector<Scalar> out = Vector<Scalar>::Zero(a);
    if (std::isinf(eta)) {
        Index best = 0;
        for (Index act = 1; act < a; ++act)
            if (c(act) > c(best))
                best = act;
        out(best) = Scalar(1);
        return out;
    }
    if (kind == DivergenceKind::kullback_leibler) {
        const Vector<Scalar> base = floor_distribution(previous);
        const Scalar top = c.maxCoeff();
        for (Index act = 0; act < a; ++act)
            out(act) = base(act) * std::exp(Scalar(eta) * (c(act) - top));
        return Vector<Scalar>(out / out.sum());
    }
    return project_simplex(previous + (Scalar(eta) / Scalar(2)) * c);
}

template <typename Scalar> struct MirrorSolution {
    Vector<Scalar> v;
    Policy<Scalar> policy;
    SolverTrace<Scalar> trace;
};

/// Mirror-descent VI. Per state, pi_{t+1,s} maximizes <pi, c_s> - (1/eta) D(pi, pi_{t,s})
/// and v_{t+1,s} = <pi_{t+1,s}, c_s>, minus (1/eta) D(pi_{t+1,s}, pi_{t,s}) when
/// cfg.mirror_variant is set. cfg.eta_mirror may be +inf.
template <typename Scalar>
MirrorSolution<Scalar> solve_md_vi(const Mdp<Scalar>& mdp, const NonDeduced<Vector<Scalar>>& v0,
                                   const Policy<Scalar>& pi0,
                                   const SolverConfig& cfg = {}) {
    detail::check_length(mdp, v0);
    detail::check_policy(mdp, pi0);
    const double eta = cfg.eta_mirror;
    const DivergenceKind kind = cfg.divergence_kind;
    detail::TraceRecorder<Scalar> rec(cfg);
    Matrix<Scalar> pi = pi0.probs();
    Vector<Scalar> v = v0;
    for (;;) {
        const Matrix<Scalar> q = action_values(mdp, v);
        const Vector<Scalar> tv = q.rowwise().maxCoeff();
        if (rec.record(sup_norm(v - tv), v))
            break;
        if (std::isinf(eta)) {
            for (Index s = 0; s < mdp.states(); ++s)
                pi.row(s) = mirror_step(q.row(s).transpose(), pi.row(s).transpose(), eta, kind).transpose();
            v = tv;
            continue;
        }
        Vector<Scalar> next(mdp.states());
        for (Index s = 0; s < mdp.states(); ++s) {
            const Vector<Scalar> old_row = kind == DivergenceKind::kullback_leibler
                                               ? floor_distribution(pi.row(s).transpose())
                                               : Vector<Scalar>(pi.row(s).transpose());
            const Vector<Scalar> row = mirror_step(q.row(s).transpose(), old_row, eta, kind);
            next(s) = row.dot(q.row(s).transpose());
            if (cfg.mirror_variant)
                next(s) -= bregman_divergence(row, old_row, kind) / Scalar(eta);
            pi.row(s) = row.transpose();
        }
        v = std::move(next);
    }
    // Renormalize against rounding before wrapping as a validated policy.
    for (Index s = 0; s < pi.rows(); ++s)
        pi.row(s) /= pi.row(s).sum();
    return {std::move(v), Policy<Scalar>(std::move(pi)), rec.take()};
}

} // namespace mdplab
