#pragma once

#include "mdplab/mdp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace mdplab {

/// Tie tolerance on action values used for greedy uniqueness.
inline constexpr double kTieTol = 1e-12;

template <typename Scalar> struct BellmanResult {
    Vector<Scalar> value;
    std::vector<Index> actions;
    Policy<Scalar> greedy;
};

template <typename Scalar> struct JacobianResult {
    Matrix<Scalar> j;
    Policy<Scalar> greedy;
    /// false when some state has two maximizing actions within kTieTol.
    bool unique;
};

namespace detail {

template <typename Scalar, typename Derived>
void check_length(const Mdp<Scalar>& mdp, const Eigen::MatrixBase<Derived>& v) {
    if (v.size() != mdp.states())
        throw DimensionError("value vector length does not match the number of states");
}

template <typename Scalar> void check_policy(const Mdp<Scalar>& mdp, const Policy<Scalar>& pi) {
    if (pi.states() != mdp.states() || pi.actions() != mdp.actions())
        throw DimensionError("policy shape does not match the MDP");
}

template <typename Scalar> void check_beta(Scalar beta) {
    if (!(beta > Scalar(0)) || !std::isfinite(static_cast<double>(beta)))
        throw ValidationError("smoothing parameter beta must be a positive finite number");
}

template <typename Scalar> Index argmax_lowest(const Matrix<Scalar>& q, Index s) {
    Index best = 0;
    for (Index act = 1; act < q.cols(); ++act)
        if (q(s, act) > q(s, best))
            best = act;
    return best;
}

template <typename Scalar> Matrix<Scalar> softmax_weights(const Matrix<Scalar>& q, Scalar beta) {
    using std::exp;
    Matrix<Scalar> w(q.rows(), q.cols());
    for (Index s = 0; s < q.rows(); ++s) {
        const Scalar top = q.row(s).maxCoeff();
        Scalar total = 0;
        for (Index act = 0; act < q.cols(); ++act) {
            w(s, act) = exp(beta * (q(s, act) - top));
            total += w(s, act);
        }
        w.row(s) /= total;
    }
    return w;
}

} // namespace detail

/// Action values Q(s,a) = r_sa + lambda * P_sa . v as an n x a matrix.
template <typename Scalar, typename Derived>
Matrix<Scalar> action_values(const Mdp<Scalar>& mdp, const Eigen::MatrixBase<Derived>& v) {
    detail::check_length(mdp, v);
    const Vector<Scalar> next = mdp.kernel() * v;
    // next is ordered s*a + act, i.e. an a x n column-major block.
    const Eigen::Map<const Matrix<Scalar>> by_state(next.data(), mdp.actions(), mdp.states());
    return mdp.rewards() + mdp.lambda() * by_state.transpose();
}

/// T(v) without building the greedy policy.
template <typename Scalar, typename Derived>
Vector<Scalar> bellman_values(const Mdp<Scalar>& mdp, const Eigen::MatrixBase<Derived>& v) {
    return action_values(mdp, v).rowwise().maxCoeff();
}

/// Lowest-index maximizing action per state.
template <typename Scalar, typename Derived>
std::vector<Index> greedy_actions(const Mdp<Scalar>& mdp, const Eigen::MatrixBase<Derived>& v) {
    const Matrix<Scalar> q = action_values(mdp, v);
    std::vector<Index> actions(static_cast<std::size_t>(mdp.states()));
    for (Index s = 0; s < mdp.states(); ++s)
        actions[static_cast<std::size_t>(s)] = detail::argmax_lowest(q, s);
    return actions;
}

/// T(v)_s = max_a { r_sa + lambda P_sa . v } and the lowest-index greedy policy.
template <typename Scalar, typename Derived>
BellmanResult<Scalar> bellman_apply(const Mdp<Scalar>& mdp, const Eigen::MatrixBase<Derived>& v) {
    const Matrix<Scalar> q = action_values(mdp, v);
    Vector<Scalar> tv(mdp.states());
    std::vector<Index> actions(static_cast<std::size_t>(mdp.states()));
    for (Index s = 0; s < mdp.states(); ++s) {
        const Index best = detail::argmax_lowest(q, s);
        actions[static_cast<std::size_t>(s)] = best;
        tv(s) = q(s, best);
    }
    auto greedy = Policy<Scalar>::deterministic(actions, mdp.actions());
    return {std::move(tv), std::move(actions), std::move(greedy)};
}

/// P_pi and r_pi.
template <typename Scalar>
PolicyMatrices<Scalar> policy_matrices(const Mdp<Scalar>& mdp, const Policy<Scalar>& pi) {
    detail::check_policy(mdp, pi);
    const Index n = mdp.states();
    const Index a = mdp.actions();
    PolicyMatrices<Scalar> out{Matrix<Scalar>::Zero(n, n), Vector<Scalar>::Zero(n)};
    for (Index s = 0; s < n; ++s) {
        for (Index act = 0; act < a; ++act) {
            const Scalar w = pi.probs()(s, act);
            if (w == Scalar(0))
                continue;
            out.p_pi.row(s) += w * mdp.transition(s, act);
            out.r_pi(s) += w * mdp.rewards()(s, act);
        }
    }
    return out;
}

/// Affine policy operator v -> r_pi + lambda P_pi v with P_pi, r_pi cached.
template <typename Scalar> class PolicyOperator {
public:
    PolicyOperator(const Mdp<Scalar>& mdp, const Policy<Scalar>& pi)
        : lambda_(mdp.lambda()), pm_(policy_matrices(mdp, pi)) {}

    PolicyOperator(PolicyMatrices<Scalar> pm, Scalar lambda) : lambda_(lambda), pm_(std::move(pm)) {}

    template <typename Derived> Vector<Scalar> operator()(const Eigen::MatrixBase<Derived>& v) const {
        if (v.size() != pm_.r_pi.size())
            throw DimensionError("value vector length does not match the number of states");
        const Vector<Scalar> next = pm_.p_pi * v;
        return pm_.r_pi + lambda_ * next;
    }

    const PolicyMatrices<Scalar>& matrices() const { return pm_; }
    Scalar lambda() const { return lambda_; }

private:
    Scalar lambda_;
    PolicyMatrices<Scalar> pm_;
};

/// T_pi(v) = r_pi + lambda P_pi v.
template <typename Scalar, typename Derived>
Vector<Scalar> bellman_policy_apply(const Mdp<Scalar>& mdp, const Policy<Scalar>& pi,
                                    const Eigen::MatrixBase<Derived>& v) {
    detail::check_length(mdp, v);
    return PolicyOperator<Scalar>(mdp, pi)(v);
}

/// Solves (I - lambda P) v = r for a row-stochastic P.
template <typename Scalar>
Vector<Scalar> solve_policy_system(const PolicyMatrices<Scalar>& pm, Scalar lambda) {
    const Index n = pm.r_pi.size();
    const Matrix<Scalar> system = Matrix<Scalar>::Identity(n, n) - lambda * pm.p_pi;
    const Eigen::PartialPivLU<Matrix<Scalar>> lu(system);
    Vector<Scalar> v = lu.solve(pm.r_pi);
    // One step of iterative refinement.
    v += lu.solve(Vector<Scalar>(pm.r_pi - system * v));
    const Scalar res = sup_norm(Vector<Scalar>(system * v - pm.r_pi));
    const Scalar scale = std::max(Scalar(1), sup_norm(v));
    if (!all_finite(v) || res > Scalar(1e-10) * scale)
        throw NumericalError("policy evaluation: linear solve failed");
    return v;
}

/// v^pi = (I - lambda P_pi)^{-1} r_pi.
template <typename Scalar> Vector<Scalar> policy_value(const Mdp<Scalar>& mdp, const Policy<Scalar>& pi) {
    return solve_policy_system(policy_matrices(mdp, pi), mdp.lambda());
}

/// R(pi) = p0 . v^pi.
template <typename Scalar> Scalar expected_return(const Mdp<Scalar>& mdp, const Policy<Scalar>& pi) {
    return mdp.p0().dot(policy_value(mdp, pi));
}

/// Log-sum-exp Bellman operator (1/beta) log sum_a exp(beta Q(s,a)), max-shifted.
template <typename Scalar, typename Derived>
Vector<Scalar> smoothed_bellman_apply(const Mdp<Scalar>& mdp, NonDeduced<Scalar> beta,
                                      const Eigen::MatrixBase<Derived>& v) {
    using std::exp;
    using std::log;
    detail::check_beta(beta);
    const Matrix<Scalar> q = action_values(mdp, v);
    Vector<Scalar> out(mdp.states());
    for (Index s = 0; s < mdp.states(); ++s) {
        const Scalar top = q.row(s).maxCoeff();
        Scalar total = 0;
        for (Index act = 0; act < mdp.actions(); ++act)
            total += exp(beta * (q(s, act) - top));
        out(s) = top + log(total) / beta;
    }
    return out;
}

/// Jacobian of F = I - T at v: I - lambda P_{pi(v)} for the lowest-index greedy policy.
template <typename Scalar, typename Derived>
JacobianResult<Scalar> bellman_jacobian(const Mdp<Scalar>& mdp, const Eigen::MatrixBase<Derived>& v) {
    const Matrix<Scalar> q = action_values(mdp, v);
    const Index n = mdp.states();
    std::vector<Index> actions(static_cast<std::size_t>(n));
    bool unique = true;
    Matrix<Scalar> j = Matrix<Scalar>::Identity(n, n);
    for (Index s = 0; s < n; ++s) {
        const Index best = detail::argmax_lowest(q, s);
        actions[static_cast<std::size_t>(s)] = best;
        for (Index act = 0; act < mdp.actions(); ++act)
            if (act != best && q(s, act) >= q(s, best) - Scalar(kTieTol))
                unique = false;
        j.row(s) -= mdp.lambda() * mdp.transition(s, best);
    }
    return {std::move(j), Policy<Scalar>::deterministic(actions, mdp.actions()), unique};
}

/// Softmax policy at temperature 1/beta over the action values of v.
template <typename Scalar, typename Derived>
Matrix<Scalar> softmax_policy(const Mdp<Scalar>& mdp, NonDeduced<Scalar> beta, const Eigen::MatrixBase<Derived>& v) {
    detail::check_beta(beta);
    return detail::softmax_weights(action_values(mdp, v), beta);
}

/// Jacobian of F_beta = I - T_beta: I - lambda P_{pi_w} with pi_w the softmax policy.
template <typename Scalar, typename Derived>
Matrix<Scalar> smoothed_jacobian(const Mdp<Scalar>& mdp, NonDeduced<Scalar> beta, const Eigen::MatrixBase<Derived>& v) {
    const Matrix<Scalar> w = softmax_policy(mdp, beta, v);
    const Index n = mdp.states();
    Matrix<Scalar> j = Matrix<Scalar>::Identity(n, n);
    for (Index s = 0; s < n; ++s)
        for (Index act = 0; act < mdp.actions(); ++act)
            j.row(s) -= mdp.lambda() * w(s, act) * mdp.transition(s, act);
    return j;
}

/// F(v) = v - T(v).
template <typename Scalar, typename Derived>
Residual<Scalar> residual(const Mdp<Scalar>& mdp, const Eigen::MatrixBase<Derived>& v) {
    Vector<Scalar> f = v - bellman_values(mdp, v);
    const Scalar norm = sup_norm(f);
    return {std::move(f), norm};
}

} // namespace mdplab
