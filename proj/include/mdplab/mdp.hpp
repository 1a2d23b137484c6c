#pragma once

#include "mdplab/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

namespace mdplab {

using Index = Eigen::Index;

template <typename Scalar> using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar> using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Parameter type that takes its Scalar from another argument, so Eigen
/// expressions and plain numbers convert instead of failing deduction.
template <typename T> using NonDeduced = std::type_identity_t<T>;

/// Absolute tolerance used for every stochasticity check.
inline constexpr double kStochasticTol = 1e-12;

namespace detail {

template <typename Derived>
void check_distribution(const Eigen::MatrixBase<Derived>& row, const std::string& what) {
    using Scalar = typename Derived::Scalar;
    Scalar sum = 0;
    for (Index i = 0; i < row.size(); ++i) {
        if (!std::isfinite(static_cast<double>(row(i))) || row(i) < Scalar(0)) {
            std::ostringstream os;
            os << what << ": entry " << i << " is negative or not finite";
            throw ValidationError(os.str());
        }
        sum += row(i);
    }
    if (std::abs(static_cast<double>(sum) - 1.0) > kStochasticTol) {
        std::ostringstream os;
        os.precision(17);
        os << what << ": entries sum to " << static_cast<double>(sum) << ", expected 1";
        throw ValidationError(os.str());
    }
}

} // namespace detail

/// Finite discounted MDP (S, A, P, r, p0, lambda) with dense storage.
///
/// The kernel is stored as an (n*a) x n matrix whose row `s*a + act` is the
/// next-state distribution P_{s,act}. With this layout all action values for
/// a value vector v are `rewards_flat + lambda * kernel * v`.
template <typename Scalar = double> class Mdp {
public:
    Mdp(Index states, Index actions, Scalar lambda, Matrix<Scalar> kernel, Matrix<Scalar> rewards,
        Vector<Scalar> p0)
        : n_(states), a_(actions), lambda_(lambda), kernel_(std::move(kernel)),
          rewards_(std::move(rewards)), p0_(std::move(p0)) {
        validate();
    }

    Index states() const { return n_; }
    Index actions() const { return a_; }
    Scalar lambda() const { return lambda_; }

    /// (n*a) x n transition matrix, row s*a+act.
    const Matrix<Scalar>& kernel() const { return kernel_; }
    /// n x a immediate rewards.
    const Matrix<Scalar>& rewards() const { return rewards_; }
    const Vector<Scalar>& p0() const { return p0_; }

    auto transition(Index s, Index act) const { return kernel_.row(s * a_ + act); }

    template <typename Other> Mdp<Other> cast() const {
        return Mdp<Other>(n_, a_, static_cast<Other>(lambda_), kernel_.template cast<Other>(),
                          rewards_.template cast<Other>(), p0_.template cast<Other>());
    }

    bool operator==(const Mdp& o) const {
        return n_ == o.n_ && a_ == o.a_ && lambda_ == o.lambda_ && kernel_ == o.kernel_ &&
               rewards_ == o.rewards_ && p0_ == o.p0_;
    }

private:
    void validate() const {
        if (n_ < 1 || a_ < 1)
            throw ValidationError("state and action counts must be positive");
        if (!(lambda_ > Scalar(0) && lambda_ < Scalar(1)))
            throw ValidationError("lambda must lie in the open interval (0,1)");
        if (kernel_.rows() != n_ * a_ || kernel_.cols() != n_)
            throw DimensionError("kernel must have n*a rows and n columns");
        if (rewards_.rows() != n_ || rewards_.cols() != a_)
            throw DimensionError("rewards must be n x a");
        if (p0_.size() != n_)
            throw DimensionError("p0 must have length n");
        for (Index s = 0; s < n_; ++s) {
            for (Index act = 0; act < a_; ++act) {
                std::ostringstream os;
                os << "kernel row (s=" << s << ", a=" << act << ")";
                detail::check_distribution(kernel_.row(s * a_ + act).transpose(), os.str());
                if (!std::isfinite(static_cast<double>(rewards_(s, act)))) {
                    std::ostringstream rs;
                    rs << "reward (s=" << s << ", a=" << act << ") is not finite";
                    throw ValidationError(rs.str());
                }
            }
        }
        detail::check_distribution(p0_, "p0");
    }

    Index n_;
    Index a_;
    Scalar lambda_;
    Matrix<Scalar> kernel_;
    Matrix<Scalar> rewards_;
    Vector<Scalar> p0_;
};

/// Stationary policy: n x a row-stochastic matrix.
template <typename Scalar = double> class Policy {
public:
    explicit Policy(Matrix<Scalar> probs) : probs_(std::move(probs)) {
        if (probs_.rows() < 1 || probs_.cols() < 1)
            throw DimensionError("policy must have at least one state and one action");
        for (Index s = 0; s < probs_.rows(); ++s) {
            std::ostringstream os;
            os << "policy row " << s;
            detail::check_distribution(probs_.row(s).transpose(), os.str());
        }
    }

    /// Deterministic policy choosing actions[s] in state s.
    static Policy deterministic(const std::vector<Index>& actions, Index action_count) {
        Matrix<Scalar> probs = Matrix<Scalar>::Zero(static_cast<Index>(actions.size()), action_count);
        for (std::size_t s = 0; s < actions.size(); ++s) {
            if (actions[s] < 0 || actions[s] >= action_count)
                throw ValidationError("deterministic policy action out of range");
            probs(static_cast<Index>(s), actions[s]) = Scalar(1);
        }
        return Policy(std::move(probs));
    }

    static Policy uniform(Index states, Index action_count) {
        return Policy(Matrix<Scalar>::Constant(states, action_count, Scalar(1) / Scalar(action_count)));
    }

    Index states() const { return probs_.rows(); }
    Index actions() const { return probs_.cols(); }
    const Matrix<Scalar>& probs() const { return probs_; }

    bool is_deterministic() const {
        for (Index s = 0; s < probs_.rows(); ++s) {
            Index hits = 0;
            for (Index act = 0; act < probs_.cols(); ++act) {
                if (probs_(s, act) == Scalar(1))
                    ++hits;
                else if (probs_(s, act) != Scalar(0))
                    return false;
            }
            if (hits != 1)
                return false;
        }
        return true;
    }

    /// Action with the largest probability in each state (lowest index on ties).
    std::vector<Index> argmax_actions() const {
        std::vector<Index> out(static_cast<std::size_t>(probs_.rows()));
        for (Index s = 0; s < probs_.rows(); ++s) {
            Index best = 0;
            for (Index act = 1; act < probs_.cols(); ++act)
                if (probs_(s, act) > probs_(s, best))
                    best = act;
            out[static_cast<std::size_t>(s)] = best;
        }
        return out;
    }

    bool operator==(const Policy& o) const { return probs_ == o.probs_; }

private:
    Matrix<Scalar> probs_;
};

/// Transition matrix and one-step reward vector induced by a policy.
template <typename Scalar = double> struct PolicyMatrices {
    Matrix<Scalar> p_pi;
    Vector<Scalar> r_pi;
};

/// Strong-convexity / smoothness analogues of the residual map v - T(v).
template <typename Scalar = double> struct ContractionConstants {
    Scalar mu;
    Scalar ell;
    Scalar kappa;

    static ContractionConstants from_lambda(Scalar lambda) {
        if (!(lambda > Scalar(0) && lambda < Scalar(1)))
            throw ValidationError("lambda must lie in the open interval (0,1)");
        const Scalar mu = Scalar(1) - lambda;
        const Scalar ell = Scalar(1) + lambda;
        return {mu, ell, mu / ell};
    }
};

/// F(v) = v - T(v) together with its sup norm.
template <typename Scalar = double> struct Residual {
    Vector<Scalar> value;
    Scalar inf_norm;
};

template <typename Derived> auto sup_norm(const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    return x.size() == 0 ? Scalar(0) : x.template lpNorm<Eigen::Infinity>();
}

template <typename Derived> bool all_finite(const Eigen::MatrixBase<Derived>& x) {
    for (Index i = 0; i < x.size(); ++i)
        if (!std::isfinite(static_cast<double>(x.derived().coeff(i))))
            return false;
    return true;
}

} // namespace mdplab
