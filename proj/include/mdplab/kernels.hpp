#pragma once

#include "mdplab/trace.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>

namespace mdplab {

enum class AndersonKind { type1, type2 };

/// Smooth strongly convex objective given through its gradient.
template <typename Scalar = double> struct SmoothProblem {
    Index dim = 0;
    std::function<Vector<Scalar>(const Vector<Scalar>&)> gradient;
    std::function<Matrix<Scalar>(const Vector<Scalar>&)> hessian;
    /// Optional objective value, used for descent checks.
    std::function<Scalar(const Vector<Scalar>&)> value;
    Scalar mu = 0;
    Scalar ell = 0;

    void validate() const {
        if (dim < 1 || !gradient)
            throw ValidationError("smooth problem needs a positive dimension and a gradient");
        if (!(mu > Scalar(0) && mu <= ell))
            throw ValidationError("smooth problem needs 0 < mu <= ell");
    }
};

/// Root-finding problem F(x) = 0.
template <typename Scalar = double> struct RootProblem {
    Index dim = 0;
    std::function<Vector<Scalar>(const Vector<Scalar>&)> f_map;
    std::function<Matrix<Scalar>(const Vector<Scalar>&)> jacobian;
};

/// f(x) = 1/2 x'Qx - b'x with Q symmetric positive definite.
template <typename Scalar = double> struct QuadraticSpec {
    Matrix<Scalar> q;
    Vector<Scalar> b;
    Vector<Scalar> x_star;
    Scalar mu;
    Scalar ell;

    QuadraticSpec(Matrix<Scalar> q_in, Vector<Scalar> b_in) : q(std::move(q_in)), b(std::move(b_in)) {
        if (q.rows() != q.cols() || q.rows() != b.size())
            throw DimensionError("quadratic: Q must be square and match b");
        if ((q - q.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12))
            throw ValidationError("quadratic: Q must be symmetric");
        const Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(q, Eigen::EigenvaluesOnly);
        mu = eig.eigenvalues().minCoeff();
        ell = eig.eigenvalues().maxCoeff();
        if (!(mu > Scalar(0)))
            throw ValidationError("quadratic: Q must be positive definite");
        x_star = q.ldlt().solve(b);
    }

    SmoothProblem<Scalar> problem() const {
        SmoothProblem<Scalar> p;
        p.dim = q.rows();
        p.gradient = [q = q, b = b](const Vector<Scalar>& x) { return Vector<Scalar>(q * x - b); };
        p.hessian = [q = q](const Vector<Scalar>&) { return q; };
        p.value = [q = q, b = b](const Vector<Scalar>& x) { return Scalar(0.5) * x.dot(q * x) - b.dot(x); };
        p.mu = mu;
        p.ell = ell;
        return p;
    }

    /// F = grad f as a root problem.
    RootProblem<Scalar> gradient_root() const {
        RootProblem<Scalar> rp;
        rp.dim = q.rows();
        rp.f_map = [q = q, b = b](const Vector<Scalar>& x) { return Vector<Scalar>(q * x - b); };
        rp.jacobian = [q = q](const Vector<Scalar>&) { return q; };
        return rp;
    }
};

/// Random rotation of diag(linspace(mu, ell, dim)) with a random minimizer.
template <typename Scalar = double>
QuadraticSpec<Scalar> make_quadratic(Index dim, Scalar mu, Scalar ell, std::uint64_t seed) {
    if (dim < 1 || !(mu > Scalar(0) && mu <= ell))
        throw ValidationError("make_quadratic: need dim >= 1 and 0 < mu <= ell");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Matrix<Scalar> gauss(dim, dim);
    for (Index i = 0; i < gauss.size(); ++i)
        gauss.data()[i] = Scalar(normal(rng));
    const Matrix<Scalar> rot = Eigen::HouseholderQR<Matrix<Scalar>>(gauss).householderQ();
    Vector<Scalar> spectrum(dim);
    for (Index i = 0; i < dim; ++i)
        spectrum(i) = dim == 1 ? mu : mu + (ell - mu) * Scalar(i) / Scalar(dim - 1);
    Matrix<Scalar> q = rot * spectrum.asDiagonal() * rot.transpose();
    q = Scalar(0.5) * (q + q.transpose()).eval();
    Vector<Scalar> x_star(dim);
    for (Index i = 0; i < dim; ++i)
        x_star(i) = Scalar(normal(rng));
    return QuadraticSpec<Scalar>(q, q * x_star);
}

// ---------------------------------------------------------------------------
// First-order kernels. Trace rows hold |grad f(x_t)|_2.

namespace detail {

template <typename Scalar> void check_start(const SmoothProblem<Scalar>& p, const Vector<Scalar>& x0) {
    p.validate();
    if (x0.size() != p.dim)
        throw DimensionError("starting point does not match the problem dimension");
}

} // namespace detail

/// Gradient descent with fixed step alpha in (0, 2/L).
template <typename Scalar>
ValueSolution<Scalar> gd_solve(const SmoothProblem<Scalar>& p, NonDeduced<Vector<Scalar>> x, NonDeduced<Scalar> alpha,
                               const SolverConfig& cfg = {}) {
    detail::check_start(p, x);
    if (!(alpha > Scalar(0) && alpha < Scalar(2) / p.ell))
        throw ValidationError("gradient descent step size must lie in (0, 2/L)");
    detail::TraceRecorder<Scalar> rec(cfg);
    for (;;) {
        const Vector<Scalar> g = p.gradient(x);
        if (rec.record(g.norm(), x))
            break;
        x = x - alpha * g;
    }
    return {std::move(x), rec.take()};
}

/// Nesterov's method with alpha = 1/L and gamma = (sqrt L - sqrt mu)/(sqrt L + sqrt mu).
/// x1 defaults to one gradient step from x0.
template <typename Scalar>
ValueSolution<Scalar> agd_solve(const SmoothProblem<Scalar>& p, NonDeduced<Vector<Scalar>> x0,
                                std::optional<NonDeduced<Vector<Scalar>>> x1 = std::nullopt,
                                const SolverConfig& cfg = {},
                                std::optional<NonDeduced<Scalar>> gamma_override = std::nullopt) {
    detail::check_start(p, x0);
    const Scalar alpha = Scalar(1) / p.ell;
    const Scalar sl = std::sqrt(p.ell);
    const Scalar sm = std::sqrt(p.mu);
    const Scalar gamma = gamma_override.value_or((sl - sm) / (sl + sm));
    detail::TraceRecorder<Scalar> rec(cfg);
    Vector<Scalar> g = p.gradient(x0);
    if (rec.record(g.norm(), x0))
        return {std::move(x0), rec.take()};
    Vector<Scalar> x = x1 ? std::move(*x1) : Vector<Scalar>(x0 - alpha * g);
    Vector<Scalar> x_prev = std::move(x0);
    for (;;) {
        g = p.gradient(x);
        if (rec.record(g.norm(), x))
            break;
        const Vector<Scalar> h = x + gamma * (x - x_prev);
        const Vector<Scalar> gh = (h == x) ? g : p.gradient(h);
        x_prev = std::move(x);
        x = h - alpha * gh;
    }
    return {std::move(x), rec.take()};
}

/// Heavy ball with alpha = 4/(sqrt L + sqrt mu)^2, beta = ((sqrt L - sqrt mu)/(sqrt L + sqrt mu))^2.
template <typename Scalar>
ValueSolution<Scalar> mgd_solve(const SmoothProblem<Scalar>& p, NonDeduced<Vector<Scalar>> x0,
                                std::optional<NonDeduced<Vector<Scalar>>> x1 = std::nullopt,
                                const SolverConfig& cfg = {},
                                std::optional<NonDeduced<Scalar>> beta_override = std::nullopt) {
    detail::check_start(p, x0);
    const Scalar sl = std::sqrt(p.ell);
    const Scalar sm = std::sqrt(p.mu);
    const Scalar alpha = Scalar(4) / ((sl + sm) * (sl + sm));
    const Scalar ratio = (sl - sm) / (sl + sm);
    const Scalar beta = beta_override.value_or(ratio * ratio);
    detail::TraceRecorder<Scalar> rec(cfg);
    Vector<Scalar> g = p.gradient(x0);
    if (rec.record(g.norm(), x0))
        return {std::move(x0), rec.take()};
    Vector<Scalar> x = x1 ? std::move(*x1) : Vector<Scalar>(x0 - alpha * g);
    Vector<Scalar> x_prev = std::move(x0);
    for (;;) {
        g = p.gradient(x);
        if (rec.record(g.norm(), x))
            break;
        Vector<Scalar> next = x - alpha * g;
        next += beta * (x - x_prev);
        x_prev = std::move(x);
        x = std::move(next);
    }
    return {std::move(x), rec.take()};
}

// ---------------------------------------------------------------------------
// Newton and secant kernels. Trace rows hold |F(x_t)|_2.

/// x_{t+1} = x_t - damping J^{-1} F(x_t).
template <typename Scalar>
ValueSolution<Scalar> newton_raphson_solve(const RootProblem<Scalar>& rp, NonDeduced<Vector<Scalar>> x,
                                           const SolverConfig& cfg = {}, double damping = 1.0) {
    if (!rp.f_map || !rp.jacobian)
        throw ValidationError("Newton-Raphson needs F and its Jacobian");
    if (x.size() != rp.dim)
        throw DimensionError("starting point does not match the problem dimension");
    if (!(damping > 0.0 && damping <= 1.0))
        throw ValidationError("damping must lie in (0,1]");
    detail::TraceRecorder<Scalar> rec(cfg);
    for (;;) {
        const Vector<Scalar> f = rp.f_map(x);
        if (rec.record(f.norm(), x))
            break;
        const Eigen::FullPivLU<Matrix<Scalar>> lu(rp.jacobian(x));
        if (!lu.isInvertible())
            throw NumericalError("Newton-Raphson: singular Jacobian");
        x -= Scalar(damping) * lu.solve(f);
    }
    return {std::move(x), rec.take()};
}

/// Good Broyden: J = J_prev + (df - J_prev dx) dx' / (dx'dx).
template <typename Scalar>
Matrix<Scalar> broyden_update_type1(const Matrix<Scalar>& j_prev, const Vector<Scalar>& dx, const Vector<Scalar>& df) {
    const Scalar denom = dx.squaredNorm();
    if (!(denom > Scalar(0)))
        throw ValidationError("Broyden update: zero step dx");
    return j_prev + (df - j_prev * dx) * dx.transpose() / denom;
}

/// Bad Broyden on the inverse Jacobian: G = G_prev + (dx - G_prev df) df' / (df'df),
/// the unique matrix with G df = dx that agrees with G_prev on the complement of df.
/// Returns nullopt (skip the update) when df'df <= 1e-14 |dx| |df|, i.e. when the
/// step barely moved F.
template <typename Scalar>
std::optional<Matrix<Scalar>> broyden_update_type2(const Matrix<Scalar>& g_prev, const Vector<Scalar>& dx,
                                                   const Vector<Scalar>& df) {
    const Scalar denom = df.squaredNorm();
    if (!(denom > Scalar(1e-14) * dx.norm() * df.norm()))
        return std::nullopt;
    return Matrix<Scalar>(g_prev + (dx - g_prev * df) * df.transpose() / denom);
}

/// BFGS rank-two update; nullopt when the curvature df'dx is not positive.
template <typename Scalar>
std::optional<Matrix<Scalar>> bfgs_update(const Matrix<Scalar>& j_prev, const Vector<Scalar>& dx,
                                          const Vector<Scalar>& df) {
    const Scalar curvature = df.dot(dx);
    const Vector<Scalar> jdx = j_prev * dx;
    const Scalar quad = dx.dot(jdx);
    if (!(curvature > Scalar(0)) || !(quad > Scalar(0)))
        return std::nullopt;
    Matrix<Scalar> j = j_prev + df * df.transpose() / curvature - jdx * jdx.transpose() / quad;
    return Matrix<Scalar>(Scalar(0.5) * (j + j.transpose()));
}

/// Closed-form Anderson matrices.
///   type1: J = I + (dF - dX)(dX'dX)^{-1} dX'   (min |J - I|_F s.t. J dX = dF)
///   type2: G = I + (dX - dF)(dF'dF)^{-1} dF'   (min |G - I|_F s.t. G dF = dX)
template <typename Scalar>
Matrix<Scalar> anderson_update_matrices(const Matrix<Scalar>& dx, const Matrix<Scalar>& df, AndersonKind kind) {
    if (dx.rows() != df.rows() || dx.cols() != df.cols())
        throw DimensionError("Anderson matrices: dX and dF must have the same shape");
    const Index n = dx.rows();
    const Matrix<Scalar>& basis = kind == AndersonKind::type1 ? dx : df;
    const Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(basis);
    if (qr.rank() < basis.cols())
        throw NumericalError("Anderson matrices: singular Gram matrix");
    // (B'B)^{-1} B' is the pseudo-inverse of a full-column-rank B.
    const Matrix<Scalar> pinv = qr.solve(Matrix<Scalar>::Identity(n, n));
    const Matrix<Scalar> diff = kind == AndersonKind::type1 ? Matrix<Scalar>(df - dx) : Matrix<Scalar>(dx - df);
    return Matrix<Scalar>::Identity(n, n) + diff * pinv;
}

enum class QuasiNewtonStrategy { broyden1, broyden2, bfgs };

template <typename Scalar> struct QuasiNewtonResult {
    Vector<Scalar> x;
    SolverTrace<Scalar> trace;
    std::size_t skipped_updates = 0;
};

/// x_{t+1} = x_t - J_t^{-1} F(x_t) (or x_t - G_t F(x_t) for broyden2), J_0 = G_0 = I.
template <typename Scalar>
QuasiNewtonResult<Scalar> quasi_newton_solve(const RootProblem<Scalar>& rp, NonDeduced<Vector<Scalar>> x,
                                             QuasiNewtonStrategy strategy, const SolverConfig& cfg = {}) {
    if (!rp.f_map)
        throw ValidationError("quasi-Newton needs F");
    if (x.size() != rp.dim)
        throw DimensionError("starting point does not match the problem dimension");
    const Index n = rp.dim;
    Matrix<Scalar> approx = Matrix<Scalar>::Identity(n, n);
    detail::TraceRecorder<Scalar> rec(cfg);
    std::size_t skipped = 0;
    Vector<Scalar> f = rp.f_map(x);
    if (rec.record(f.norm(), x))
        return {std::move(x), rec.take(), skipped};
    for (;;) {
        Vector<Scalar> step;
        if (strategy == QuasiNewtonStrategy::broyden2) {
            step = approx * f;
        } else {
            const Eigen::FullPivLU<Matrix<Scalar>> lu(approx);
            if (!lu.isInvertible())
                throw NumericalError("quasi-Newton: singular Jacobian approximation");
            step = lu.solve(f);
        }
        Vector<Scalar> x_next = x - step;
        Vector<Scalar> f_next = rp.f_map(x_next);
        const Vector<Scalar> dx = x_next - x;
        const Vector<Scalar> df = f_next - f;
        x = std::move(x_next);
        f = std::move(f_next);
        if (rec.record(f.norm(), x))
            break;
        std::optional<Matrix<Scalar>> updated;
        switch (strategy) {
        case QuasiNewtonStrategy::broyden1:
            if (dx.squaredNorm() > Scalar(0))
                updated = broyden_update_type1(approx, dx, df);
            break;
        case QuasiNewtonStrategy::broyden2: updated = broyden_update_type2(approx, dx, df); break;
        case QuasiNewtonStrategy::bfgs: updated = bfgs_update(approx, dx, df); break;
        }
        if (updated)
            approx = std::move(*updated);
        else
            ++skipped;
    }
    return {std::move(x), rec.take(), skipped};
}

} // namespace mdplab
