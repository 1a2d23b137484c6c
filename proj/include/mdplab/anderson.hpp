#pragma once

#include "mdplab/bellman.hpp"
#include "mdplab/kernels.hpp"
#include "mdplab/trace.hpp"

#include <deque>
#include <limits>
#include <optional>

namespace mdplab {

/// Sliding history of the last m iterate differences dV and residual
/// differences dF, oldest column first.
template <typename Scalar = double> class AndersonWindow {
public:
    AndersonWindow(Index dim, Index memory) : dim_(dim), memory_(memory) {
        if (dim < 1 || memory < 0)
            throw ValidationError("Anderson window needs dim >= 1 and memory >= 0");
    }

    void push(const Vector<Scalar>& dv, const Vector<Scalar>& df) {
        if (dv.size() != dim_ || df.size() != dim_)
            throw DimensionError("Anderson window: difference length mismatch");
        if (memory_ == 0)
            return;
        if (fill() == memory_) {
            dv_.pop_front();
            df_.pop_front();
            ++start_;
        }
        dv_.push_back(dv);
        df_.push_back(df);
    }

    /// Restart: drop the whole history.
    void clear() {
        start_ += static_cast<std::size_t>(fill());
        dv_.clear();
        df_.clear();
        ++epoch_;
    }

    Index dim() const { return dim_; }
    Index memory() const { return memory_; }
    Index fill() const { return static_cast<Index>(dv_.size()); }
    /// Count of pairs pushed before the oldest stored one.
    std::size_t start() const { return start_; }
    /// Incremented by every restart.
    std::size_t epoch() const { return epoch_; }

    Matrix<Scalar> dv() const { return stack(dv_); }
    Matrix<Scalar> df() const { return stack(df_); }

private:
    Matrix<Scalar> stack(const std::deque<Vector<Scalar>>& cols) const {
        Matrix<Scalar> out(dim_, static_cast<Index>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j)
            out.col(static_cast<Index>(j)) = cols[j];
        return out;
    }

    Index dim_;
    Index memory_;
    std::deque<Vector<Scalar>> dv_;
    std::deque<Vector<Scalar>> df_;
    std::size_t start_ = 0;
    std::size_t epoch_ = 0;
};

/// Stabilization thresholds. None of these come with canonical values; the
/// defaults are this library's choices.
struct StabilizationConfig {
    /// Weight of the plain T-step direction when Powell blending engages.
    double powell_theta = 0.1;
    /// Gram condition number above which Powell blending and Tikhonov
    /// regularization engage.
    double powell_cond_threshold = 1e6;
    /// Gram condition number above which the window is cleared.
    double restart_cond_cap = 1e8;
    double safeguard_factor = 2.0;
    std::size_t safeguard_period = 5;
    bool safeguard = true;
    double tikhonov_delta = 1e-10;

    void validate() const {
        if (!(powell_theta > 0.0 && powell_theta < 1.0))
            throw ValidationError("powell_theta must lie in (0,1)");
        if (!(safeguard_factor >= 1.0))
            throw ValidationError("safeguard_factor must be at least 1");
        if (safeguard_period < 1)
            throw ValidationError("safeguard_period must be at least 1");
        if (!(restart_cond_cap > 1.0) || !(powell_cond_threshold > 1.0))
            throw ValidationError("condition thresholds must exceed 1");
        if (!(tikhonov_delta >= 0.0))
            throw ValidationError("tikhonov_delta must be nonnegative");
    }
};

template <typename Scalar> struct AndersonWeights {
    Vector<Scalar> beta;
    /// Mixing weights on T(v_{t-k}), ..., T(v_t); they sum to one.
    Vector<Scalar> alpha;
    double condition;
    bool regularized;
};

/// 2-norm condition number of a small symmetric positive semidefinite matrix.
template <typename Scalar> double gram_condition(const Matrix<Scalar>& gram) {
    if (gram.size() == 0)
        return 1.0;
    const Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = static_cast<double>(eig.eigenvalues().minCoeff());
    const double hi = static_cast<double>(eig.eigenvalues().maxCoeff());
    if (!(lo > 0.0))
        return std::numeric_limits<double>::infinity();
    return hi / lo;
}

/// Least-squares mixing weights min_beta |f_t - dF beta|_2 via normal
/// equations, with a Tikhonov term delta * trace(G)/k once the Gram matrix is
/// ill-conditioned. nullopt means the system stayed singular: restart.
template <typename Scalar>
std::optional<AndersonWeights<Scalar>> anderson_weights(const AndersonWindow<Scalar>& window,
                                                        const Vector<Scalar>& f_t,
                                                        const StabilizationConfig& stab = {}) {
    const Index k = window.fill();
    if (k < 1)
        throw PreconditionError("anderson_weights needs a non-empty window");
    if (f_t.size() != window.dim())
        throw DimensionError("residual length does not match the window");
    const Matrix<Scalar> df = window.df();
    Matrix<Scalar> gram = df.transpose() * df;
    const double cond = gram_condition(gram);
    const bool regularize = cond > stab.powell_cond_threshold;
    if (regularize)
        gram.diagonal().array() += Scalar(stab.tikhonov_delta) * gram.trace() / Scalar(k);
    const Eigen::LDLT<Matrix<Scalar>> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !(gram.trace() > Scalar(0)))
        return std::nullopt;
    Vector<Scalar> beta = ldlt.solve(df.transpose() * f_t);
    if (!all_finite(beta))
        return std::nullopt;
    Vector<Scalar> alpha(k + 1);
    alpha(0) = beta(0);
    for (Index i = 1; i < k; ++i)
        alpha(i) = beta(i) - beta(i - 1);
    alpha(k) = Scalar(1) - beta(k - 1);
    return AndersonWeights<Scalar>{std::move(beta), std::move(alpha), cond, regularize};
}

/// max |G dF - dV| (type2) or |J dV - dF| (type1) of the unregularized
/// closed form, evaluated through the k x k normal equations.
template <typename Scalar>
Scalar multi_secant_residual(const Matrix<Scalar>& dv, const Matrix<Scalar>& df, AndersonKind kind) {
    const Matrix<Scalar>& basis = kind == AndersonKind::type2 ? df : dv;
    const Matrix<Scalar> diff = kind == AndersonKind::type2 ? Matrix<Scalar>(dv - df) : Matrix<Scalar>(df - dv);
    const Matrix<Scalar> gram = basis.transpose() * basis;
    const Matrix<Scalar> x = gram.ldlt().solve(gram);
    const Matrix<Scalar> err = diff * (x - Matrix<Scalar>::Identity(gram.rows(), gram.cols()));
    return err.size() == 0 ? Scalar(0) : err.cwiseAbs().maxCoeff();
}

/// Numerical-rank test on G_t - G_{t-1} (or J_t - J_{t-1}) for consecutive
/// windows: either the next window slides the previous one by one pair or it
/// appends one pair to it. Windows across a restart are rejected.
template <typename Scalar>
bool rank_one_check(const AndersonWindow<Scalar>& prev, const AndersonWindow<Scalar>& next,
                    AndersonKind kind = AndersonKind::type2) {
    if (prev.dim() != next.dim() || prev.epoch() != next.epoch() || prev.fill() < 1)
        throw PreconditionError("rank_one_check: windows are not consecutive");
    const Index kp = prev.fill();
    const Index kn = next.fill();
    const bool slides = kp == kn && kp == prev.memory() && next.start() == prev.start() + 1;
    const bool grows = kn == kp + 1 && next.start() == prev.start();
    const bool same = kp == kn && next.start() == prev.start();
    if (!slides && !grows && !same)
        throw PreconditionError("rank_one_check: windows are not consecutive");
    const Matrix<Scalar> pdv = prev.dv(), pdf = prev.df(), ndv = next.dv(), ndf = next.df();
    const Index offset = slides ? 1 : 0;
    const Index shared = same ? kp : kp - offset;
    if (pdv.rightCols(shared) != ndv.leftCols(shared) && !same)
        throw PreconditionError("rank_one_check: windows do not share their history");
    if (same && (pdv != ndv || pdf != ndf))
        throw PreconditionError("rank_one_check: windows do not share their history");
    if (!same && pdf.rightCols(shared) != ndf.leftCols(shared))
        throw PreconditionError("rank_one_check: windows do not share their history");
    const Matrix<Scalar> diff =
        anderson_update_matrices(ndv, ndf, kind) - anderson_update_matrices(pdv, pdf, kind);
    if (diff.cwiseAbs().maxCoeff() == Scalar(0))
        return true;
    const Eigen::JacobiSVD<Matrix<Scalar>> svd(diff);
    const auto& sv = svd.singularValues();
    return sv.size() < 2 || sv(1) <= Scalar(1e-8) * sv(0);
}

/// Anderson-accelerated VI with Powell blending, restarts and safeguarding.
///   type2: v_{t+1} = v_t - G_t F(v_t) = sum_i alpha_i T(v_{t-k+i})
///   type1: v_{t+1} = v_t - J_t^{-1} F(v_t), J_t applied through the k x k
///          capacitance system (I + W U) of J_t = I + U W.
/// memory = 0 disables the window and reproduces VI exactly.
template <typename Scalar>
Solution<Scalar> solve_anderson_vi(const Mdp<Scalar>& mdp, const NonDeduced<Vector<Scalar>>& v0,
                                   const SolverConfig& cfg = {},
                                   const StabilizationConfig& stab = {}, AndersonKind kind = AndersonKind::type2,
                                   Index memory = 5) {
    detail::check_length(mdp, v0);
    stab.validate();
    if (memory < 0)
        throw ValidationError("Anderson memory must be nonnegative");
    const Index n = mdp.states();
    detail::TraceRecorder<Scalar> rec(cfg);
    AndersonColumns<Scalar> cols;
    auto note = [&cols](Index fill, std::size_t restarts, bool fired, Scalar secant) {
        cols.window_fill.push_back(fill);
        cols.restarts.push_back(restarts);
        cols.safeguard_fired.push_back(fired);
        cols.secant_residual.push_back(secant);
    };

    AndersonWindow<Scalar> window(n, memory);
    std::size_t restarts = 0;
    Vector<Scalar> v = v0;
    Vector<Scalar> tv = bellman_values(mdp, v);
    Vector<Scalar> f = v - tv;
    Scalar best = sup_norm(f);
    note(0, 0, false, Scalar(0));
    bool stop = rec.record(best, v);

    for (std::size_t step = 1; !stop; ++step) {
        Vector<Scalar> candidate = tv;
        Scalar secant = 0;
        if (window.fill() > 0) {
            const Matrix<Scalar> dv = window.dv();
            const Matrix<Scalar> df = window.df();
            const Matrix<Scalar>& basis = kind == AndersonKind::type2 ? df : dv;
            Matrix<Scalar> gram = basis.transpose() * basis;
            const double cond = gram_condition(gram);
            std::optional<Vector<Scalar>> accelerated;
            if (cond <= stab.restart_cond_cap) {
                if (kind == AndersonKind::type2) {
                    if (auto w = anderson_weights(window, f, stab))
                        accelerated = Vector<Scalar>(tv - (dv - df) * w->beta);
                } else {
                    if (cond > stab.powell_cond_threshold)
                        gram.diagonal().array() += Scalar(stab.tikhonov_delta) * gram.trace() / Scalar(gram.rows());
                    // J = I + U W with U = dF - dV, W = (dV'dV)^{-1} dV'.
                    const Matrix<Scalar> w = gram.ldlt().solve(dv.transpose());
                    const Matrix<Scalar> u = df - dv;
                    Matrix<Scalar> cap = w * u;
                    cap.diagonal().array() += Scalar(1);
                    const Eigen::FullPivLU<Matrix<Scalar>> lu(cap);
                    if (lu.isInvertible() && lu.rcond() > 1e-12) {
                        const Vector<Scalar> d = f - u * lu.solve(Vector<Scalar>(w * f));
                        accelerated = Vector<Scalar>(v - d);
                    }
                }
            }
            if (accelerated && all_finite(*accelerated)) {
                secant = multi_secant_residual(dv, df, kind);
                if (cond > stab.powell_cond_threshold) {
                    const Scalar theta = Scalar(stab.powell_theta);
                    candidate = v + theta * (tv - v) + (Scalar(1) - theta) * (*accelerated - v);
                } else {
                    candidate = std::move(*accelerated);
                }
            } else {
                window.clear();
                ++restarts;
            }
        }

        Vector<Scalar> t_cand = bellman_values(mdp, candidate);
        Vector<Scalar> f_cand = candidate - t_cand;
        Scalar res = sup_norm(f_cand);
        bool fired = false;
        if (stab.safeguard && step % stab.safeguard_period == 0 && res > Scalar(stab.safeguard_factor) * best &&
            candidate != tv) {
            candidate = tv;
            t_cand = bellman_values(mdp, candidate);
            f_cand = candidate - t_cand;
            res = sup_norm(f_cand);
            fired = true;
        }
        window.push(candidate - v, f_cand - f);
        v = std::move(candidate);
        tv = std::move(t_cand);
        f = std::move(f_cand);
        if (res < best)
            best = res;
        note(window.fill(), restarts, fired, secant);
        stop = rec.record(res, v);
    }
    auto trace = rec.take();
    trace.anderson = std::move(cols);
    auto greedy = bellman_apply(mdp, v).greedy;
    return {std::move(v), std::move(greedy), std::move(trace)};
}

} // namespace mdplab
