#pragma once

#include "mdplab/mdp.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mdplab {

enum class DivergenceKind { squared_euclidean, kullback_leibler };

enum class Termination { converged, max_iter, diverged };

inline std::string to_string(Termination t) {
    switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iter: return "max_iter";
    case Termination::diverged: return "diverged";
    }
    return "unknown";
}

struct SolverConfig {
    double tol = 1e-10;
    std::size_t max_iter = 100000;
    std::optional<double> alpha;
    std::optional<double> gamma;
    std::optional<double> beta_momentum;
    double divergence_cap = 1e12;
    double eta_mirror = 1.0;
    DivergenceKind divergence_kind = DivergenceKind::kullback_leibler;
    /// MD-VI: subtract the divergence term from the value update as well.
    bool mirror_variant = false;
    bool store_iterates = false;

    void validate() const {
        if (!(tol > 0))
            throw ValidationError("tol must be positive");
        if (max_iter < 1)
            throw ValidationError("max_iter must be at least 1");
        if (!(divergence_cap > tol))
            throw ValidationError("divergence_cap must exceed tol");
        if (!(eta_mirror > 0))
            throw ValidationError("eta_mirror must be positive");
    }
};

/// Per-iteration Anderson bookkeeping exported as extra trace columns.
template <typename Scalar = double> struct AndersonColumns {
    std::vector<Index> window_fill;
    std::vector<std::size_t> restarts;
    std::vector<bool> safeguard_fired;
    /// max |G dF - dV| (type II) or |J dV - dF| (type I) of the unregularized
    /// window used for the step; 0 on plain steps.
    std::vector<Scalar> secant_residual;
};

/// Row t holds the residual of iterate v_t, so `iterations()` counts rows and
/// a solve started at the fixed point stops at row 0.
template <typename Scalar = double> struct SolverTrace {
    std::vector<Scalar> residuals;
    std::vector<Vector<Scalar>> iterates;
    std::vector<std::int64_t> wall_time_ns;
    Termination termination = Termination::max_iter;
    std::optional<AndersonColumns<Scalar>> anderson;

    std::size_t iterations() const { return residuals.size(); }
    Scalar final_residual() const { return residuals.empty() ? Scalar(NAN) : residuals.back(); }
};

template <typename Scalar> struct Solution {
    Vector<Scalar> v;
    Policy<Scalar> policy;
    SolverTrace<Scalar> trace;
};

template <typename Scalar> struct ValueSolution {
    Vector<Scalar> v;
    SolverTrace<Scalar> trace;
};

namespace detail {

/// Appends rows to a trace and decides termination after each one.
template <typename Scalar> class TraceRecorder {
public:
    explicit TraceRecorder(const SolverConfig& cfg) : cfg_(cfg), last_(Clock::now()) { cfg.validate(); }

    /// Records the residual of the current iterate. Returns true when the
    /// solver must stop; the reason is then stored in the trace.
    template <typename Derived> bool record(Scalar res, const Eigen::MatrixBase<Derived>& v) {
        const auto now = Clock::now();
        trace_.wall_time_ns.push_back(
            std::chrono::duration_cast<std::chrono::nanoseconds>(now - last_).count());
        last_ = now;
        trace_.residuals.push_back(res);
        if (cfg_.store_iterates)
            trace_.iterates.emplace_back(v);
        if (res <= Scalar(cfg_.tol)) {
            trace_.termination = Termination::converged;
            return true;
        }
        if (!std::isfinite(static_cast<double>(res)) || res > Scalar(cfg_.divergence_cap)) {
            trace_.termination = Termination::diverged;
            return true;
        }
        if (trace_.residuals.size() > cfg_.max_iter) {
            trace_.termination = Termination::max_iter;
            return true;
        }
        return false;
    }

    SolverTrace<Scalar>& trace() { return trace_; }
    SolverTrace<Scalar> take() { return std::move(trace_); }

private:
    using Clock = std::chrono::steady_clock;
    const SolverConfig& cfg_;
    Clock::time_point last_;
    SolverTrace<Scalar> trace_;
};

} // namespace detail

} // namespace mdplab
