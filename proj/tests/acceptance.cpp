// Runs every acceptance criterion under its time budget and prints one
// PASS/FAIL line each. Exits nonzero when any criterion fails.

#include "mdplab/anderson.hpp"
#include "mdplab/first_order.hpp"
#include "mdplab/harness.hpp"
#include "mdplab/instances.hpp"
#include "mdplab/kernels.hpp"
#include "mdplab/newton.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace mdplab;

namespace {

using Wide = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<50>, boost::multiprecision::et_off>;

struct Outcome {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail << "first failure: " << what << "; ";
        }
    }
};

struct Criterion {
    int number;
    std::string name;
    double budget_s;
    std::function<void(Outcome&)> body;
};

Vector<double> zeros(Index n) { return Vector<double>::Zero(n); }

Mdp<double> random_mdp(Index n, Index a, double lambda, std::uint64_t seed) {
    return gen_random_mdp({InstanceKind::random, n, a, lambda, seed, 1.0});
}

SolverConfig storing(double tol = 1e-10) {
    SolverConfig cfg;
    cfg.tol = tol;
    cfg.store_iterates = true;
    return cfg;
}

// Every VI iterate obeys |v_t - v*| <= lambda^t |v_0 - v*|, v* from PI.
void vi_rate(Outcome& out) {
    std::vector<Mdp<double>> suite{gen_hard_cycle({InstanceKind::hard_cycle, 50, 1, 0.9, 0, 1.0})};
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
        suite.push_back(random_mdp(50, 10, 0.9, seed));
    std::size_t checked = 0;
    for (std::size_t i = 0; i < suite.size(); ++i) {
        const auto& m = suite[i];
        const Vector<double> v_star = solve_pi(m).v_star;
        const auto vi = solve_vi(m, zeros(m.states()), storing());
        out.require(vi.trace.termination == Termination::converged, "VI converged on instance " + std::to_string(i));
        const double e0 = sup_norm(vi.trace.iterates[0] - v_star);
        double scale = 1.0;
        for (const auto& v : vi.trace.iterates) {
            out.require(sup_norm(v - v_star) <= scale * e0 + 1e-12,
                        "lambda^t bound on instance " + std::to_string(i));
            scale *= m.lambda();
            ++checked;
        }
        if (i == 0) {
            const double rate = estimate_rate(vi.trace).rate;
            out.detail << "cycle rate " << rate << ", ";
            out.require(rate >= 0.88 && rate <= 0.92, "cycle VI rate in [0.88, 0.92]");
        }
    }
    out.detail << checked << " iterates checked";
}

// The greedy policy of v_next is epsilon-optimal once stop_check fires.
void stopping_rule(Outcome& out) {
    const double eps = 1e-3;
    double worst = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto m = random_mdp(50, 10, 0.9, seed);
        const Vector<double> v_star = solve_pi(m).v_star;
        Vector<double> v = zeros(50);
        for (int t = 0; t < 10000; ++t) {
            Vector<double> next = bellman_values(m, v);
            if (stop_check(v, next, eps, m.lambda())) {
                const auto greedy = bellman_apply(m, next).greedy;
                const double gap = sup_norm(policy_value(m, greedy) - v_star);
                worst = std::max(worst, gap);
                out.require(gap <= eps, "greedy policy eps-optimal on seed " + std::to_string(seed));
                break;
            }
            v = std::move(next);
        }
    }
    out.detail << "worst policy gap " << worst;
}

std::vector<Mdp<double>> pi_suite() {
    std::vector<Mdp<double>> suite;
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<Index> states(2, 20), actions(2, 10);
    for (std::uint64_t seed = 1; seed <= 50; ++seed)
        suite.push_back(random_mdp(states(rng), actions(rng), 0.9, seed));
    return suite;
}

// Reference values by value iteration in a 50-digit scalar.
Vector<double> wide_vi(const Mdp<double>& m) {
    const auto w = m.cast<Wide>();
    Vector<Wide> v = Vector<Wide>::Zero(m.states());
    for (;;) {
        Vector<Wide> next = bellman_values(w, v);
        const Wide diff = (next - v).cwiseAbs().maxCoeff();
        v = std::move(next);
        if (diff < Wide(1e-30))
            break;
    }
    return v.cast<double>();
}

void pi_correctness(Outcome& out) {
    std::size_t most = 0;
    for (const auto& m : pi_suite()) {
        const auto s = solve_pi(m);
        const std::size_t iters = s.trace.policies.size();
        most = std::max(most, iters);
        out.require(sup_norm(s.v_star - bellman_values(m, s.v_star)) <= 1e-9, "Bellman residual <= 1e-9");
        out.require(sup_norm(s.v_star - wide_vi(m)) <= 1e-8, "match high-precision VI within 1e-8");
        out.require(static_cast<double>(iters) <= s.trace.ye_bound, "iterations within the Ye bound");
    }
    out.detail << "max PI iterations " << most;
}

void pi_is_newton(Outcome& out) {
    std::size_t matched = 0, skipped = 0;
    for (const auto& m : pi_suite()) {
        const auto s = solve_pi(m);
        std::vector<Vector<double>> points{zeros(m.states())};
        points.insert(points.end(), s.trace.values.begin(), s.trace.values.end());
        for (const auto& v : points) {
            const auto c = pi_newton_step_check(m, v);
            out.require(c.match != StepMatch::mismatch, "PI step equals Newton step");
            (c.match == StepMatch::match ? matched : skipped)++;
        }
    }
    out.detail << matched << " differentiable iterates matched, " << skipped << " ties skipped";
    out.require(matched > 0, "at least one differentiable iterate");
}

void accelerated_rates(Outcome& out) {
    const double sk = std::sqrt(0.1 / 1.9);
    const double avc_bound = 1 - sk + 0.02;
    const double mvc_bound = (1 - sk) / (1 + sk) + 0.02;
    double worst_avc = 0, worst_mvc = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto pair = gen_reversible_pair({InstanceKind::reversible_pair, 50, 1, 0.9, seed, 1.0});
        const auto m = single_action_mdp(pair, 0.9);
        const auto pi = Policy<double>::uniform(50, 1);
        const SolverConfig cfg;
        const double vc = estimate_rate(solve_vc(m, pi, zeros(50), cfg).trace).rate;
        const double avc = estimate_rate(solve_avc(m, pi, zeros(50), std::nullopt, cfg).trace).rate;
        const double mvc = estimate_rate(solve_mvc(m, pi, zeros(50), std::nullopt, cfg).trace).rate;
        worst_avc = std::max(worst_avc, avc);
        worst_mvc = std::max(worst_mvc, mvc);
        out.require(avc <= avc_bound, "AVC rate bound on seed " + std::to_string(seed));
        out.require(mvc <= mvc_bound, "MVC rate bound on seed " + std::to_string(seed));
        out.require(avc < vc && mvc < vc, "accelerated rates below VC");
    }
    out.detail << "worst AVC " << worst_avc << " (<= " << avc_bound << "), worst MVC " << worst_mvc << " (<= "
               << mvc_bound << ")";
}

void smoothed_gap(Outcome& out) {
    double worst_ratio = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto m = random_mdp(20, 2, 0.9, seed);
        const Vector<double> v_star = solve_pi(m).v_star;
        double previous = std::numeric_limits<double>::infinity();
        for (double beta : {10.0, 100.0, 1000.0}) {
            const auto s = solve_newton_smoothed(m, beta, zeros(20));
            out.require(s.trace.termination == Termination::converged, "smoothed Newton converged");
            const double gap = sup_norm(s.v - v_star);
            const double bound = 0.9 * std::log(2.0) / (beta * 0.1);
            worst_ratio = std::max(worst_ratio, gap / bound);
            out.require(gap <= bound, "gap within the log(A) bound");
            out.require(gap <= previous, "gap nonincreasing in beta");
            previous = gap;
        }
    }
    out.detail << "largest gap/bound " << worst_ratio;
}

// Runs in a 50-digit scalar: in double the residual hits rounding level
// after a single doubling step.
void newton_tail(Outcome& out) {
    const double floor_log10 = -45;
    int shortest = std::numeric_limits<int>::max();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto m = random_mdp(20, 4, 0.9, seed).cast<Wide>();
        SolverConfig cfg;
        cfg.tol = 1e-40;
        cfg.max_iter = 50;
        const auto s = solve_newton_smoothed(m, Wide(10), Vector<Wide>(Vector<Wide>::Zero(20)), cfg);
        out.require(s.trace.termination == Termination::converged, "Newton reached 1e-40");
        std::vector<double> lg;
        for (const auto& r : s.trace.residuals)
            lg.push_back(r > 0 ? static_cast<double>(log10(r)) : -std::numeric_limits<double>::infinity());
        int run = 0, best = 0;
        for (std::size_t t = 0; t + 1 < lg.size(); ++t) {
            if (lg[t + 1] <= floor_log10)
                break;
            if (lg[t] < -2 && lg[t + 1] <= 2 * lg[t])
                best = std::max(best, ++run);
            else
                run = 0;
        }
        shortest = std::min(shortest, best);
        out.require(best >= 2, "two consecutive doubling steps on seed " + std::to_string(seed));
    }
    out.detail << "shortest doubling run " << shortest;
}

void anderson(Outcome& out) {
    SolverConfig cfg = storing();
    for (auto kind : {AndersonKind::type1, AndersonKind::type2}) {
        const auto m1 = gen_named({InstanceKind::single_state, 1, 1, 0.9, 0, 1.0});
        const auto s = solve_anderson_vi(m1, zeros(1), cfg, {}, kind, 1);
        out.require(s.trace.iterates.size() == 3 && std::abs(s.trace.iterates[2](0) - 10.0) <= 1e-12,
                    "one-state instance exact at iteration 2");
    }
    std::size_t runs = 0, converged = 0;
    double worst_secant = 0;
    for (const auto& cell : default_suite()) {
        if (cell.algo != Algorithm::anderson1 && cell.algo != Algorithm::anderson2)
            continue;
        const auto kind = cell.algo == Algorithm::anderson1 ? AndersonKind::type1 : AndersonKind::type2;
        const auto m = generate(cell.instance);
        SolverConfig tight;
        tight.tol = 1e-10;
        const auto s = solve_anderson_vi(m, zeros(m.states()), tight, {}, kind, cell.config.memory);
        ++runs;
        converged += s.trace.termination == Termination::converged;
        out.require(s.trace.termination == Termination::converged, "converged on " + cell.id);
        for (double sec : s.trace.anderson->secant_residual)
            worst_secant = std::max(worst_secant, sec);
    }
    out.require(worst_secant <= 1e-8, "multi-secant residual <= 1e-8");
    out.detail << converged << "/" << runs << " suite runs converged, worst secant residual " << worst_secant;
}

std::vector<double> ratios_to(const std::vector<Vector<double>>& xs, const Vector<double>& x_star) {
    std::vector<double> out;
    for (std::size_t t = 1; t < xs.size(); ++t)
        out.push_back((xs[t] - x_star).norm() / (xs[t - 1] - x_star).norm());
    return out;
}

void kernels(Outcome& out) {
    struct Conditioning {
        double mu, ell;
    };
    double worst_excess[3] = {-1, -1, -1};
    const char* names[3] = {"GD", "AGD", "MGD"};
    for (const auto c : {Conditioning{0.1, 1.9}, Conditioning{0.01, 1.0}}) {
        const double k = c.mu / c.ell, sk = std::sqrt(k);
        const double theory[3] = {(1 - k) / (1 + k), 1 - sk, (1 - sk) / (1 + sk)};
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto q = make_quadratic<double>(20, c.mu, c.ell, seed);
            const auto p = q.problem();
            SolverConfig cfg;
            cfg.tol = 1e-12;
            const double fitted[3] = {
                estimate_rate(gd_solve(p, zeros(20), 2.0 / (c.mu + c.ell), cfg).trace).rate,
                estimate_rate(agd_solve(p, zeros(20), std::nullopt, cfg).trace).rate,
                estimate_rate(mgd_solve(p, zeros(20), std::nullopt, cfg).trace).rate,
            };
            for (int i = 0; i < 3; ++i) {
                const double excess = fitted[i] - theory[i];
                worst_excess[i] = std::max(worst_excess[i], excess);
                std::ostringstream what;
                what << names[i] << " rate within +0.01 at kappa=" << k << " seed " << seed << " (excess "
                     << excess << ")";
                out.require(excess <= 0.01, what.str());
            }
        }
    }
    for (int i = 0; i < 3; ++i)
        out.detail << names[i] << " worst excess " << worst_excess[i] << ", ";

    for (auto strategy : {QuasiNewtonStrategy::broyden1, QuasiNewtonStrategy::broyden2, QuasiNewtonStrategy::bfgs}) {
        for (Index dim : {3, 10}) {
            const auto q = make_quadratic<double>(dim, 0.5, 2.0, static_cast<std::uint64_t>(dim));
            SolverConfig cfg = storing(1e-13);
            const Vector<double> x0 = q.x_star + 0.1 * Vector<double>::Ones(dim);
            const auto s = quasi_newton_solve(q.gradient_root(), x0, strategy, cfg);
            out.require(s.trace.termination == Termination::converged, "quasi-Newton converged");
            const auto r = ratios_to(s.trace.iterates, q.x_star);
            const std::size_t from = r.size() > 5 ? r.size() - 5 : 0;
            bool below = false;
            for (std::size_t t = from; t < r.size(); ++t)
                below = below || r[t] < 0.1;
            out.require(!r.empty() && below && r.back() < 0.1, "quasi-Newton error ratios fall below 0.1");
        }
    }

    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal;
    auto gaussian = [&](Index rows, Index cols) {
        Matrix<double> m(rows, cols);
        for (Index i = 0; i < m.size(); ++i)
            m.data()[i] = normal(rng);
        return m;
    };
    double worst = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix<double> j0 = gaussian(6, 6);
        const Matrix<double> s0 = gaussian(6, 6);
        const Matrix<double> spd = s0 * s0.transpose() + Matrix<double>::Identity(6, 6);
        const Vector<double> dx = gaussian(6, 1);
        const Vector<double> df = gaussian(6, 1);
        const Vector<double> curved = spd * dx;
        const Matrix<double> b1 = broyden_update_type1(j0, dx, df);
        const auto b2 = broyden_update_type2(j0, dx, df);
        const auto bf = bfgs_update(spd, dx, curved);
        out.require(b2 && bf, "updates defined on generic data");
        if (!b2 || !bf)
            continue;
        const Matrix<double> x = gaussian(6, 3), f = gaussian(6, 3);
        const double errs[] = {
            (b1 * dx - df).norm(),
            (*b2 * df - dx).norm(),
            (*bf * dx - curved).norm() / curved.norm(),
            (*bf - bf->transpose()).cwiseAbs().maxCoeff(),
            (broyden_update_type1(j0, dx, Vector<double>(j0 * dx)) - j0).cwiseAbs().maxCoeff(),
            (*broyden_update_type2(j0, Vector<double>(j0 * df), df) - j0).cwiseAbs().maxCoeff(),
            (*bfgs_update(spd, dx, curved) - spd).cwiseAbs().maxCoeff() / spd.norm(),
            (anderson_update_matrices(x, f, AndersonKind::type1) * x - f).norm(),
            (anderson_update_matrices(x, f, AndersonKind::type2) * f - x).norm(),
        };
        for (double e : errs) {
            worst = std::max(worst, e);
            out.require(e <= 1e-10, "secant / no-change / symmetry invariant");
        }
    }
    out.detail << "worst invariant error " << worst;
}

bool same_trace(const SolverTrace<double>& a, const SolverTrace<double>& b) {
    return a.residuals == b.residuals && a.iterates == b.iterates && a.termination == b.termination;
}

void reductions(Outcome& out) {
    std::size_t instances = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto m = random_mdp(15, 4, seed % 2 ? 0.9 : 0.7, seed);
        const Vector<double> v0 = zeros(15);
        const auto vi = solve_vi(m, v0, storing()).trace;

        SolverConfig plain = storing();
        plain.alpha = 1.0;
        out.require(same_trace(solve_rvi(m, v0, plain).trace, vi), "RVI(alpha=1) == VI");
        plain.gamma = 0.0;
        out.require(same_trace(solve_avi(m, v0, std::nullopt, plain).trace, vi), "AVI(gamma=0) == VI");
        plain.beta_momentum = 0.0;
        out.require(same_trace(solve_mvi(m, v0, std::nullopt, plain).trace, vi), "MVI(beta=0) == VI");
        for (auto kind : {AndersonKind::type1, AndersonKind::type2})
            out.require(same_trace(solve_anderson_vi(m, v0, storing(), {}, kind, 0).trace, vi),
                        "Anderson(m=0) == VI");

        SolverConfig greedy = storing();
        greedy.eta_mirror = std::numeric_limits<double>::infinity();
        const auto md = solve_md_vi(m, v0, Policy<double>::uniform(15, 4), greedy).trace;
        bool close = md.iterates.size() == vi.iterates.size();
        for (std::size_t t = 0; close && t < vi.iterates.size(); ++t)
            close = sup_norm(md.iterates[t] - vi.iterates[t]) <= 1e-9;
        out.require(close, "MD-VI(eta=inf) == VI within 1e-9");
        ++instances;
    }
    out.detail << instances << " instances";
}

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "VI error decays as lambda^t", 5, vi_rate},
        {2, "stopping rule yields eps-optimal policy", 10, stopping_rule},
        {3, "PI correctness and Ye bound", 10, pi_correctness},
        {4, "PI step equals Newton step", 10, pi_is_newton},
        {5, "AVC/MVC accelerated rates", 10, accelerated_rates},
        {6, "smoothed fixed point gap", 10, smoothed_gap},
        {7, "Newton on smoothed operator: quadratic tail", 5, newton_tail},
        {8, "Anderson exactness and stabilized convergence", 30, anderson},
        {9, "optimization kernels", 10, kernels},
        {10, "reductions to VI", 5, reductions},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome out;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.body(out);
        } catch (const std::exception& e) {
            out.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::ostringstream timing;
        timing << secs << " s";
        out.require(secs < c.budget_s, "runtime " + timing.str() + " over the " + std::to_string(int(c.budget_s)) +
                                           " s budget");
        failures += !out.ok;
        std::printf("%s criterion %d: %s [%.2f s / %.0f s] %s\n", out.ok ? "PASS" : "FAIL", c.number,
                    c.name.c_str(), secs, c.budget_s, out.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
