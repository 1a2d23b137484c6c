// mdplab command-line driver: instance generation, single solves, rate fits
// on saved traces, and benchmark suites.

#include "mdplab/anderson.hpp"
#include "mdplab/first_order.hpp"
#include "mdplab/harness.hpp"
#include "mdplab/instances.hpp"
#include "mdplab/io.hpp"
#include "mdplab/newton.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>

using namespace mdplab;

namespace {

constexpr int kOk = 0;
constexpr int kNotConverged = 1;
constexpr int kInputError = 2;

struct GenArgs {
    std::string kind = "random";
    Index n = 10;
    Index a = 2;
    double lambda = 0.9;
    std::uint64_t seed = 0;
    double reward_scale = 1.0;
    std::string out;
};

struct SolveArgs {
    std::string algo;
    std::string mdp;
    std::string policy;
    std::string trace_out;
    double tol = 1e-10;
    std::size_t max_iter = 100000;
    std::optional<double> alpha, gamma, beta_momentum;
    double beta_smooth = 100.0;
    Index memory = 5;
    double eta = 1.0;
    std::string divergence = "kl";
    bool variant = false;
    std::uint64_t seed = 0;
};

void print_vector(const char* name, const Vector<double>& v) {
    std::cout << name << " =";
    for (Index i = 0; i < v.size(); ++i)
        std::cout << ' ' << v(i);
    std::cout << '\n';
}

void print_actions(const Policy<double>& pi) {
    std::cout << "policy =";
    for (Index act : pi.argmax_actions())
        std::cout << ' ' << act;
    std::cout << '\n';
}

int report_trace(const SolverTrace<double>& trace, const std::string& trace_out) {
    std::cout << "iterations = " << trace.iterations() << "\nresidual = " << trace.final_residual()
              << "\ntermination = " << to_string(trace.termination) << '\n';
    if (!trace_out.empty()) {
        std::ofstream out(trace_out);
        if (!out)
            throw ValidationError("cannot write '" + trace_out + "'");
        write_trace_csv(trace, out);
    }
    return trace.termination == Termination::converged ? kOk : kNotConverged;
}

int run_gen(const GenArgs& g) {
    GenSpec spec{parse_instance_kind(g.kind), g.n, g.a, g.lambda, g.seed, g.reward_scale};
    const Mdp<double> mdp = generate(spec);
    if (g.out.empty() || g.out == "-")
        std::cout << mdp_to_json(mdp);
    else
        save_mdp(mdp, g.out);
    return kOk;
}

int run_solve(const SolveArgs& s) {
    const Algorithm algo = parse_algorithm(s.algo);
    const Mdp<double> mdp = load_mdp(s.mdp);
    SolverConfig cfg;
    cfg.tol = s.tol;
    cfg.max_iter = s.max_iter;
    cfg.alpha = s.alpha;
    cfg.gamma = s.gamma;
    cfg.beta_momentum = s.beta_momentum;
    cfg.eta_mirror = s.eta;
    cfg.mirror_variant = s.variant;
    cfg.divergence_kind =
        s.divergence == "euclidean" ? DivergenceKind::squared_euclidean : DivergenceKind::kullback_leibler;
    cfg.validate();
    if (s.memory < 0 || s.memory > 10)
        throw ValidationError("--memory must lie in 0..10");

    std::optional<Policy<double>> given;
    if (!s.policy.empty())
        given = load_policy(s.policy);
    const Policy<double> pi = given.value_or(Policy<double>::uniform(mdp.states(), mdp.actions()));
    const Vector<double> v0 = Vector<double>::Zero(mdp.states());
    std::cout << std::setprecision(12);

    auto with_policy = [&](const Solution<double>& sol) {
        print_vector("v", sol.v);
        print_actions(sol.policy);
        return report_trace(sol.trace, s.trace_out);
    };
    auto value_only = [&](const ValueSolution<double>& sol) {
        print_vector("v", sol.v);
        return report_trace(sol.trace, s.trace_out);
    };
    switch (algo) {
    case Algorithm::vi: return with_policy(solve_vi(mdp, v0, cfg));
    case Algorithm::rvi: return with_policy(solve_rvi(mdp, v0, cfg));
    case Algorithm::avi: return with_policy(solve_avi(mdp, v0, std::nullopt, cfg));
    case Algorithm::mvi: return with_policy(solve_mvi(mdp, v0, std::nullopt, cfg));
    case Algorithm::vc: return value_only(solve_vc(mdp, pi, v0, cfg));
    case Algorithm::avc: return value_only(solve_avc(mdp, pi, v0, std::nullopt, cfg));
    case Algorithm::mvc: return value_only(solve_mvc(mdp, pi, v0, std::nullopt, cfg));
    case Algorithm::newton_beta: return value_only(solve_newton_smoothed(mdp, s.beta_smooth, v0, cfg));
    case Algorithm::anderson1:
        return with_policy(solve_anderson_vi(mdp, v0, cfg, {}, AndersonKind::type1, s.memory));
    case Algorithm::anderson2:
        return with_policy(solve_anderson_vi(mdp, v0, cfg, {}, AndersonKind::type2, s.memory));
    case Algorithm::mdvi: {
        const auto sol = solve_md_vi(mdp, v0, pi, cfg);
        print_vector("v", sol.v);
        print_actions(sol.policy);
        return report_trace(sol.trace, s.trace_out);
    }
    case Algorithm::pi: {
        const auto sol = solve_pi(mdp, given, s.seed);
        print_vector("v", sol.v_star);
        print_actions(sol.pi_star);
        std::cout << "iterations = " << sol.trace.iterations << "\nresidual = " << sol.trace.bellman_residuals.back()
                  << "\nye_bound = " << sol.trace.ye_bound << '\n';
        if (!s.trace_out.empty()) {
            std::ofstream out(s.trace_out);
            if (!out)
                throw ValidationError("cannot write '" + s.trace_out + "'");
            write_pi_trace_csv(sol.trace, out);
        }
        return sol.trace.bellman_residuals.back() <= 1e-9 ? kOk : kNotConverged;
    }
    }
    return kInputError;
}

int run_rates(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open '" + path + "'");
    const RateFit fit = estimate_rate(read_trace_csv(in));
    std::cout << std::setprecision(10) << "rate = " << fit.rate << "\nr2 = " << fit.r2 << "\nwindow = " << fit.first
              << ".." << fit.last << '\n';
    if (fit.non_contracting)
        std::cout << "non_contracting = true\n";
    return kOk;
}

int run_bench(const std::string& suite, const std::string& out, unsigned threads) {
    const auto cells = suite == "default" ? default_suite() : parse_suite(read_file(suite));
    const auto reports = run_experiment(cells, threads);
    const std::string text = reports_to_json(reports);
    if (out.empty() || out == "-")
        std::cout << text;
    else
        write_file(out, text);
    std::size_t passed = 0;
    for (const auto& r : reports) {
        passed += r.pass ? 1 : 0;
        std::cerr << (r.pass ? "PASS " : "FAIL ") << r.id << (r.error.empty() ? "" : "  (" + r.error + ")")
                  << '\n';
    }
    std::cerr << passed << '/' << reports.size() << " cells passed\n";
    return passed == reports.size() ? kOk : kNotConverged;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mdplab: solvers and convergence-rate experiments for discounted MDPs"};
    app.require_subcommand(1);

    GenArgs g;
    auto* gen = app.add_subcommand("gen", "Generate an instance file");
    gen->add_option("--kind", g.kind, "random | reversible_pair | hard_cycle | single_state | two_state");
    gen->add_option("--n", g.n, "State count");
    gen->add_option("--a", g.a, "Action count");
    gen->add_option("--lambda", g.lambda, "Discount factor in (0,1)");
    gen->add_option("--seed", g.seed, "Generator seed");
    gen->add_option("--reward-scale", g.reward_scale, "Rewards are uniform on [0, scale]");
    gen->add_option("--out", g.out, "Output file (stdout when omitted)");

    SolveArgs s;
    auto* solve = app.add_subcommand("solve", "Run one solver on an instance file");
    solve->add_option("--algo", s.algo, "vi vc rvi avi mvi avc mvc pi newton-beta anderson1 anderson2 mdvi")
        ->required();
    solve->add_option("--mdp", s.mdp, "Instance file")->required();
    solve->add_option("--policy", s.policy, "Policy file (vc/avc/mvc/mdvi start, pi start)");
    solve->add_option("--tol", s.tol, "Sup-norm residual tolerance");
    solve->add_option("--max-iter", s.max_iter, "Iteration cap");
    solve->add_option("--alpha", s.alpha, "Step size");
    solve->add_option("--gamma", s.gamma, "Extrapolation weight (avi/avc)");
    solve->add_option("--beta-momentum", s.beta_momentum, "Momentum weight (mvi/mvc)");
    solve->add_option("--beta-smooth", s.beta_smooth, "Inverse temperature for newton-beta");
    solve->add_option("--memory", s.memory, "Anderson memory m");
    solve->add_option("--eta", s.eta, "Mirror-descent weight (inf allowed)");
    solve->add_option("--divergence", s.divergence, "kl | euclidean")
        ->check(CLI::IsMember({"kl", "euclidean"}));
    solve->add_flag("--variant", s.variant, "MD-VI: subtract the divergence term from the value update");
    solve->add_option("--seed", s.seed, "Seed for the random initial PI policy");
    solve->add_option("--trace-out", s.trace_out, "Write the trace as CSV");

    std::string trace_path;
    auto* rates = app.add_subcommand("rates", "Fit a linear rate to a trace CSV");
    rates->add_option("--trace", trace_path, "Trace file")->required();

    std::string suite = "default", bench_out;
    unsigned threads = 0;
    auto* bench = app.add_subcommand("bench", "Run an experiment suite");
    bench->add_option("--suite", suite, "Suite file, or 'default'");
    bench->add_option("--out", bench_out, "Report file (stdout when omitted)");
    bench->add_option("--threads", threads, "Worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return kInputError;
    }

    try {
        if (*gen)
            return run_gen(g);
        if (*solve)
            return run_solve(s);
        if (*rates)
            return run_rates(trace_path);
        if (*bench)
            return run_bench(suite, bench_out, threads);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNotConverged;
    }
    return kInputError;
}
