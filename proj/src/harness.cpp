#include "mdplab/harness.hpp"

#include "mdplab/anderson.hpp"
#include "mdplab/first_order.hpp"
#include "mdplab/newton.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <set>
#include <thread>

namespace mdplab {

using nlohmann::json;

RateFit estimate_rate(const std::vector<double>& residuals) {
    std::vector<std::size_t> rows;
    for (std::size_t t = residuals.size(); t-- > 0 && rows.size() < kFitWindow;)
        if (residuals[t] >= kFitLow && residuals[t] <= kFitHigh)
            rows.push_back(t);
    if (rows.size() < kFitMinPoints)
        throw PreconditionError("estimate_rate: need at least 10 residuals in [1e-10, 1e-2], found " +
                                std::to_string(rows.size()));
    std::reverse(rows.begin(), rows.end());
    const auto m = static_cast<Index>(rows.size());
    Eigen::VectorXd x(m), y(m);
    for (Index i = 0; i < m; ++i) {
        x(i) = static_cast<double>(rows[static_cast<std::size_t>(i)]);
        y(i) = std::log10(residuals[rows[static_cast<std::size_t>(i)]]);
    }
    const double xm = x.mean();
    const double ym = y.mean();
    const Eigen::VectorXd dx = x.array() - xm;
    const Eigen::VectorXd dy = y.array() - ym;
    const double slope = dx.dot(dy) / dx.squaredNorm();
    const double ss_tot = dy.squaredNorm();
    const double ss_res = (dy - slope * dx).squaredNorm();
    const double r2 = ss_tot > 0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
    const double rate = std::pow(10.0, slope);
    return {rate, r2, rows.front(), rows.back(), rate >= 1.0};
}

namespace {

constexpr std::pair<Algorithm, const char*> kAlgorithmNames[] = {
    {Algorithm::vi, "vi"},
    {Algorithm::vc, "vc"},
    {Algorithm::rvi, "rvi"},
    {Algorithm::avi, "avi"},
    {Algorithm::mvi, "mvi"},
    {Algorithm::avc, "avc"},
    {Algorithm::mvc, "mvc"},
    {Algorithm::pi, "pi"},
    {Algorithm::newton_beta, "newton-beta"},
    {Algorithm::anderson1, "anderson1"},
    {Algorithm::anderson2, "anderson2"},
    {Algorithm::mdvi, "mdvi"},
};

} // namespace

std::string to_string(Algorithm algo) {
    for (const auto& [a, name] : kAlgorithmNames)
        if (a == algo)
            return name;
    return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
    for (const auto& [a, n] : kAlgorithmNames)
        if (name == n)
            return a;
    throw ValidationError("unknown algorithm '" + name + "'");
}

std::optional<double> theoretical_rate(Algorithm algo, double lambda, const SolverConfig& cfg) {
    const auto c = ContractionConstants<double>::from_lambda(lambda);
    const double sk = std::sqrt(c.kappa);
    switch (algo) {
    case Algorithm::vi:
    case Algorithm::vc: return lambda;
    case Algorithm::rvi: {
        const double alpha = cfg.alpha.value_or(1.0);
        return std::abs(1.0 - alpha) + alpha * lambda;
    }
    case Algorithm::avc: return cfg.alpha || cfg.gamma ? std::nullopt : std::optional<double>(1.0 - sk);
    case Algorithm::mvc:
        return cfg.alpha || cfg.beta_momentum ? std::nullopt : std::optional<double>((1.0 - sk) / (1.0 + sk));
    default: return std::nullopt;
    }
}

namespace {

json config_to_json(const RunConfig& rc) {
    const SolverConfig& c = rc.solver;
    json j;
    j["tol"] = c.tol;
    j["max_iter"] = c.max_iter;
    if (c.alpha)
        j["alpha"] = *c.alpha;
    if (c.gamma)
        j["gamma"] = *c.gamma;
    if (c.beta_momentum)
        j["beta_momentum"] = *c.beta_momentum;
    j["beta_smooth"] = rc.beta_smooth;
    j["memory"] = rc.memory;
    j["eta"] = c.eta_mirror;
    j["divergence"] = c.divergence_kind == DivergenceKind::kullback_leibler ? "kl" : "euclidean";
    j["variant"] = c.mirror_variant;
    j["rate_tolerance"] = rc.rate_tolerance;
    return j;
}

json instance_to_json(const GenSpec& g) {
    return json{{"kind", to_string(g.kind)}, {"n", g.n},         {"a", g.a},
                {"lambda", g.lambda},        {"seed", g.seed},   {"reward_scale", g.reward_scale}};
}

struct CellOutcome {
    SolverTrace<double> trace;
    bool converged;
};

CellOutcome dispatch(const Mdp<double>& mdp, Algorithm algo, const RunConfig& rc) {
    const SolverConfig& cfg = rc.solver;
    const Vector<double> v0 = Vector<double>::Zero(mdp.states());
    const auto uniform = Policy<double>::uniform(mdp.states(), mdp.actions());
    auto done = [](SolverTrace<double> t) {
        const bool ok = t.termination == Termination::converged;
        return CellOutcome{std::move(t), ok};
    };
    switch (algo) {
    case Algorithm::vi: return done(solve_vi(mdp, v0, cfg).trace);
    case Algorithm::vc: return done(solve_vc(mdp, uniform, v0, cfg).trace);
    case Algorithm::rvi: return done(solve_rvi(mdp, v0, cfg).trace);
    case Algorithm::avi: return done(solve_avi(mdp, v0, std::nullopt, cfg).trace);
    case Algorithm::mvi: return done(solve_mvi(mdp, v0, std::nullopt, cfg).trace);
    case Algorithm::avc: return done(solve_avc(mdp, uniform, v0, std::nullopt, cfg).trace);
    case Algorithm::mvc: return done(solve_mvc(mdp, uniform, v0, std::nullopt, cfg).trace);
    case Algorithm::newton_beta: return done(solve_newton_smoothed(mdp, rc.beta_smooth, v0, cfg).trace);
    case Algorithm::anderson1:
        return done(solve_anderson_vi(mdp, v0, cfg, {}, AndersonKind::type1, rc.memory).trace);
    case Algorithm::anderson2:
        return done(solve_anderson_vi(mdp, v0, cfg, {}, AndersonKind::type2, rc.memory).trace);
    case Algorithm::mdvi: return done(solve_md_vi(mdp, v0, uniform, cfg).trace);
    case Algorithm::pi: {
        const auto sol = solve_pi(mdp, std::optional<Policy<double>>{}, 0);
        SolverTrace<double> t;
        t.residuals = sol.trace.bellman_residuals;
        t.wall_time_ns.assign(t.residuals.size(), 0);
        const bool ok = t.residuals.back() <= 1e-9;
        t.termination = ok ? Termination::converged : Termination::max_iter;
        return {std::move(t), ok};
    }
    }
    throw ValidationError("unknown algorithm");
}

} // namespace

ExperimentReport run_cell(const ExperimentCell& cell, std::size_t index) {
    ExperimentReport rep;
    rep.index = index;
    rep.id = cell.id;
    rep.instance = instance_to_json(cell.instance).dump();
    rep.algo = to_string(cell.algo);
    rep.config_echo = config_to_json(cell.config).dump();
    rep.tolerance = cell.config.rate_tolerance;
    const auto start = std::chrono::steady_clock::now();
    try {
        const Mdp<double> mdp = generate(cell.instance);
        const CellOutcome out = dispatch(mdp, cell.algo, cell.config);
        rep.iterations = out.trace.iterations();
        rep.final_residual = out.trace.final_residual();
        rep.termination = to_string(out.trace.termination);
        rep.theoretical_rate = theoretical_rate(cell.algo, cell.instance.lambda, cell.config.solver);
        try {
            rep.fit = estimate_rate(out.trace);
        } catch (const PreconditionError& e) {
            if (rep.theoretical_rate)
                rep.error = e.what();
        }
        rep.pass = out.converged;
        if (rep.theoretical_rate)
            rep.pass = rep.pass && rep.fit && rep.fit->rate <= *rep.theoretical_rate + rep.tolerance;
    } catch (const std::exception& e) {
        rep.error = e.what();
        rep.termination = "error";
        rep.pass = false;
    }
    rep.wall_time_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

std::vector<ExperimentReport> run_experiment(const std::vector<ExperimentCell>& cells, unsigned threads) {
    std::vector<ExperimentReport> reports(cells.size());
    if (cells.empty())
        return reports;
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, cells.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++)
            reports[i] = run_cell(cells[i], i);
    };
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t)
        pool.emplace_back(worker);
    worker();
    return reports;
}

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object())
        throw ValidationError("suite: " + where + " must be an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key))
            throw ValidationError("suite: unknown field '" + key + "' in " + where);
}

GenSpec parse_instance(const json& j, const std::string& where) {
    check_keys(j, {"kind", "n", "a", "lambda", "seed", "reward_scale"}, where);
    if (!j.contains("kind"))
        throw ValidationError("suite: " + where + " needs a kind");
    GenSpec g;
    g.kind = parse_instance_kind(j.at("kind").get<std::string>());
    g.n = j.value("n", g.n);
    g.a = j.value("a", g.a);
    g.lambda = j.value("lambda", g.lambda);
    g.seed = j.value("seed", g.seed);
    g.reward_scale = j.value("reward_scale", g.reward_scale);
    if (g.kind == InstanceKind::reversible_pair || g.kind == InstanceKind::hard_cycle)
        g.a = 1;
    g.validate();
    return g;
}

RunConfig parse_config(const json& j, const std::string& where) {
    check_keys(j,
               {"tol", "max_iter", "alpha", "gamma", "beta_momentum", "beta_smooth", "memory", "eta", "divergence",
                "variant", "rate_tolerance"},
               where);
    RunConfig rc;
    SolverConfig& c = rc.solver;
    c.tol = j.value("tol", c.tol);
    c.max_iter = j.value("max_iter", c.max_iter);
    if (j.contains("alpha"))
        c.alpha = j["alpha"].get<double>();
    if (j.contains("gamma"))
        c.gamma = j["gamma"].get<double>();
    if (j.contains("beta_momentum"))
        c.beta_momentum = j["beta_momentum"].get<double>();
    rc.beta_smooth = j.value("beta_smooth", rc.beta_smooth);
    rc.memory = j.value("memory", rc.memory);
    c.eta_mirror = j.value("eta", c.eta_mirror);
    if (j.contains("divergence")) {
        const auto d = j["divergence"].get<std::string>();
        if (d == "kl")
            c.divergence_kind = DivergenceKind::kullback_leibler;
        else if (d == "euclidean")
            c.divergence_kind = DivergenceKind::squared_euclidean;
        else
            throw ValidationError("suite: divergence must be 'kl' or 'euclidean'");
    }
    c.mirror_variant = j.value("variant", c.mirror_variant);
    rc.rate_tolerance = j.value("rate_tolerance", rc.rate_tolerance);
    c.validate();
    return rc;
}

} // namespace

std::vector<ExperimentCell> parse_suite(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("suite: malformed document: ") + e.what());
    }
    check_keys(doc, {"cells"}, "suite");
    if (!doc.contains("cells") || !doc["cells"].is_array())
        throw ValidationError("suite: 'cells' must be an array");
    std::vector<ExperimentCell> cells;
    std::size_t i = 0;
    for (const json& jc : doc["cells"]) {
        const std::string where = "cell " + std::to_string(i);
        check_keys(jc, {"id", "instance", "algo", "config"}, where);
        if (!jc.contains("instance") || !jc.contains("algo"))
            throw ValidationError("suite: " + where + " needs instance and algo");
        try {
            ExperimentCell cell;
            cell.id = jc.value("id", where);
            cell.instance = parse_instance(jc["instance"], where);
            cell.algo = parse_algorithm(jc["algo"].get<std::string>());
            if (jc.contains("config"))
                cell.config = parse_config(jc["config"], where);
            cells.push_back(std::move(cell));
        } catch (const json::exception& e) {
            throw ValidationError("suite: " + where + ": " + e.what());
        }
        ++i;
    }
    return cells;
}

std::vector<ExperimentCell> default_suite() {
    std::vector<ExperimentCell> cells;
    auto add = [&cells](const std::string& id, GenSpec g, Algorithm algo, RunConfig rc = {}) {
        cells.push_back({id, g, algo, rc});
    };
    const GenSpec cycle{InstanceKind::hard_cycle, 50, 1, 0.9, 0, 1.0};
    add("vi-cycle", cycle, Algorithm::vi);
    add("anderson1-cycle", cycle, Algorithm::anderson1);
    add("anderson2-cycle", cycle, Algorithm::anderson2);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const std::string tag = "-s" + std::to_string(seed);
        const GenSpec rnd{InstanceKind::random, 50, 10, 0.9, seed, 1.0};
        const GenSpec rev{InstanceKind::reversible_pair, 50, 1, 0.9, seed, 1.0};
        RunConfig relaxed;
        relaxed.solver.alpha = 0.8;
        add("vi-random" + tag, rnd, Algorithm::vi);
        add("vc-random" + tag, rnd, Algorithm::vc);
        add("rvi-random" + tag, rnd, Algorithm::rvi, relaxed);
        add("pi-random" + tag, rnd, Algorithm::pi);
        add("newton-beta-random" + tag, rnd, Algorithm::newton_beta);
        add("mdvi-random" + tag, rnd, Algorithm::mdvi);
        add("anderson1-random" + tag, rnd, Algorithm::anderson1);
        add("anderson2-random" + tag, rnd, Algorithm::anderson2);
        add("vc-reversible" + tag, rev, Algorithm::vc);
        add("avc-reversible" + tag, rev, Algorithm::avc);
        add("mvc-reversible" + tag, rev, Algorithm::mvc);
        add("anderson1-reversible" + tag, rev, Algorithm::anderson1);
        add("anderson2-reversible" + tag, rev, Algorithm::anderson2);
    }
    const GenSpec two{InstanceKind::two_state, 2, 2, 0.5, 0, 1.0};
    add("anderson1-two-state", two, Algorithm::anderson1);
    add("anderson2-two-state", two, Algorithm::anderson2);
    return cells;
}

std::string reports_to_json(const std::vector<ExperimentReport>& reports) {
    json out = json::array();
    for (const auto& r : reports) {
        json j;
        j["index"] = r.index;
        j["id"] = r.id;
        j["instance"] = json::parse(r.instance);
        j["algo"] = r.algo;
        j["config"] = json::parse(r.config_echo);
        j["iterations"] = r.iterations;
        j["final_residual"] = r.final_residual;
        j["termination"] = r.termination;
        if (r.fit)
            j["rate_fit"] = json{{"rate", r.fit->rate},
                                 {"r2", r.fit->r2},
                                 {"first", r.fit->first},
                                 {"last", r.fit->last},
                                 {"non_contracting", r.fit->non_contracting}};
        else
            j["rate_fit"] = nullptr;
        j["theoretical_rate"] = r.theoretical_rate ? json(*r.theoretical_rate) : json(nullptr);
        j["tolerance"] = r.tolerance;
        j["pass"] = r.pass;
        j["wall_time_ns"] = r.wall_time_ns;
        if (!r.error.empty())
            j["error"] = r.error;
        out.push_back(std::move(j));
    }
    return json{{"reports", out}}.dump(1) + "\n";
}

} // namespace mdplab
