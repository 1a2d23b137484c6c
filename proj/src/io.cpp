#include "mdplab/io.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace mdplab {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ValidationError("MDP file: " + msg); }

void reject_unknown(const json& doc, const std::set<std::string>& allowed, const std::string& what) {
    if (!doc.is_object())
        throw ValidationError(what + ": top level must be an object");
    for (const auto& [key, _] : doc.items())
        if (!allowed.count(key))
            throw ValidationError(what + ": unknown field '" + key + "'");
    for (const auto& key : allowed)
        if (!doc.contains(key))
            throw ValidationError(what + ": missing field '" + key + "'");
}

double number(const json& x, const std::string& where) {
    if (!x.is_number())
        fail(where + " must be a number");
    return x.get<double>();
}

const json& array_of(const json& x, std::size_t len, const std::string& where) {
    if (!x.is_array() || x.size() != len) {
        std::ostringstream os;
        os << where << " must be an array of length " << len;
        fail(os.str());
    }
    return x;
}

std::string label(const std::string& field, Index s) { return field + "[" + std::to_string(s) + "]"; }

std::string label(const std::string& field, Index s, Index act) {
    return field + "[" + std::to_string(s) + "][" + std::to_string(act) + "]";
}

} // namespace

std::string mdp_to_json(const Mdp<double>& mdp) {
    const Index n = mdp.states();
    const Index a = mdp.actions();
    json doc;
    doc["n"] = n;
    doc["a"] = a;
    doc["lambda"] = mdp.lambda();
    doc["p0"] = std::vector<double>(mdp.p0().data(), mdp.p0().data() + n);
    json rewards = json::array();
    json kernel = json::array();
    for (Index s = 0; s < n; ++s) {
        json rrow = json::array();
        json krow = json::array();
        for (Index act = 0; act < a; ++act) {
            rrow.push_back(mdp.rewards()(s, act));
            const Vector<double> p = mdp.transition(s, act).transpose();
            krow.push_back(std::vector<double>(p.data(), p.data() + n));
        }
        rewards.push_back(std::move(rrow));
        kernel.push_back(std::move(krow));
    }
    doc["rewards"] = std::move(rewards);
    doc["kernel"] = std::move(kernel);
    return doc.dump(1) + "\n";
}

Mdp<double> mdp_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(std::string("malformed document: ") + e.what());
    }
    reject_unknown(doc, {"n", "a", "lambda", "p0", "rewards", "kernel"}, "MDP file");
    if (!doc["n"].is_number_integer() || !doc["a"].is_number_integer())
        fail("n and a must be integers");
    const auto n_raw = doc["n"].get<std::int64_t>();
    const auto a_raw = doc["a"].get<std::int64_t>();
    if (n_raw < 1 || a_raw < 1)
        fail("n and a must be positive");
    const auto n = static_cast<Index>(n_raw);
    const auto a = static_cast<Index>(a_raw);
    const auto un = static_cast<std::size_t>(n);
    const auto ua = static_cast<std::size_t>(a);
    const double lambda = number(doc["lambda"], "lambda");

    Vector<double> p0(n);
    const json& jp0 = array_of(doc["p0"], un, "p0");
    for (Index s = 0; s < n; ++s)
        p0(s) = number(jp0[static_cast<std::size_t>(s)], label("p0", s));

    Matrix<double> rewards(n, a);
    Matrix<double> kernel(n * a, n);
    const json& jr = array_of(doc["rewards"], un, "rewards");
    const json& jk = array_of(doc["kernel"], un, "kernel");
    for (Index s = 0; s < n; ++s) {
        const auto us = static_cast<std::size_t>(s);
        const json& rrow = array_of(jr[us], ua, label("rewards", s));
        const json& krow = array_of(jk[us], ua, label("kernel", s));
        for (Index act = 0; act < a; ++act) {
            const auto uact = static_cast<std::size_t>(act);
            rewards(s, act) = number(rrow[uact], label("rewards", s, act));
            const json& p = array_of(krow[uact], un, label("kernel", s, act));
            for (Index j = 0; j < n; ++j)
                kernel(s * a + act, j) = number(p[static_cast<std::size_t>(j)], label("kernel", s, act));
        }
    }
    try {
        return Mdp<double>(n, a, lambda, std::move(kernel), std::move(rewards), std::move(p0));
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
}

void save_mdp(const Mdp<double>& mdp, const std::string& path) { write_file(path, mdp_to_json(mdp)); }

Mdp<double> load_mdp(const std::string& path) { return mdp_from_json(read_file(path)); }

std::string policy_to_json(const Policy<double>& pi) {
    json rows = json::array();
    for (Index s = 0; s < pi.states(); ++s) {
        const Vector<double> row = pi.probs().row(s).transpose();
        rows.push_back(std::vector<double>(row.data(), row.data() + row.size()));
    }
    json doc;
    doc["probs"] = std::move(rows);
    return doc.dump(1) + "\n";
}

Policy<double> policy_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("policy file: malformed document: ") + e.what());
    }
    reject_unknown(doc, {"probs"}, "policy file");
    const json& rows = doc["probs"];
    if (!rows.is_array() || rows.empty() || !rows[0].is_array() || rows[0].empty())
        throw ValidationError("policy file: probs must be a non-empty array of arrays");
    const auto n = static_cast<Index>(rows.size());
    const auto a = static_cast<Index>(rows[0].size());
    Matrix<double> probs(n, a);
    for (Index s = 0; s < n; ++s) {
        const json& row = rows[static_cast<std::size_t>(s)];
        if (!row.is_array() || static_cast<Index>(row.size()) != a)
            throw ValidationError("policy file: " + label("probs", s) + " has the wrong length");
        for (Index act = 0; act < a; ++act) {
            const json& x = row[static_cast<std::size_t>(act)];
            if (!x.is_number())
                throw ValidationError("policy file: " + label("probs", s, act) + " must be a number");
            probs(s, act) = x.get<double>();
        }
    }
    return Policy<double>(std::move(probs));
}

void save_policy(const Policy<double>& pi, const std::string& path) { write_file(path, policy_to_json(pi)); }

Policy<double> load_policy(const std::string& path) { return policy_from_json(read_file(path)); }

void write_trace_csv(const SolverTrace<double>& trace, std::ostream& out) {
    const auto& and_cols = trace.anderson;
    out << "iter,residual_inf,wall_time_ns";
    if (and_cols)
        out << ",window_fill,restarts_so_far,safeguard_fired";
    out << '\n' << std::setprecision(17);
    for (std::size_t t = 0; t < trace.residuals.size(); ++t) {
        out << t << ',' << trace.residuals[t] << ',' << trace.wall_time_ns[t];
        if (and_cols)
            out << ',' << and_cols->window_fill[t] << ',' << and_cols->restarts[t] << ','
                << (and_cols->safeguard_fired[t] ? 1 : 0);
        out << '\n';
    }
}

SolverTrace<double> read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("iter,residual_inf,wall_time_ns", 0) != 0)
        throw ValidationError("trace file: expected header starting with iter,residual_inf,wall_time_ns");
    SolverTrace<double> trace;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream row(line);
        std::string iter, res, ns;
        if (!std::getline(row, iter, ',') || !std::getline(row, res, ',') || !std::getline(row, ns, ','))
            throw ValidationError("trace file: line " + std::to_string(lineno) + " has too few columns");
        try {
            trace.residuals.push_back(std::stod(res));
            trace.wall_time_ns.push_back(std::stoll(ns));
        } catch (const std::exception&) {
            throw ValidationError("trace file: line " + std::to_string(lineno) + " is not numeric");
        }
    }
    return trace;
}

void write_pi_trace_csv(const PiTrace<double>& trace, std::ostream& out) {
    out << "iter,policy_hash,return_p0,bellman_residual_inf\n" << std::setprecision(17);
    for (std::size_t t = 0; t < trace.policies.size(); ++t)
        out << t << ',' << policy_hash(trace.policies[t]) << ',' << trace.returns[t] << ','
            << trace.bellman_residuals[t] << '\n';
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text))
        throw ValidationError("cannot write '" + path + "'");
}

} // namespace mdplab
