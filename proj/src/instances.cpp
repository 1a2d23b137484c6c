#include "mdplab/instances.hpp"

#include "mdplab/bellman.hpp"
#include "mdplab/first_order.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace mdplab {

std::string to_string(InstanceKind kind) {
    switch (kind) {
    case InstanceKind::random: return "random";
    case InstanceKind::reversible_pair: return "reversible_pair";
    case InstanceKind::hard_cycle: return "hard_cycle";
    case InstanceKind::single_state: return "single_state";
    case InstanceKind::two_state: return "two_state";
    }
    return "unknown";
}

InstanceKind parse_instance_kind(const std::string& name) {
    for (auto kind : {InstanceKind::random, InstanceKind::reversible_pair, InstanceKind::hard_cycle,
                      InstanceKind::single_state, InstanceKind::two_state})
        if (to_string(kind) == name)
            return kind;
    throw ValidationError("unknown instance kind '" + name + "'");
}

void GenSpec::validate() const {
    if (n < 1 || a < 1)
        throw ValidationError("instance sizes must be at least 1");
    if (!(lambda > 0.0 && lambda < 1.0))
        throw ValidationError("lambda must lie in the open interval (0,1)");
    if (!(reward_scale >= 0.0) || !std::isfinite(reward_scale))
        throw ValidationError("reward_scale must be finite and nonnegative");
}

namespace {

void require_kind(const GenSpec& spec, InstanceKind kind) {
    spec.validate();
    if (spec.kind != kind)
        throw ValidationError("generator called with kind '" + to_string(spec.kind) + "', expected '" +
                              to_string(kind) + "'");
}

Vector<double> uniform_p0(Index n) { return Vector<double>::Constant(n, 1.0 / static_cast<double>(n)); }

} // namespace

Mdp<double> gen_random_mdp(const GenSpec& spec) {
    require_kind(spec, InstanceKind::random);
    UniformSource uni(spec.seed);
    const Index n = spec.n;
    const Index a = spec.a;
    Matrix<double> kernel(n * a, n);
    for (Index row = 0; row < n * a; ++row) {
        // Normalized unit exponentials are Dirichlet(1, ..., 1).
        for (Index j = 0; j < n; ++j)
            kernel(row, j) = -std::log1p(-uni.next());
        kernel.row(row) /= kernel.row(row).sum();
    }
    Matrix<double> rewards(n, a);
    for (Index s = 0; s < n; ++s)
        for (Index act = 0; act < a; ++act)
            rewards(s, act) = spec.reward_scale * uni.next();
    return Mdp<double>(n, a, spec.lambda, std::move(kernel), std::move(rewards), uniform_p0(n));
}

double max_imaginary_eigenvalue(const Matrix<double>& p) {
    const Eigen::EigenSolver<Matrix<double>> eig(p, false);
    if (eig.info() != Eigen::Success)
        throw NumericalError("eigenvalue computation failed");
    return eig.eigenvalues().imag().cwiseAbs().maxCoeff();
}

Matrix<double> reversible_kernel(const Matrix<double>& w) {
    if (w.rows() != w.cols())
        throw DimensionError("weight matrix must be square");
    if (w != w.transpose() || (w.array() < 0.0).any())
        throw ValidationError("weight matrix must be symmetric and nonnegative");
    const Vector<double> degree = w.rowwise().sum();
    if ((degree.array() <= 0.0).any())
        throw ValidationError("weight matrix has a zero row");
    return w.array().colwise() / degree.array();
}

PolicyMatrices<double> gen_reversible_pair(const GenSpec& spec) {
    require_kind(spec, InstanceKind::reversible_pair);
    UniformSource uni(spec.seed);
    const Index n = spec.n;
    Matrix<double> w(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = i; j < n; ++j)
            w(i, j) = w(j, i) = 1.0 - uni.next();
    PolicyMatrices<double> pair;
    pair.p_pi = reversible_kernel(w);
    pair.r_pi.resize(n);
    for (Index s = 0; s < n; ++s)
        pair.r_pi(s) = spec.reward_scale * uni.next();
    const double imag = max_imaginary_eigenvalue(pair.p_pi);
    if (imag > 1e-10) {
        std::ostringstream os;
        os << "reversible pair has a complex eigenvalue (imaginary part " << imag << ")";
        throw NumericalError(os.str());
    }
    return pair;
}

Mdp<double> single_action_mdp(const PolicyMatrices<double>& pair, double lambda) {
    const Index n = pair.p_pi.rows();
    return Mdp<double>(n, 1, lambda, pair.p_pi, Matrix<double>(pair.r_pi), uniform_p0(n));
}

Mdp<double> gen_hard_cycle(const GenSpec& spec) {
    require_kind(spec, InstanceKind::hard_cycle);
    const Index n = spec.n;
    Matrix<double> kernel = Matrix<double>::Zero(n, n);
    for (Index s = 0; s < n; ++s)
        kernel(s, (s + 1) % n) = 1.0;
    Matrix<double> rewards = Matrix<double>::Zero(n, 1);
    rewards(0, 0) = 1.0;
    Mdp<double> mdp(n, 1, spec.lambda, std::move(kernel), std::move(rewards), uniform_p0(n));
    if (n <= 100 && !hard_cycle_ratio_holds(mdp))
        throw NumericalError("cycle instance failed its lambda^t error check");
    return mdp;
}

bool hard_cycle_ratio_holds(const Mdp<double>& cycle) {
    const Index n = cycle.states();
    const double lambda = cycle.lambda();
    const Vector<double> v_star = policy_value(cycle, Policy<double>::uniform(n, 1));
    Vector<double> v = Vector<double>::Zero(n);
    const double e0 = sup_norm(v - v_star);
    const double lower = std::pow(lambda, static_cast<double>(n));
    double scale = 1.0;
    for (Index t = 1; t < n; ++t) {
        v = bellman_values(cycle, v);
        scale *= lambda;
        const double ratio = sup_norm(v - v_star) / (scale * e0);
        if (ratio < lower || ratio > 1.0 + 1e-9)
            return false;
    }
    return true;
}

Mdp<double> gen_named(const GenSpec& spec) {
    switch (spec.kind) {
    case InstanceKind::single_state: {
        Matrix<double> kernel = Matrix<double>::Ones(1, 1);
        Matrix<double> rewards = Matrix<double>::Ones(1, 1);
        return Mdp<double>(1, 1, 0.9, std::move(kernel), std::move(rewards), Vector<double>::Ones(1));
    }
    case InstanceKind::two_state: {
        Matrix<double> kernel(4, 2);
        kernel << 1, 0, // state 0, stay
            0, 1,       // state 0, jump
            0, 1,       // state 1
            0, 1;
        Matrix<double> rewards(2, 2);
        rewards << 1, 0, 0, 0;
        Vector<double> p0(2);
        p0 << 1, 0;
        return Mdp<double>(2, 2, 0.5, std::move(kernel), std::move(rewards), std::move(p0));
    }
    default: throw ValidationError("gen_named: '" + to_string(spec.kind) + "' is not a named instance");
    }
}

Mdp<double> generate(const GenSpec& spec) {
    switch (spec.kind) {
    case InstanceKind::random: return gen_random_mdp(spec);
    case InstanceKind::reversible_pair: return single_action_mdp(gen_reversible_pair(spec), spec.lambda);
    case InstanceKind::hard_cycle: return gen_hard_cycle(spec);
    case InstanceKind::single_state:
    case InstanceKind::two_state: return gen_named(spec);
    }
    throw ValidationError("unknown instance kind");
}

} // namespace mdplab
