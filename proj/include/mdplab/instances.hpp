#pragma once

#include "mdplab/mdp.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace mdplab {

enum class InstanceKind { random, reversible_pair, hard_cycle, single_state, two_state };

std::string to_string(InstanceKind kind);
/// Throws ValidationError on an unknown name.
InstanceKind parse_instance_kind(const std::string& name);

struct GenSpec {
    InstanceKind kind = InstanceKind::random;
    Index n = 10;
    Index a = 2;
    double lambda = 0.9;
    std::uint64_t seed = 0;
    double reward_scale = 1.0;

    void validate() const;
};

/// Uniform double in [0,1) from the top 53 bits of a 64-bit Mersenne twister.
class UniformSource {
public:
    explicit UniformSource(std::uint64_t seed) : engine_(seed) {}
    double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// Flat-Dirichlet kernel rows, rewards uniform on [0, reward_scale], uniform p0.
Mdp<double> gen_random_mdp(const GenSpec& spec);

/// Fixed-policy pair (P, r) with P = D^{-1} W for a random symmetric positive
/// W. P is reversible, so its spectrum is real; this is checked before return.
PolicyMatrices<double> gen_reversible_pair(const GenSpec& spec);

/// P = D^{-1} W for a symmetric nonnegative weight matrix with positive row sums.
Matrix<double> reversible_kernel(const Matrix<double>& w);

/// Wraps a fixed-policy pair as a single-action MDP with uniform p0.
Mdp<double> single_action_mdp(const PolicyMatrices<double>& pair, double lambda);

/// Largest |imaginary part| over the eigenvalues of a square matrix.
double max_imaginary_eigenvalue(const Matrix<double>& p);

/// Deterministic n-cycle s -> s+1 mod n, reward 1 in state 0 only.
Mdp<double> gen_hard_cycle(const GenSpec& spec);

/// Runs VI from 0 on a cycle instance and checks that
/// |v_t - v*|_inf / (lambda^t |v_0 - v*|_inf) stays in [lambda^n, 1] for
/// t in [1, n-1].
bool hard_cycle_ratio_holds(const Mdp<double>& cycle);

/// single_state: n=1, a=1, r=1, lambda=0.9.
/// two_state: lambda=0.5; state 0 stays (r=1) or jumps to state 1 (r=0);
/// state 1 is absorbing with r=0 under both actions.
Mdp<double> gen_named(const GenSpec& spec);

/// Dispatches on spec.kind; reversible pairs come back as single-action MDPs.
Mdp<double> generate(const GenSpec& spec);

} // namespace mdplab
