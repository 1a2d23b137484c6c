#pragma once

#include "mdplab/instances.hpp"

#include <Eigen/Dense>

#include <initializer_list>

namespace fixtures {

using namespace mdplab;

inline Mdp<double> m1() { return gen_named({InstanceKind::single_state, 1, 1, 0.9, 0, 1.0}); }
inline Mdp<double> m2() { return gen_named({InstanceKind::two_state, 2, 2, 0.5, 0, 1.0}); }

inline Mdp<double> random_mdp(Index n, Index a, double lambda, std::uint64_t seed) {
    return gen_random_mdp({InstanceKind::random, n, a, lambda, seed, 1.0});
}

inline Vector<double> vec(std::initializer_list<double> xs) {
    Vector<double> v(static_cast<Index>(xs.size()));
    Index i = 0;
    for (double x : xs)
        v(i++) = x;
    return v;
}

inline Vector<double> zeros(Index n) { return Vector<double>::Zero(n); }

// Two-state policies: state 0 stays or jumps; state 1 takes action 0.
inline Policy<double> stay() { return Policy<double>::deterministic({0, 0}, 2); }
inline Policy<double> jump() { return Policy<double>::deterministic({1, 0}, 2); }

inline Vector<double> random_vector(Index n, std::mt19937_64& rng, double scale = 10.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Vector<double> v(n);
    for (Index i = 0; i < n; ++i)
        v(i) = u(rng);
    return v;
}

} // namespace fixtures
