#pragma once

#include "mdplab/mdp.hpp"
#include "mdplab/newton.hpp"
#include "mdplab/trace.hpp"

#include <iosfwd>
#include <string>

namespace mdplab {

/// MDP documents are JSON objects with exactly the fields n, a, lambda, p0,
/// rewards (n x a) and kernel (n x a x n). Doubles are written with
/// round-trip precision, so save followed by load is bit-exact.
std::string mdp_to_json(const Mdp<double>& mdp);
Mdp<double> mdp_from_json(const std::string& text);
void save_mdp(const Mdp<double>& mdp, const std::string& path);
Mdp<double> load_mdp(const std::string& path);

/// Policy documents: {"probs": [[...], ...]} with one row per state.
std::string policy_to_json(const Policy<double>& pi);
Policy<double> policy_from_json(const std::string& text);
void save_policy(const Policy<double>& pi, const std::string& path);
Policy<double> load_policy(const std::string& path);

/// Columns iter, residual_inf, wall_time_ns, plus window_fill,
/// restarts_so_far, safeguard_fired when the trace carries Anderson data.
void write_trace_csv(const SolverTrace<double>& trace, std::ostream& out);
/// Reads the residual and timing columns back; extra columns are accepted.
SolverTrace<double> read_trace_csv(std::istream& in);

/// Columns iter, policy_hash, return_p0, bellman_residual_inf.
void write_pi_trace_csv(const PiTrace<double>& trace, std::ostream& out);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

} // namespace mdplab
