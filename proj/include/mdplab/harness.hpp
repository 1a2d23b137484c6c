#pragma once

#include "mdplab/instances.hpp"
#include "mdplab/trace.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mdplab {

struct RateFit {
    double rate;
    double r2;
    /// First and last trace row used by the fit.
    std::size_t first;
    std::size_t last;
    bool non_contracting;
};

inline constexpr double kFitLow = 1e-10;
inline constexpr double kFitHigh = 1e-2;
inline constexpr std::size_t kFitWindow = 20;
inline constexpr std::size_t kFitMinPoints = 10;

/// Least-squares slope of log10 residual against iteration over the last 20
/// rows whose residual lies in [1e-10, 1e-2]; rate = 10^slope. Throws
/// PreconditionError with fewer than 10 such rows.
RateFit estimate_rate(const std::vector<double>& residuals);
inline RateFit estimate_rate(const SolverTrace<double>& trace) { return estimate_rate(trace.residuals); }

enum class Algorithm { vi, vc, rvi, avi, mvi, avc, mvc, pi, newton_beta, anderson1, anderson2, mdvi };

std::string to_string(Algorithm algo);
/// Accepts the CLI spellings (vi, ..., newton-beta, anderson1, anderson2, mdvi).
Algorithm parse_algorithm(const std::string& name);

/// Solver knobs shared by the CLI and suite files.
struct RunConfig {
    SolverConfig solver;
    double beta_smooth = 100.0;
    Index memory = 5;
    /// Absolute slack on the theoretical rate.
    double rate_tolerance = 0.02;
};

struct ExperimentCell {
    std::string id;
    GenSpec instance;
    Algorithm algo = Algorithm::vi;
    RunConfig config;
};

struct ExperimentReport {
    std::size_t index = 0;
    std::string id;
    std::string instance;
    std::string algo;
    std::string config_echo;
    std::size_t iterations = 0;
    double final_residual = 0;
    std::string termination;
    std::optional<RateFit> fit;
    std::optional<double> theoretical_rate;
    double tolerance = 0.02;
    bool pass = false;
    std::int64_t wall_time_ns = 0;
    std::string error;
};

/// Rate the algorithm is guaranteed to beat, when one is known: lambda for
/// VI/VC, |1-alpha| + alpha*lambda for RVI, 1-sqrt(kappa) for AVC and
/// (1-sqrt(kappa))/(1+sqrt(kappa)) for MVC.
std::optional<double> theoretical_rate(Algorithm algo, double lambda, const SolverConfig& cfg);

/// Runs one cell. Cells with a theoretical rate pass when they converge and
/// their fitted rate is at most theory + tolerance; the rest pass on
/// convergence alone. Exceptions are captured in the report.
ExperimentReport run_cell(const ExperimentCell& cell, std::size_t index = 0);

/// Runs all cells on up to `threads` workers (0 = hardware concurrency).
/// Reports come back in cell order.
std::vector<ExperimentReport> run_experiment(const std::vector<ExperimentCell>& cells, unsigned threads = 0);

/// Suite documents: {"cells": [{"id", "instance": {...}, "algo", "config": {...}}]}.
std::vector<ExperimentCell> parse_suite(const std::string& text);
std::vector<ExperimentCell> default_suite();

std::string reports_to_json(const std::vector<ExperimentReport>& reports);

} // namespace mdplab
