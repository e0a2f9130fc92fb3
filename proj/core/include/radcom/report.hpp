#pragma once

#include <vector>

#include "radcom/metrics.hpp"

namespace radcom {

/// Per-solve trajectory and outcome record shared by both solvers.
struct SolveReport {
    enum class Status { converged, max_iters, diverged };
    Status status = Status::max_iters;

    std::vector<double> objective_trace; // penalized objective / AO power per iter
    std::vector<double> violation_trace; // penalty xi per outer iteration
    std::vector<double> power_trace;     // transmit power in watts per iteration
    std::vector<double> rho_trace;       // penalty coefficient per outer iteration

    std::vector<double> rank_ratio_trace; // AO: max lambda2/lambda1 over W blocks
    std::vector<double> phase_min_trace;  // AO: min_m |v_m|

    int iters_outer = 0;
    int iters_inner_total = 0;
    double wall_seconds = 0.0;

    FeasibilityReport final_feasibility;

    bool converged() const { return status == Status::converged; }
};

} // namespace radcom
