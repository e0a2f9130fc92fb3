#pragma once

#include <functional>
#include <optional>
#include <string>

#include "radcom/conic/problem.hpp"

namespace radcom::conic {

enum class Status {
    optimal,
    infeasible_certificate,
    max_iters,
    failed, // numerical breakdown, diagnostics carries details
};

struct KktResiduals {
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
};

struct IterInfo {
    int iter;
    double pcost, dcost, gap, pres, dres, mu, tau, kappa, step;
};

struct Options {
    double feastol = 1e-8;
    double reltol = 1e-8;
    double abstol = 1e-9;
    int max_iters = 200;
    int refinement = 1;
    double step = 0.99;
    bool verbose = false;
    std::function<void(const IterInfo&)> on_iteration; // test/diagnostic hook
};

struct Solution {
    Status status = Status::failed;
    /// For infeasible_certificate: false => primal infeasible (y/z carry the
    /// dual improving ray), true => dual infeasible / primal unbounded
    /// (x carries the ray).
    bool dual_infeasible = false;

    double objective = 0.0; // in the problem's own min/max sense

    Vec x;                      // all primal variables (PSD params + free)
    Vec z_lp;                   // duals of inequality rows
    std::vector<Vec> z_soc;     // duals per SOC block
    std::vector<CMat> z_psd;    // Hermitian duals per PSD block
    Vec y_eq;                   // duals of equality rows

    KktResiduals kkt;
    int iterations = 0;
    std::string diagnostics;

    bool optimal() const { return status == Status::optimal; }
};

Solution solve(const Problem& problem, const Options& opts = {});

} // namespace radcom::conic
