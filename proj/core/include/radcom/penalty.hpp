#pragma once

#include <utility>

#include "radcom/report.hpp"
#include "radcom/rng.hpp"
#include "radcom/scene.hpp"

namespace radcom {

/// Raised when a dual subproblem has no bounded solution in the current
/// direction (h_k^H w_ck = 0 with the SINR constraint violated, or all radar
/// responses zero). The remedy is a fresh random restart.
struct DegenerateDirectionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Case-I data with channels normalized so the noise power is 1; the paper's
/// convergence numbers (and the xi threshold) are in these units. Beamformer
/// entries stay in physical sqrt-watt units.
struct CaseOneProblem {
    CMat h_d; // N_t x K, h_dk / sigma
    CMat g_t; // M x N_t, G_t / sigma
    CMat h_r; // M x K (unscaled; only the product with g_t matters)
    CMat a;   // N_r x N_t, A / sigma
    Vec r_user;
    double r_radar = 0.0;

    CVec eff_channel(const CVec& v, int k) const {
        return h_d.col(k) + g_t.adjoint() * h_r.col(k).cwiseProduct(v.conjugate());
    }
    CMat eff_channels(const CVec& v) const; // columns h_k for all users
};

CaseOneProblem build_case1_problem(const SystemConfig& cfg, const ChannelSet& cs);

/// Block iterate of the penalty method. x_aux(k, i) targets h_k^H w_ci;
/// y_aux column i targets A w_ci.
struct PenaltyState {
    CMat w_c;   // N_t x K
    CVec v;     // length M, unit modulus throughout
    CMat x_aux; // K x K
    CMat y_aux; // N_r x K
    double rho = 0.0;
};

/// Closed-form block minimizer for the beamformer columns at penalty rho.
CMat update_beamformers(const PenaltyState& state, const CaseOneProblem& prob, double rho);

/// One ascending element-wise sweep of exact single-phase minimizers.
/// Returns the updated phase vector (state is not modified).
CVec update_phase_elementwise(const PenaltyState& state, const CaseOneProblem& prob);

/// Exact solution of the per-user auxiliary subproblem via strong duality;
/// returns row k of x_aux. eps_bisect is the dual bisection interval width.
CVec update_aux_x(const PenaltyState& state, const CaseOneProblem& prob, int k,
                  double eps_bisect);

/// Exact solution of the radar auxiliary subproblem; returns all y columns.
CMat update_aux_y(const PenaltyState& state, const CaseOneProblem& prob, double eps_bisect);

/// Dual root of the radar auxiliary subproblem, bisection and closed form.
/// s_total = sum_i ||A w_ci||^2, target = sigma^2 r_r,th (1 * r in
/// normalized units). Exposed for the oracle cross-checks.
double aux_y_lambda_bisect(double s_total, double target, double eps_bisect);
double aux_y_lambda_analytic(double s_total, double target);

/// Termination indicator: max of |h_k^H w_ci - x_ki|^2 and
/// max-entry-squared of A w_ci - y_i.
double violation_xi(const PenaltyState& state, const CaseOneProblem& prob);

/// Penalized objective: sum_k ||w_ck||^2 + (1/2rho) * (coupling residuals).
double penalized_objective(const PenaltyState& state, const CaseOneProblem& prob);

/// Two-layer penalty method (Algorithm of case I). Requires
/// cross_corr_limit = inf; throws ConfigError otherwise. May throw
/// DegenerateDirectionError (callers restart with a fresh stream).
std::pair<BeamformerSolution, SolveReport> solve_case1(const SystemConfig& cfg,
                                                       const ChannelSet& cs, RngStream rng);

} // namespace radcom
