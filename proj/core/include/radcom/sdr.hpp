#pragma once

#include <optional>

#include "radcom/conic/solver.hpp"
#include "radcom/report.hpp"
#include "radcom/rng.hpp"
#include "radcom/scene.hpp"

namespace radcom {

/// Which problem variant the alternating optimization solves.
struct SdrMode {
    bool irs_interference = true; // keep the IRS loop term (case II); false = canceled
    bool with_radar_cov = true;   // Z_r block present (joint waveform)
    bool no_irs = false;          // v fixed to zero, no phase steps
};

struct CovStepResult {
    std::optional<CovariancePack> pack; // nullopt: no feasible covariance
    bool infeasible = false;            // certified primal infeasibility
    bool solver_trouble = false;        // non-converged / numerical failure
    conic::KktResiduals kkt;
};

/// Transmit-covariance subproblem at fixed phases: minimize total power
/// subject to user-SINR rows, the radar constraint (exact trace form when
/// the loop is canceled, trace-ratio surrogate otherwise), the
/// cross-correlation cone when cfg.cross_corr_limit is finite, and PSD blocks.
CovStepResult covariance_step(const CVec& v, const ChannelSet& cs, const SystemConfig& cfg,
                              const SdrMode& mode);

/// Phase subproblem: slack maximization with the user-SINR quadratic rows
/// (signal term linearized at taylor_point) and the radar interference
/// quadratic, under |v_m| <= 1. Returns the new phase vector, or
/// taylor_point unchanged if the conic solve fails numerically.
CVec phase_step(const CovariancePack& pack, const ChannelSet& cs, const SystemConfig& cfg,
                const CVec& taylor_point, const SdrMode& mode);

/// Projects phases to unit modulus (v_m = 0 maps to 1) and re-solves the
/// covariance subproblem at the projected phases.
CovStepResult normalize_and_resolve(const CovariancePack& pack, const ChannelSet& cs,
                                    const SystemConfig& cfg, const SdrMode& mode);

struct DegenerateReconstructionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RankOneReconstruction {
    CMat w_c;            // rank-one communication beamformer columns
    CovariancePack pack; // rank-one W blocks plus the absorbed Z_r
};

/// Closed-form rank-one reconstruction: w_k = (h_k^H W_k h_k)^{-1/2} W_k h_k,
/// residual covariance folded into Z_r. Preserves the aggregate covariance,
/// every h_k^H W_k h_k form, and the total power; Z_r stays PSD.
RankOneReconstruction reconstruct_rank_one(const CovariancePack& pack, const ChannelSet& cs);

/// Folds Z_r into the user covariances: W_k + alpha_k Z_r with
/// sum(alpha) = 1, alpha >= 0. Aggregate covariance and power unchanged.
CovariancePack zero_radar_transform(const CovariancePack& pack, const Vec& alphas);

/// Beamformer candidates drawn from CN(0, W_k), each repaired by a
/// minimum-power feasibility solve over per-user power scalings; returns the
/// best feasible candidate or nullopt when none of n_draws is feasible.
std::optional<BeamformerSolution> gaussian_randomization(const CovariancePack& pack,
                                                         const ChannelSet& cs,
                                                         const SystemConfig& cfg,
                                                         const SdrMode& mode, int n_draws,
                                                         RngStream rng);

struct Case2Outcome {
    std::optional<BeamformerSolution> solution;
    std::optional<CovariancePack> final_pack; // unit-modulus resolved pack
    bool infeasible = false;                  // covariance step certified infeasible
    bool randomization_failed = false;        // comm-only rank-one recovery failed
    bool solver_failure = false;              // numerical failure, trial unusable
    SolveReport report;

    bool usable() const { return solution.has_value(); }
};

/// SDR-based alternating optimization. Initializes random unit-modulus
/// phases from rng, alternates covariance/phase steps until the power
/// decrease drops below sdr.eps_converge, projects phases, re-solves, and
/// extracts rank-one beamformers (direct eigenvector when every
/// lambda2/lambda1 <= rank_one_ratio_tol; the constructive reconstruction
/// when Z_r is present; Gaussian randomization for the comm-only variant).
Case2Outcome solve_case2(const SystemConfig& cfg, const ChannelSet& cs, RngStream rng,
                         const SdrMode& mode = {});

} // namespace radcom
