#pragma once

#include <vector>

#include "radcom/scene.hpp"

namespace radcom {

/// Active beamformers plus IRS reflection coefficients.
struct BeamformerSolution {
    CMat w_c; // N_t x K, communication beamformer columns
    CMat w_r; // N_t x N_t, dedicated radar beamformer columns (may be zero)
    CVec v;   // length M, IRS reflection coefficients

    static BeamformerSolution zeros(int n_tx, int k_users, int m_irs);
};

/// SDR covariance variables {W_ck}, Z_r plus the phase vector.
struct CovariancePack {
    std::vector<CMat> w_cov; // K Hermitian N_t x N_t blocks
    CMat z_r;                // Hermitian N_t x N_t
    CVec v;                  // length M

    static CovariancePack from_solution(const BeamformerSolution& sol);
    /// true when every block is Hermitian to 1e-10 and PSD to -1e-8*trace.
    bool well_formed() const;
};

/// Sum covariance R = sum_k W_ck + Z_r (or the beamformer outer-product sum).
CMat aggregate_covariance(const BeamformerSolution& sol);
CMat aggregate_covariance(const CovariancePack& pack);

double transmit_power(const BeamformerSolution& sol);
double transmit_power(const CovariancePack& pack);

double user_sinr(const BeamformerSolution& sol, const ChannelSet& cs, int k,
                 double noise_power);
double user_sinr(const CovariancePack& pack, const ChannelSet& cs, int k,
                 double noise_power);

/// tr(A R A^H (B R B^H + sigma^2 I)^{-1}) with B = G_r diag(v) G_t. Realized
/// as a Hermitian dense solve, never an explicit inverse.
double radar_sinr_full(const CMat& r_cov, const ChannelSet& cs, const CVec& v,
                       double noise_power);

/// Trace-ratio lower bound tr(A R A^H) / tr(B R B^H + sigma^2 I).
double radar_sinr_lower_bound(const CMat& r_cov, const ChannelSet& cs, const CVec& v,
                              double noise_power);

/// Case-I radar SINR with the IRS loop perfectly canceled: tr(A R A^H)/sigma^2.
double radar_sinr_no_loop(const CMat& r_cov, const ChannelSet& cs, double noise_power);

/// sum_{l<j} |a_t(theta_l)^H R a_t(theta_j)|^2.
double cross_correlation(const CMat& r_cov, const std::vector<double>& target_angles,
                         double spacing_ratio = 0.5);

/// Pairwise normalized coefficients |a^H R a'| / sqrt((a^H R a)(a'^H R a')),
/// row-major over pairs (l, j), l < j.
std::vector<double> cross_correlation_coefficients(const CMat& r_cov,
                                                   const std::vector<double>& target_angles,
                                                   double spacing_ratio = 0.5);

struct Beampattern {
    Vec power;      // a_t(theta)^H R a_t(theta) per grid point
    Vec normalized; // power / max(power)
};
Beampattern beampattern(const CMat& r_cov, const std::vector<double>& angle_grid,
                        double spacing_ratio = 0.5);

/// Whether the radar echo keeps the IRS loop term (case II) or has it
/// perfectly canceled (case I).
enum class RadarPath { loop_canceled, loop_present };

/// Signed constraint residuals, all normalized so that <= 0 means satisfied
/// and magnitudes are relative to each constraint's natural scale.
struct FeasibilityReport {
    Vec user;               // per user: (r_k (I_k + sigma^2) - S_k) / (r_k sigma^2)
    double radar = 0.0;     // (r_r - SINR_r) / r_r, SINR per RadarPath
    double radar_surrogate = 0.0; // trace-bound form of (6c), relative
    double cross_corr = 0.0;      // (sum - eps) / max(eps, 1); -inf when eps = inf
    double unit_modulus = 0.0;    // max_m | |v_m| - 1 |

    double worst() const;
    bool feasible(double tol = 1e-6) const;
};

FeasibilityReport feasibility_report(const BeamformerSolution& sol, const SystemConfig& cfg,
                                     const ChannelSet& cs,
                                     RadarPath path = RadarPath::loop_present);
FeasibilityReport feasibility_report(const CovariancePack& pack, const SystemConfig& cfg,
                                     const ChannelSet& cs,
                                     RadarPath path = RadarPath::loop_present);

} // namespace radcom
