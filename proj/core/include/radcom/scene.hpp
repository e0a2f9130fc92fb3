#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "radcom/rng.hpp"

namespace radcom {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w * 1e3); }
inline double deg_to_rad(double deg) { return deg * M_PI / 180.0; }

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PenaltyParams {
    double rho0 = 100.0;
    double step_c = 0.85;
    double eps_inner = 1e-3;  // inner-loop fractional objective decrease
    double eps_outer = 1e-7;  // termination indicator threshold on xi
    double eps_bisect = 1e-9; // dual bisection interval width
    int max_inner = 200;
    int max_outer = 300;
};

struct SdrParams {
    double eps_converge = 1e-3; // AO fractional power decrease
    int max_ao_iters = 150;
    double rank_one_ratio_tol = 1e-6; // lambda2/lambda1 accepted as rank one
};

/// All scenario constants. dB fields keep their configured values; the
/// linear-scale counterparts are computed once by finalize() and used for
/// every internal computation.
struct SystemConfig {
    int n_tx = 8;
    int n_rx = 8;
    int n_users = 5;
    int n_targets = 3;
    int n_irs = 50;

    std::vector<double> target_angles; // radians, default set in finalize()
    std::vector<double> sinr_user_db;  // per-user threshold, default 20 dB each
    double sinr_radar_db = 10.0;
    double cross_corr_limit = std::numeric_limits<double>::infinity(); // power^2 units

    double noise_power_dbm = -80.0;
    double target_rcs_power_dbm = -70.0;

    double irs_x = 50.0; // IRS x-coordinate d_x in meters

    double path_loss_ref_db = -30.0;
    double alpha_bs_irs = 2.2;
    double alpha_irs_user = 2.2;
    double alpha_bs_user = 3.6;
    double rician_factor_db = 3.0;
    double antenna_spacing_ratio = 0.5; // d / lambda

    PenaltyParams penalty;
    SdrParams sdr;

    std::uint64_t seed = 1;

    // Linear-scale values, filled by finalize().
    double noise_w = 0.0;
    double sigma_beta_sq_w = 0.0;
    double rician_kappa = 0.0;
    std::vector<double> sinr_user_lin;
    double sinr_radar_lin = 0.0;
    double path_loss_ref = 0.0;

    /// Fills defaults for empty list fields, converts dB fields to linear
    /// scale, and validates every invariant. Throws ConfigError.
    void finalize();

    bool cross_corr_active() const {
        return std::isfinite(cross_corr_limit);
    }
};

/// Returns a finalized copy of the hard-coded default scenario.
SystemConfig default_config();

/// One realization of all channels for a Monte-Carlo trial.
struct ChannelSet {
    CMat g_t;               // M x N_t, BS -> IRS
    CMat g_r;               // N_r x M, IRS -> BS (independent uplink realization)
    CMat h_d;               // N_t x K, direct BS -> user channels as columns
    CMat h_r;               // M x K, IRS -> user channels as columns
    CVec beta;              // L target reflection coefficients
    CMat a_mat;             // N_r x N_t, A = sum_l beta_l a_r(theta_l) a_t(theta_l)^H
    Mat user_xyz;           // K x 3 sampled user positions (diagnostics)
};

/// ULA steering vector: entry i = exp(-j 2 pi spacing_ratio i sin(theta)).
CVec steering_vector(double theta, int n, double spacing_ratio = 0.5);

/// Distance-based path gain 10^(ref_db/10) * d^(-exponent). Throws
/// std::domain_error for d <= 0.
double path_loss(double distance, double exponent, double ref_db);

/// Draws one channel realization. Deterministic given (cfg, rng stream).
ChannelSet generate_channels(const SystemConfig& cfg, RngStream rng);

/// Effective downlink channel h_k with h_k^H = h_dk^H + v^H diag(h_rk^H) G_t.
CVec effective_user_channel(const ChannelSet& cs, const CVec& v, int k);

/// IRS loop-interference matrix B = G_r diag(v) G_t.
CMat irs_loop_matrix(const ChannelSet& cs, const CVec& v);

/// Rebuilds A from beta and angles (used by invariant checks).
CMat assemble_target_matrix(const CVec& beta, const std::vector<double>& angles,
                            int n_rx, int n_tx, double spacing_ratio);

} // namespace radcom
