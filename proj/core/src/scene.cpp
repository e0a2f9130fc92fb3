#include "radcom/scene.hpp"

#include <cmath>

namespace radcom {

namespace {

struct Pos {
    double x, y, z;
};

double dist(const Pos& a, const Pos& b) {
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                     (a.z - b.z) * (a.z - b.z));
}

// Arrays are ULAs along the y-axis; angles are measured from broadside, so
// sin(theta) is the y-component of the unit direction toward the far node.
double broadside_sin(const Pos& from, const Pos& to) {
    return (to.y - from.y) / dist(from, to);
}

constexpr Pos kBsPos{0.0, 0.0, 3.5};
constexpr double kUserZ = 1.0;
constexpr double kUserDiscRadius = 2.0;

} // namespace

void SystemConfig::finalize() {
    if (target_angles.empty()) {
        target_angles = {deg_to_rad(-40.0), 0.0, deg_to_rad(40.0)};
        target_angles.resize(static_cast<std::size_t>(n_targets),
                             target_angles.back());
    }
    if (sinr_user_db.empty()) sinr_user_db.assign(static_cast<std::size_t>(n_users), 20.0);

    if (n_tx < 1 || n_rx < 1 || n_users < 1 || n_targets < 1 || n_irs < 1)
        throw ConfigError("all antenna/user/target/IRS counts must be >= 1");
    if (static_cast<int>(target_angles.size()) != n_targets)
        throw ConfigError("target_angles size must equal n_targets");
    if (static_cast<int>(sinr_user_db.size()) != n_users)
        throw ConfigError("sinr_user_db size must equal n_users");
    for (double a : target_angles) {
        if (!(a > -M_PI / 2 && a < M_PI / 2))
            throw ConfigError("target angles must lie in (-pi/2, pi/2)");
    }
    for (std::size_t l = 0; l < target_angles.size(); ++l)
        for (std::size_t j = l + 1; j < target_angles.size(); ++j)
            if (target_angles[l] == target_angles[j])
                throw ConfigError("target angles must be pairwise distinct");
    if (!(penalty.step_c > 0.0 && penalty.step_c < 1.0))
        throw ConfigError("penalty.step_c must lie in (0, 1)");
    if (!(penalty.rho0 > 0.0)) throw ConfigError("penalty.rho0 must be positive");
    for (double t : {penalty.eps_inner, penalty.eps_outer, penalty.eps_bisect,
                     sdr.eps_converge, sdr.rank_one_ratio_tol}) {
        if (!(t > 0.0)) throw ConfigError("tolerances must be positive");
    }
    if (penalty.max_inner < 1 || penalty.max_outer < 1 || sdr.max_ao_iters < 1)
        throw ConfigError("iteration caps must be >= 1");
    if (!(irs_x > 0.0)) throw ConfigError("irs_x must be positive");
    for (double v : {sinr_radar_db, noise_power_dbm, target_rcs_power_dbm,
                     path_loss_ref_db, rician_factor_db})
        if (!std::isfinite(v)) throw ConfigError("dB fields must be finite");
    if (std::isnan(cross_corr_limit) || cross_corr_limit < 0.0)
        throw ConfigError("cross_corr_limit must be nonnegative or +inf");
    if (!(antenna_spacing_ratio > 0.0))
        throw ConfigError("antenna_spacing_ratio must be positive");

    noise_w = dbm_to_watts(noise_power_dbm);
    sigma_beta_sq_w = dbm_to_watts(target_rcs_power_dbm);
    rician_kappa = db_to_linear(rician_factor_db);
    sinr_user_lin.resize(sinr_user_db.size());
    for (std::size_t k = 0; k < sinr_user_db.size(); ++k)
        sinr_user_lin[k] = db_to_linear(sinr_user_db[k]);
    sinr_radar_lin = db_to_linear(sinr_radar_db);
    path_loss_ref = db_to_linear(path_loss_ref_db);
}

SystemConfig default_config() {
    SystemConfig cfg;
    cfg.finalize();
    return cfg;
}

CVec steering_vector(double theta, int n, double spacing_ratio) {
    CVec a(n);
    const double phase_step = -2.0 * M_PI * spacing_ratio * std::sin(theta);
    for (int i = 0; i < n; ++i) {
        const double p = phase_step * i;
        a(i) = cplx(std::cos(p), std::sin(p));
    }
    return a;
}

double path_loss(double distance, double exponent, double ref_db) {
    if (!(distance > 0.0)) throw std::domain_error("path_loss: distance must be > 0");
    return db_to_linear(ref_db) * std::pow(distance, -exponent);
}

CMat assemble_target_matrix(const CVec& beta, const std::vector<double>& angles,
                            int n_rx, int n_tx, double spacing_ratio) {
    CMat a = CMat::Zero(n_rx, n_tx);
    for (int l = 0; l < beta.size(); ++l) {
        const CVec ar = steering_vector(angles[static_cast<std::size_t>(l)], n_rx, spacing_ratio);
        const CVec at = steering_vector(angles[static_cast<std::size_t>(l)], n_tx, spacing_ratio);
        a += beta(l) * ar * at.adjoint();
    }
    return a;
}

namespace {

CMat fill_cgaussian(int rows, int cols, RngStream& rng) {
    CMat m(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) m(r, c) = rng.cgaussian();
    return m;
}

// Rician channel between two ULAs: sqrt(gain) * (sqrt(k/(1+k)) LoS + sqrt(1/(1+k)) NLoS).
CMat rician_matrix(const CVec& a_rx, const CVec& a_tx, double gain, double kappa,
                   RngStream& rng) {
    const CMat los = a_rx * a_tx.adjoint();
    const CMat nlos = fill_cgaussian(static_cast<int>(a_rx.size()),
                                     static_cast<int>(a_tx.size()), rng);
    return std::sqrt(gain) *
           (std::sqrt(kappa / (1.0 + kappa)) * los + std::sqrt(1.0 / (1.0 + kappa)) * nlos);
}

} // namespace

ChannelSet generate_channels(const SystemConfig& cfg, RngStream rng) {
    const int k_users = cfg.n_users;
    const int m = cfg.n_irs;
    const double sr = cfg.antenna_spacing_ratio;
    const Pos irs_pos{cfg.irs_x, 0.0, 3.5};
    const Pos disc_center{cfg.irs_x, 0.0, kUserZ};

    // Independent substreams per component keep the draw order of one
    // component from perturbing the others.
    RngStream rng_users = rng.child(1);
    RngStream rng_hd = rng.child(2);
    RngStream rng_gt = rng.child(3);
    RngStream rng_hr = rng.child(4);
    RngStream rng_gr = rng.child(5);
    RngStream rng_beta = rng.child(6);

    std::vector<Pos> users(static_cast<std::size_t>(k_users));
    for (auto& u : users) {
        const double r = kUserDiscRadius * std::sqrt(rng_users.uniform());
        const double phi = rng_users.uniform(0.0, 2.0 * M_PI);
        u = Pos{disc_center.x + r * std::cos(phi), disc_center.y + r * std::sin(phi), kUserZ};
    }

    ChannelSet cs;
    cs.user_xyz = Mat(k_users, 3);
    for (int k = 0; k < k_users; ++k) {
        const Pos& u = users[static_cast<std::size_t>(k)];
        cs.user_xyz.row(k) << u.x, u.y, u.z;
    }

    cs.h_d = CMat(cfg.n_tx, k_users);
    for (int k = 0; k < k_users; ++k) {
        const double gain =
            path_loss(dist(kBsPos, users[static_cast<std::size_t>(k)]), cfg.alpha_bs_user,
                      cfg.path_loss_ref_db);
        cs.h_d.col(k) = std::sqrt(gain) * fill_cgaussian(cfg.n_tx, 1, rng_hd);
    }

    const double d_bs_irs = dist(kBsPos, irs_pos);
    const double gain_bs_irs = path_loss(d_bs_irs, cfg.alpha_bs_irs, cfg.path_loss_ref_db);
    {
        const CVec a_irs = steering_vector(std::asin(broadside_sin(irs_pos, kBsPos)), m, sr);
        const CVec a_bs = steering_vector(std::asin(broadside_sin(kBsPos, irs_pos)), cfg.n_tx, sr);
        cs.g_t = rician_matrix(a_irs, a_bs, gain_bs_irs, cfg.rician_kappa, rng_gt);
    }

    cs.h_r = CMat(m, k_users);
    for (int k = 0; k < k_users; ++k) {
        const Pos& u = users[static_cast<std::size_t>(k)];
        const double gain = path_loss(dist(irs_pos, u), cfg.alpha_irs_user, cfg.path_loss_ref_db);
        const CVec a_irs = steering_vector(std::asin(broadside_sin(irs_pos, u)), m, sr);
        CMat col = rician_matrix(a_irs, CVec::Ones(1), gain, cfg.rician_kappa, rng_hr);
        cs.h_r.col(k) = col;
    }

    {
        const CVec a_bs_rx =
            steering_vector(std::asin(broadside_sin(kBsPos, irs_pos)), cfg.n_rx, sr);
        const CVec a_irs = steering_vector(std::asin(broadside_sin(irs_pos, kBsPos)), m, sr);
        cs.g_r = rician_matrix(a_bs_rx, a_irs, gain_bs_irs, cfg.rician_kappa, rng_gr);
    }

    cs.beta = CVec(cfg.n_targets);
    const double sigma_beta = std::sqrt(cfg.sigma_beta_sq_w);
    for (int l = 0; l < cfg.n_targets; ++l) cs.beta(l) = sigma_beta * rng_beta.cgaussian();

    cs.a_mat = assemble_target_matrix(cs.beta, cfg.target_angles, cfg.n_rx, cfg.n_tx, sr);
    return cs;
}

CVec effective_user_channel(const ChannelSet& cs, const CVec& v, int k) {
    if (k < 0 || k >= cs.h_d.cols()) throw std::out_of_range("user index out of range");
    // h_k^H = h_dk^H + h_rk^H diag(v) G_t  =>  h_k = h_dk + G_t^H diag(v)^H h_rk.
    // (v holds the physical reflection coefficients Theta = diag(v).)
    return cs.h_d.col(k) + cs.g_t.adjoint() * cs.h_r.col(k).cwiseProduct(v.conjugate());
}

CMat irs_loop_matrix(const ChannelSet& cs, const CVec& v) {
    return cs.g_r * v.asDiagonal() * cs.g_t;
}

} // namespace radcom
