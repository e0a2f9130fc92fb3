#include "radcom/metrics.hpp"

#include <cmath>
#include <limits>

namespace radcom {

BeamformerSolution BeamformerSolution::zeros(int n_tx, int k_users, int m_irs) {
    BeamformerSolution s;
    s.w_c = CMat::Zero(n_tx, k_users);
    s.w_r = CMat::Zero(n_tx, n_tx);
    s.v = CVec::Zero(m_irs);
    return s;
}

CovariancePack CovariancePack::from_solution(const BeamformerSolution& sol) {
    CovariancePack p;
    p.w_cov.reserve(static_cast<std::size_t>(sol.w_c.cols()));
    for (int k = 0; k < sol.w_c.cols(); ++k)
        p.w_cov.push_back(sol.w_c.col(k) * sol.w_c.col(k).adjoint());
    p.z_r = sol.w_r * sol.w_r.adjoint();
    p.v = sol.v;
    return p;
}

namespace {

// Iterative solvers accumulate ~1e-13 asymmetry; symmetrize before eigen work.
CMat hermitize(const CMat& x) { return 0.5 * (x + x.adjoint()); }

bool is_psd_block(const CMat& x) {
    const CMat h = hermitize(x);
    if ((x - h).norm() > 1e-10 * std::max(1.0, x.norm())) return false;
    Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
    const double tr = std::max(h.trace().real(), 0.0);
    return es.eigenvalues().minCoeff() >= -1e-8 * std::max(tr, 1e-300);
}

} // namespace

bool CovariancePack::well_formed() const {
    for (const auto& w : w_cov)
        if (!is_psd_block(w)) return false;
    return is_psd_block(z_r);
}

CMat aggregate_covariance(const BeamformerSolution& sol) {
    return sol.w_c * sol.w_c.adjoint() + sol.w_r * sol.w_r.adjoint();
}

CMat aggregate_covariance(const CovariancePack& pack) {
    CMat r = pack.z_r;
    for (const auto& w : pack.w_cov) r += w;
    return r;
}

double transmit_power(const BeamformerSolution& sol) {
    return sol.w_c.squaredNorm() + sol.w_r.squaredNorm();
}

double transmit_power(const CovariancePack& pack) {
    double p = pack.z_r.trace().real();
    for (const auto& w : pack.w_cov) p += w.trace().real();
    return p;
}

double user_sinr(const BeamformerSolution& sol, const ChannelSet& cs, int k,
                 double noise_power) {
    const CVec h = effective_user_channel(cs, sol.v, k);
    const CVec comm = sol.w_c.adjoint() * h; // entries h^H w_ci (conjugated)
    double interference = 0.0;
    for (int i = 0; i < comm.size(); ++i)
        if (i != k) interference += std::norm(comm(i));
    const CVec radar = sol.w_r.adjoint() * h;
    interference += radar.squaredNorm();
    return std::norm(comm(k)) / (interference + noise_power);
}

double user_sinr(const CovariancePack& pack, const ChannelSet& cs, int k,
                 double noise_power) {
    const CVec h = effective_user_channel(cs, pack.v, k);
    const double signal = (h.adjoint() * pack.w_cov[static_cast<std::size_t>(k)] * h).real()(0);
    const CMat r = aggregate_covariance(pack);
    const double total = (h.adjoint() * r * h).real()(0);
    return signal / (total - signal + noise_power);
}

double radar_sinr_full(const CMat& r_cov, const ChannelSet& cs, const CVec& v,
                       double noise_power) {
    const CMat b = irs_loop_matrix(cs, v);
    const int n_rx = static_cast<int>(cs.a_mat.rows());
    const CMat interf = hermitize(b * r_cov * b.adjoint()) +
                        noise_power * CMat::Identity(n_rx, n_rx);
    const CMat sig = cs.a_mat * r_cov * cs.a_mat.adjoint();
    Eigen::LLT<CMat> llt(interf);
    return llt.solve(sig).trace().real();
}

double radar_sinr_lower_bound(const CMat& r_cov, const ChannelSet& cs, const CVec& v,
                              double noise_power) {
    const CMat b = irs_loop_matrix(cs, v);
    const double num = (cs.a_mat * r_cov * cs.a_mat.adjoint()).trace().real();
    const double den = (b * r_cov * b.adjoint()).trace().real() +
                       noise_power * static_cast<double>(cs.a_mat.rows());
    return num / den;
}

double radar_sinr_no_loop(const CMat& r_cov, const ChannelSet& cs, double noise_power) {
    return (cs.a_mat * r_cov * cs.a_mat.adjoint()).trace().real() / noise_power;
}

double cross_correlation(const CMat& r_cov, const std::vector<double>& target_angles,
                         double spacing_ratio) {
    const int n_tx = static_cast<int>(r_cov.rows());
    const std::size_t l_count = target_angles.size();
    std::vector<CVec> steer(l_count);
    for (std::size_t l = 0; l < l_count; ++l)
        steer[l] = steering_vector(target_angles[l], n_tx, spacing_ratio);
    double sum = 0.0;
    for (std::size_t l = 0; l + 1 < l_count; ++l)
        for (std::size_t j = l + 1; j < l_count; ++j)
            sum += std::norm((steer[l].adjoint() * r_cov * steer[j])(0));
    return sum;
}

std::vector<double> cross_correlation_coefficients(const CMat& r_cov,
                                                   const std::vector<double>& target_angles,
                                                   double spacing_ratio) {
    const int n_tx = static_cast<int>(r_cov.rows());
    const std::size_t l_count = target_angles.size();
    std::vector<CVec> steer(l_count);
    std::vector<double> self(l_count);
    for (std::size_t l = 0; l < l_count; ++l) {
        steer[l] = steering_vector(target_angles[l], n_tx, spacing_ratio);
        self[l] = std::max((steer[l].adjoint() * r_cov * steer[l]).real()(0), 0.0);
    }
    std::vector<double> coeffs;
    for (std::size_t l = 0; l + 1 < l_count; ++l)
        for (std::size_t j = l + 1; j < l_count; ++j) {
            const double cross = std::abs((steer[l].adjoint() * r_cov * steer[j])(0));
            const double den = std::sqrt(self[l] * self[j]);
            coeffs.push_back(den > 0.0 ? cross / den : 0.0);
        }
    return coeffs;
}

Beampattern beampattern(const CMat& r_cov, const std::vector<double>& angle_grid,
                        double spacing_ratio) {
    Beampattern bp;
    const int n = static_cast<int>(angle_grid.size());
    bp.power.resize(n);
    const int n_tx = static_cast<int>(r_cov.rows());
    for (int i = 0; i < n; ++i) {
        const CVec a = steering_vector(angle_grid[static_cast<std::size_t>(i)], n_tx,
                                       spacing_ratio);
        bp.power(i) = (a.adjoint() * r_cov * a).real()(0);
    }
    const double peak = bp.power.maxCoeff();
    bp.normalized = peak > 0.0 ? Vec(bp.power / peak) : Vec(Vec::Zero(n));
    return bp;
}

double FeasibilityReport::worst() const {
    double w = std::max({radar, radar_surrogate, unit_modulus});
    if (user.size() > 0) w = std::max(w, user.maxCoeff());
    if (std::isfinite(cross_corr)) w = std::max(w, cross_corr);
    return w;
}

bool FeasibilityReport::feasible(double tol) const { return worst() <= tol; }

namespace {

template <typename Solution>
FeasibilityReport feasibility_impl(const Solution& sol, const SystemConfig& cfg,
                                   const ChannelSet& cs, RadarPath path, const CMat& r_cov,
                                   const CVec& v) {
    FeasibilityReport rep;
    const double sigma2 = cfg.noise_w;
    rep.user.resize(cfg.n_users);
    for (int k = 0; k < cfg.n_users; ++k) {
        const double r_th = cfg.sinr_user_lin[static_cast<std::size_t>(k)];
        const CVec h = effective_user_channel(cs, v, k);
        double total, signal;
        if constexpr (std::is_same_v<Solution, BeamformerSolution>) {
            total = (sol.w_c.adjoint() * h).squaredNorm() +
                    (sol.w_r.adjoint() * h).squaredNorm();
            signal = std::norm((h.adjoint() * sol.w_c.col(k))(0));
        } else {
            total = (h.adjoint() * r_cov * h).real()(0);
            signal = (h.adjoint() * sol.w_cov[static_cast<std::size_t>(k)] * h).real()(0);
        }
        const double interf = total - signal;
        // Quadratic (6b)-form residual r(I + sigma^2) - S, scaled by r*sigma^2.
        rep.user(k) = (r_th * (interf + sigma2) - signal) / (r_th * sigma2);
    }

    const double r_r = cfg.sinr_radar_lin;
    const double sinr_r = path == RadarPath::loop_canceled
                              ? radar_sinr_no_loop(r_cov, cs, sigma2)
                              : radar_sinr_full(r_cov, cs, v, sigma2);
    rep.radar = (r_r - sinr_r) / r_r;

    if (path == RadarPath::loop_present) {
        const double lb = radar_sinr_lower_bound(r_cov, cs, v, sigma2);
        rep.radar_surrogate = (r_r - lb) / r_r;
    } else {
        rep.radar_surrogate = rep.radar;
    }

    if (cfg.cross_corr_active()) {
        const double xc = cross_correlation(r_cov, cfg.target_angles, cfg.antenna_spacing_ratio);
        rep.cross_corr = (xc - cfg.cross_corr_limit) / std::max(cfg.cross_corr_limit, 1.0);
    } else {
        rep.cross_corr = -std::numeric_limits<double>::infinity();
    }

    rep.unit_modulus = 0.0;
    for (int m = 0; m < v.size(); ++m)
        rep.unit_modulus = std::max(rep.unit_modulus, std::abs(std::abs(v(m)) - 1.0));
    return rep;
}

} // namespace

FeasibilityReport feasibility_report(const BeamformerSolution& sol, const SystemConfig& cfg,
                                     const ChannelSet& cs, RadarPath path) {
    return feasibility_impl(sol, cfg, cs, path, aggregate_covariance(sol), sol.v);
}

FeasibilityReport feasibility_report(const CovariancePack& pack, const SystemConfig& cfg,
                                     const ChannelSet& cs, RadarPath path) {
    return feasibility_impl(pack, cfg, cs, path, aggregate_covariance(pack), pack.v);
}

} // namespace radcom
