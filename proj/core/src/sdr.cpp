#include "radcom/sdr.hpp"

#include <chrono>
#include <cmath>

namespace radcom {

namespace {

using conic::LinearExpr;
using conic::Problem;

// Noise-normalized channel view shared by both subproblem builders.
struct NormChannels {
    std::vector<CVec> h;   // effective user channels / sigma
    CMat a;                // A / sigma
    CMat b;                // B / sigma (loop matrix at v), empty when canceled
    double p_scale = 1.0;  // variable scale: physical W = p_scale * solved W
};

NormChannels normalize_at(const CVec& v, const ChannelSet& cs, const SystemConfig& cfg,
                          const SdrMode& mode) {
    NormChannels nc;
    const double sigma = std::sqrt(cfg.noise_w);
    nc.h.reserve(static_cast<std::size_t>(cfg.n_users));
    double mrt_power = 0.0;
    for (int k = 0; k < cfg.n_users; ++k) {
        nc.h.push_back(effective_user_channel(cs, v, k) / sigma);
        mrt_power += cfg.sinr_user_lin[static_cast<std::size_t>(k)] /
                     std::max(nc.h.back().squaredNorm(), 1e-300);
    }
    nc.a = cs.a_mat / sigma;
    if (mode.irs_interference) nc.b = irs_loop_matrix(cs, v) / sigma;
    nc.p_scale = std::max(mrt_power, 1e-300);
    return nc;
}

void scale_row(LinearExpr& e, double& rhs) {
    double m = std::abs(rhs);
    for (const auto& [v, c] : e.terms) m = std::max(m, std::abs(c));
    if (m <= 0.0) return;
    e *= 1.0 / m;
    rhs /= m;
}

conic::Options step_options() {
    conic::Options o;
    o.feastol = 1e-8;
    o.reltol = 1e-8;
    o.abstol = 1e-9;
    o.max_iters = 200;
    return o;
}

CMat hermitize(const CMat& x) { return 0.5 * (x + x.adjoint()); }

// Clears the ~1e-12-scale negative eigenvalue noise solver iterates carry.
CMat clip_psd(const CMat& x) {
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (x + x.adjoint()));
    if (es.eigenvalues().minCoeff() >= 0.0) return 0.5 * (x + x.adjoint());
    CVec vals = es.eigenvalues().cwiseMax(0.0).cast<cplx>();
    return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
}

// Eigen square root with negative eigenvalues clipped to zero.
CMat psd_sqrt(const CMat& x) {
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(x));
    CVec vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().cast<cplx>();
    return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
}

double rank_one_ratio(const CMat& w) {
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(w), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const int n = static_cast<int>(ev.size());
    const double top = std::max(ev(n - 1), 1e-300);
    return std::max(ev(n - 2), 0.0) / top;
}

CVec dominant_scaled_eigenvector(const CMat& w) {
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(w));
    const int n = static_cast<int>(es.eigenvalues().size());
    return std::sqrt(std::max(es.eigenvalues()(n - 1), 0.0)) * es.eigenvectors().col(n - 1);
}

} // namespace

CovStepResult covariance_step(const CVec& v, const ChannelSet& cs, const SystemConfig& cfg,
                              const SdrMode& mode) {
    const int k_users = cfg.n_users;
    const int n_tx = cfg.n_tx;
    const NormChannels nc = normalize_at(v, cs, cfg, mode);
    const double ps = nc.p_scale;

    Problem p;
    std::vector<int> wb(static_cast<std::size_t>(k_users));
    for (int k = 0; k < k_users; ++k) wb[static_cast<std::size_t>(k)] = p.add_psd_block(n_tx);
    const int zb = mode.with_radar_cov ? p.add_psd_block(n_tx) : -1;

    const auto add_r_term = [&](LinearExpr& e, const CMat& coeff) {
        for (int k = 0; k < k_users; ++k) p.add_trace_term(e, wb[static_cast<std::size_t>(k)], coeff);
        if (zb >= 0) p.add_trace_term(e, zb, coeff);
    };

    LinearExpr obj;
    add_r_term(obj, CMat::Identity(n_tx, n_tx));
    p.set_objective(obj);

    // User SINR rows: h^H R h + sigma^2 <= (1/r + 1) h^H W_k h.
    for (int k = 0; k < k_users; ++k) {
        const CMat hh = nc.h[static_cast<std::size_t>(k)] * nc.h[static_cast<std::size_t>(k)].adjoint();
        LinearExpr row;
        add_r_term(row, hh);
        const double r_th = cfg.sinr_user_lin[static_cast<std::size_t>(k)];
        p.add_trace_term(row, wb[static_cast<std::size_t>(k)], CMat(-(1.0 / r_th + 1.0) * hh));
        double rhs = -1.0 / ps;
        scale_row(row, rhs);
        p.add_ineq(row, rhs);
    }

    // Radar constraint.
    {
        LinearExpr row;
        double rhs;
        const double r_r = cfg.sinr_radar_lin;
        if (mode.irs_interference) {
            // tr(A R A^H) >= r (tr(B R B^H) + sigma^2 N_r), trace surrogate.
            add_r_term(row, CMat(r_r * (nc.b.adjoint() * nc.b) - nc.a.adjoint() * nc.a));
            rhs = -r_r * cfg.n_rx / ps;
        } else {
            // Loop canceled: tr(A R A^H) >= r sigma^2 exactly.
            add_r_term(row, CMat(-(nc.a.adjoint() * nc.a)));
            rhs = -r_r / ps;
        }
        scale_row(row, rhs);
        p.add_ineq(row, rhs);
    }

    // Cross-correlation cone over all target pairs.
    if (cfg.cross_corr_active()) {
        std::vector<LinearExpr> terms;
        const std::size_t l_count = cfg.target_angles.size();
        for (std::size_t l = 0; l + 1 < l_count; ++l)
            for (std::size_t j = l + 1; j < l_count; ++j) {
                const CVec al = steering_vector(cfg.target_angles[l], n_tx,
                                                cfg.antenna_spacing_ratio);
                const CVec aj = steering_vector(cfg.target_angles[j], n_tx,
                                                cfg.antenna_spacing_ratio);
                const CMat cross = aj * al.adjoint(); // tr(cross R) = al^H R aj
                LinearExpr re_t, im_t;
                add_r_term(re_t, CMat(0.5 * (cross + cross.adjoint())));
                add_r_term(im_t, CMat(cplx(0, -0.5) * (cross - cross.adjoint())));
                terms.push_back(std::move(re_t));
                terms.push_back(std::move(im_t));
            }
        LinearExpr bound;
        bound.offset = std::sqrt(cfg.cross_corr_limit) / ps;
        p.add_soc(std::move(terms), std::move(bound));
    }

    CovStepResult out;
    const conic::Solution sol = conic::solve(p, step_options());
    out.kkt = sol.kkt;
    if (sol.status == conic::Status::infeasible_certificate && !sol.dual_infeasible) {
        out.infeasible = true;
        return out;
    }
    if (sol.status != conic::Status::optimal) {
        out.solver_trouble = true;
        return out;
    }

    CovariancePack pack;
    pack.v = v;
    pack.w_cov.reserve(static_cast<std::size_t>(k_users));
    for (int k = 0; k < k_users; ++k)
        pack.w_cov.push_back(clip_psd(ps * p.psd_value(wb[static_cast<std::size_t>(k)], sol.x)));
    pack.z_r = zb >= 0 ? clip_psd(ps * p.psd_value(zb, sol.x))
                       : CMat::Zero(n_tx, n_tx);
    out.pack = std::move(pack);
    return out;
}

CVec phase_step(const CovariancePack& pack, const ChannelSet& cs, const SystemConfig& cfg,
                const CVec& taylor_point, const SdrMode& mode) {
    const int k_users = cfg.n_users;
    const int m_irs = cfg.n_irs;
    const double sigma = std::sqrt(cfg.noise_w);
    const CMat r_cov = aggregate_covariance(pack);

    // Work in the conjugate variable u = conj(v): the effective channel is
    // h_k = d_k + T_k^H u^* with T_k = diag(h_rk^H) G_t, so every quadratic
    // form h^H X h becomes c + 2Re{u^H b} + u^H (T X T^H) u.
    const CVec u_t = taylor_point.conjugate();

    Problem p;
    const auto u = p.add_complex_vars(m_irs);
    const int eta0 = p.add_free_vars(1); // radar slack (unused row when canceled)
    const int etak = p.add_free_vars(k_users);

    LinearExpr obj;
    for (int k = 0; k < k_users; ++k) obj.add(etak + k, 1.0);
    if (mode.irs_interference) obj.add(eta0, 1.0);
    p.set_objective(obj, /*maximize=*/true);

    // eta >= 0.
    for (int k = 0; k < k_users; ++k) {
        LinearExpr e;
        e.add(etak + k, -1.0);
        p.add_ineq(e, 0.0);
    }
    {
        LinearExpr e;
        e.add(eta0, -1.0);
        p.add_ineq(e, 0.0);
        if (!mode.irs_interference) {
            LinearExpr cap; // pin the unused slack so the objective stays bounded
            cap.add(eta0, 1.0);
            p.add_ineq(cap, 0.0);
        }
    }

    // |u_m| <= 1.
    for (int m = 0; m < m_irs; ++m) {
        std::vector<LinearExpr> t(2);
        t[0].add(u.re0 + m, 1.0);
        t[1].add(u.im0 + m, 1.0);
        LinearExpr bound;
        bound.offset = 1.0;
        p.add_soc(std::move(t), std::move(bound));
    }

    // Per-user rows: eta_k + f1k(u) + 1 <= (1/r + 1) f2k_lb(u).
    for (int k = 0; k < k_users; ++k) {
        const CVec d = cs.h_d.col(k) / sigma;
        const CMat t_k = cs.h_r.col(k).conjugate().asDiagonal() * (cs.g_t / sigma);
        const double r_inv1 = 1.0 / cfg.sinr_user_lin[static_cast<std::size_t>(k)] + 1.0;

        const CMat q1 = hermitize(t_k * r_cov * t_k.adjoint());
        const CVec b1 = t_k * r_cov * d;
        const double c1 = (d.adjoint() * r_cov * d).real()(0);

        const CMat& w_k = pack.w_cov[static_cast<std::size_t>(k)];
        const CMat q2 = hermitize(t_k * w_k * t_k.adjoint());
        const CVec b2 = t_k * w_k * d;
        const double c2 = (d.adjoint() * w_k * d).real()(0);
        const double t_quad = (u_t.adjoint() * q2 * u_t).real()(0);

        const CVec linear = 2.0 * b1 - 2.0 * r_inv1 * (b2 + q2 * u_t);
        const double constant = c1 + 1.0 - r_inv1 * (c2 - t_quad);
        const auto low = conic::lower_quadratic_to_soc(q1, linear, constant);
        LinearExpr extra;
        extra.add(etak + k, 1.0);
        p.add_quadratic_le(u, low, extra);
    }

    // Radar row (loop present): eta_0 + r tr(B R B^H) + r N_r <= tr(A R A^H),
    // with tr(B R B^H) = w^H ((G_r^H G_r) had (G_t R G_t^H)^T) w at w = conj(u).
    if (mode.irs_interference) {
        const CMat a_n = cs.a_mat / sigma;
        const double r_r = cfg.sinr_radar_lin;
        const CMat gram_w = hermitize(
            (cs.g_r.adjoint() * cs.g_r)
                .cwiseProduct(((cs.g_t / sigma) * r_cov * (cs.g_t / sigma).adjoint()).transpose()));
        const double tr_ara = (a_n * r_cov * a_n.adjoint()).trace().real();
        const auto low = conic::lower_quadratic_to_soc(CMat(r_r * gram_w), CVec::Zero(m_irs),
                                                       r_r * cfg.n_rx - tr_ara);
        // The quadratic acts on conj(u); conjugating the factor rows and the
        // (zero) linear part re-expresses it over u.
        conic::SocLowering low_u = low;
        low_u.factor = low.factor.conjugate();
        low_u.linear = low.linear.conjugate();
        LinearExpr extra;
        extra.add(eta0, 1.0);
        p.add_quadratic_le(u, low_u, extra);
    }

    conic::Options opts = step_options();
    const conic::Solution sol = conic::solve(p, opts);
    if (sol.status != conic::Status::optimal) return taylor_point; // keep previous phases

    const CVec u_star = Problem::complex_value(u, sol.x);
    return u_star.conjugate();
}

CovStepResult normalize_and_resolve(const CovariancePack& pack, const ChannelSet& cs,
                                    const SystemConfig& cfg, const SdrMode& mode) {
    CVec v = pack.v;
    for (int m = 0; m < v.size(); ++m) {
        const double mag = std::abs(v(m));
        v(m) = mag > 0.0 ? v(m) / mag : cplx(1.0, 0.0);
    }
    return covariance_step(v, cs, cfg, mode);
}

RankOneReconstruction reconstruct_rank_one(const CovariancePack& pack, const ChannelSet& cs) {
    const int k_users = static_cast<int>(pack.w_cov.size());
    const int n_tx = static_cast<int>(pack.w_cov[0].rows());

    RankOneReconstruction out;
    out.w_c.resize(n_tx, k_users);
    out.pack.v = pack.v;
    CMat z_hat = pack.z_r;
    for (int k = 0; k < k_users; ++k) z_hat += pack.w_cov[static_cast<std::size_t>(k)];

    const CMat r_before = z_hat; // aggregate covariance, reused for the checks

    for (int k = 0; k < k_users; ++k) {
        const CVec h = effective_user_channel(cs, pack.v, k);
        const CMat& w_bar = pack.w_cov[static_cast<std::size_t>(k)];
        const double quad = (h.adjoint() * w_bar * h).real()(0);
        if (!(quad > 0.0))
            throw DegenerateReconstructionError("reconstruct_rank_one: h^H W h <= 0");
        const CVec w_hat = (w_bar * h) / std::sqrt(quad);
        out.w_c.col(k) = w_hat;
        out.pack.w_cov.push_back(w_hat * w_hat.adjoint());
        z_hat -= out.pack.w_cov.back();

        // The signal quadratic form is preserved exactly by construction.
        const double quad_hat = std::norm((h.adjoint() * w_hat)(0));
        if (std::abs(quad_hat - quad) > 1e-8 * std::max(1.0, quad))
            throw DegenerateReconstructionError("reconstruct_rank_one: quadratic form drifted");
    }
    out.pack.z_r = hermitize(z_hat);

    // Z_r must remain PSD (Cauchy-Schwarz argument) and R must be unchanged.
    // The tolerance floor uses the aggregate scale: Z_r may be exactly zero.
    Eigen::SelfAdjointEigenSolver<CMat> es(out.pack.z_r, Eigen::EigenvaluesOnly);
    const double tr_z = std::max(out.pack.z_r.trace().real(), 0.0);
    const double tr_r = std::max(r_before.trace().real(), 1e-300);
    if (es.eigenvalues().minCoeff() < -1e-8 * std::max(tr_z, 1e-10 * tr_r))
        throw DegenerateReconstructionError("reconstruct_rank_one: Z_r lost PSD");
    out.pack.z_r = clip_psd(out.pack.z_r);
    const CMat r_after = aggregate_covariance(out.pack);
    if ((r_after - r_before).norm() > 1e-8 * std::max(1.0, r_before.norm()))
        throw DegenerateReconstructionError("reconstruct_rank_one: aggregate R drifted");

    return out;
}

CovariancePack zero_radar_transform(const CovariancePack& pack, const Vec& alphas) {
    const int k_users = static_cast<int>(pack.w_cov.size());
    if (alphas.size() != k_users)
        throw std::invalid_argument("zero_radar_transform: alpha size mismatch");
    if (alphas.minCoeff() < 0.0 || std::abs(alphas.sum() - 1.0) > 1e-12)
        throw std::invalid_argument("zero_radar_transform: alphas must be a distribution");

    CovariancePack out;
    out.v = pack.v;
    out.z_r = CMat::Zero(pack.z_r.rows(), pack.z_r.cols());
    out.w_cov.reserve(static_cast<std::size_t>(k_users));
    for (int k = 0; k < k_users; ++k)
        out.w_cov.push_back(pack.w_cov[static_cast<std::size_t>(k)] + alphas(k) * pack.z_r);
    return out;
}

std::optional<BeamformerSolution> gaussian_randomization(const CovariancePack& pack,
                                                         const ChannelSet& cs,
                                                         const SystemConfig& cfg,
                                                         const SdrMode& mode, int n_draws,
                                                         RngStream rng) {
    const int k_users = cfg.n_users;
    const int n_tx = cfg.n_tx;
    const double sigma = std::sqrt(cfg.noise_w);
    const NormChannels nc = normalize_at(pack.v, cs, cfg, mode);
    (void)sigma;

    std::vector<CMat> roots;
    roots.reserve(static_cast<std::size_t>(k_users));
    for (const auto& w : pack.w_cov) roots.push_back(psd_sqrt(w));

    const std::size_t l_count = cfg.target_angles.size();
    std::vector<CVec> steer(l_count);
    for (std::size_t l = 0; l < l_count; ++l)
        steer[l] = steering_vector(cfg.target_angles[l], n_tx, cfg.antenna_spacing_ratio);

    double best_power = std::numeric_limits<double>::infinity();
    CMat best_w;

    for (int draw = 0; draw < n_draws; ++draw) {
        CMat dirs(n_tx, k_users);
        for (int k = 0; k < k_users; ++k) {
            CVec g(n_tx);
            for (int i = 0; i < n_tx; ++i) g(i) = rng.cgaussian();
            CVec w = roots[static_cast<std::size_t>(k)] * g;
            const double n = w.norm();
            if (n <= 1e-300) {
                w = CVec::Zero(n_tx);
                w(0) = 1.0;
            } else {
                w /= n;
            }
            dirs.col(k) = w;
        }

        // Minimum-power restoration over per-user powers p >= 0.
        Problem p;
        const int pv = p.add_free_vars(k_users);
        LinearExpr obj;
        for (int k = 0; k < k_users; ++k) obj.add(pv + k, 1.0);
        p.set_objective(obj);
        for (int k = 0; k < k_users; ++k) {
            LinearExpr nneg;
            nneg.add(pv + k, -1.0);
            p.add_ineq(nneg, 0.0);
        }
        for (int k = 0; k < k_users; ++k) {
            const double r_th = cfg.sinr_user_lin[static_cast<std::size_t>(k)];
            LinearExpr row;
            for (int i = 0; i < k_users; ++i) {
                const double gki = std::norm((nc.h[static_cast<std::size_t>(k)].adjoint() * dirs.col(i))(0));
                row.add(pv + i, i == k ? -gki : r_th * gki);
            }
            double rhs = -r_th;
            scale_row(row, rhs);
            p.add_ineq(row, rhs);
        }
        {
            LinearExpr row;
            const double r_r = cfg.sinr_radar_lin;
            double rhs;
            if (mode.irs_interference) {
                for (int i = 0; i < k_users; ++i)
                    row.add(pv + i, r_r * (nc.b * dirs.col(i)).squaredNorm() -
                                        (nc.a * dirs.col(i)).squaredNorm());
                rhs = -r_r * cfg.n_rx;
            } else {
                for (int i = 0; i < k_users; ++i)
                    row.add(pv + i, -(nc.a * dirs.col(i)).squaredNorm());
                rhs = -r_r;
            }
            scale_row(row, rhs);
            p.add_ineq(row, rhs);
        }
        if (cfg.cross_corr_active()) {
            std::vector<LinearExpr> terms;
            for (std::size_t l = 0; l + 1 < l_count; ++l)
                for (std::size_t j = l + 1; j < l_count; ++j) {
                    LinearExpr re_t, im_t;
                    for (int i = 0; i < k_users; ++i) {
                        const cplx c = (steer[l].adjoint() * dirs.col(i))(0) *
                                       (dirs.col(i).adjoint() * steer[j])(0);
                        re_t.add(pv + i, c.real());
                        im_t.add(pv + i, c.imag());
                    }
                    terms.push_back(std::move(re_t));
                    terms.push_back(std::move(im_t));
                }
            LinearExpr bound;
            bound.offset = std::sqrt(cfg.cross_corr_limit);
            p.add_soc(std::move(terms), std::move(bound));
        }

        const conic::Solution sol = conic::solve(p, step_options());
        if (sol.status != conic::Status::optimal) continue;
        if (sol.objective >= best_power) continue;
        best_power = sol.objective;
        best_w = dirs;
        for (int k = 0; k < k_users; ++k)
            best_w.col(k) *= std::sqrt(std::max(sol.x(pv + k), 0.0));
    }

    if (!std::isfinite(best_power)) return std::nullopt;
    BeamformerSolution out;
    out.w_c = best_w;
    out.w_r = CMat::Zero(n_tx, n_tx);
    out.v = pack.v;
    return out;
}

Case2Outcome solve_case2(const SystemConfig& cfg, const ChannelSet& cs, RngStream rng,
                         const SdrMode& mode) {
    const auto t_start = std::chrono::steady_clock::now();
    Case2Outcome out;
    out.report.status = SolveReport::Status::max_iters;

    CVec v(cfg.n_irs);
    if (mode.no_irs) {
        v.setZero();
    } else {
        RngStream phase_rng = rng.child(1);
        for (int m = 0; m < cfg.n_irs; ++m) v(m) = phase_rng.unit_phase();
    }

    const auto record = [&](const CovariancePack& pack) {
        double ratio = 0.0;
        for (const auto& w : pack.w_cov) ratio = std::max(ratio, rank_one_ratio(w));
        double vmin = 1.0;
        for (int m = 0; m < pack.v.size(); ++m) vmin = std::min(vmin, std::abs(pack.v(m)));
        out.report.objective_trace.push_back(transmit_power(pack));
        out.report.power_trace.push_back(transmit_power(pack));
        out.report.rank_ratio_trace.push_back(ratio);
        out.report.phase_min_trace.push_back(mode.no_irs ? 0.0 : vmin);
    };

    CovStepResult step = covariance_step(v, cs, cfg, mode);
    if (step.infeasible) {
        out.infeasible = true;
        return out;
    }
    if (step.solver_trouble) {
        out.solver_failure = true;
        return out;
    }
    CovariancePack pack = std::move(*step.pack);
    record(pack);
    ++out.report.iters_outer;

    if (!mode.no_irs) {
        double prev_power = transmit_power(pack);
        for (int it = 1; it < cfg.sdr.max_ao_iters; ++it) {
            const CVec v_new = phase_step(pack, cs, cfg, v, mode);
            CovStepResult next = covariance_step(v_new, cs, cfg, mode);
            if (!next.pack.has_value()) break; // keep the current feasible pack
            v = v_new;
            pack = std::move(*next.pack);
            record(pack);
            ++out.report.iters_outer;

            const double power = transmit_power(pack);
            const double rel = (prev_power - power) / std::max(prev_power, 1e-300);
            prev_power = power;
            if (rel < cfg.sdr.eps_converge) {
                out.report.status = SolveReport::Status::converged;
                break;
            }
        }
    } else {
        out.report.status = SolveReport::Status::converged;
    }

    // Unit-modulus projection and final resolve.
    CovStepResult final_step =
        mode.no_irs ? std::move(step) : normalize_and_resolve(pack, cs, cfg, mode);
    if (mode.no_irs) {
        final_step.pack = pack;
    } else if (final_step.infeasible) {
        out.infeasible = true;
        out.report.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        return out;
    } else if (final_step.solver_trouble) {
        out.solver_failure = true;
        return out;
    }
    CovariancePack resolved = std::move(*final_step.pack);
    if (!mode.no_irs) {
        CVec vp = pack.v;
        for (int m = 0; m < vp.size(); ++m) {
            const double mag = std::abs(vp(m));
            vp(m) = mag > 0.0 ? vp(m) / mag : cplx(1.0, 0.0);
        }
        resolved.v = vp;
    } else {
        resolved.v = v;
    }
    record(resolved);

    // Rank-one extraction.
    BeamformerSolution sol;
    sol.v = resolved.v;
    double worst_ratio = 0.0;
    for (const auto& w : resolved.w_cov) worst_ratio = std::max(worst_ratio, rank_one_ratio(w));

    if (worst_ratio <= cfg.sdr.rank_one_ratio_tol) {
        sol.w_c.resize(cfg.n_tx, cfg.n_users);
        for (int k = 0; k < cfg.n_users; ++k)
            sol.w_c.col(k) = dominant_scaled_eigenvector(resolved.w_cov[static_cast<std::size_t>(k)]);
        sol.w_r = psd_sqrt(resolved.z_r);
    } else if (mode.with_radar_cov) {
        const RankOneReconstruction rec = reconstruct_rank_one(resolved, cs);
        sol.w_c = rec.w_c;
        sol.w_r = psd_sqrt(rec.pack.z_r);
        resolved = rec.pack;
    } else {
        auto cand = gaussian_randomization(resolved, cs, cfg, mode, 1000, rng.child(2));
        if (!cand.has_value()) {
            out.randomization_failed = true;
            out.final_pack = std::move(resolved);
            out.report.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                    .count();
            return out;
        }
        sol = std::move(*cand);
    }

    out.report.final_feasibility = feasibility_report(
        sol, cfg, cs,
        mode.irs_interference ? RadarPath::loop_present : RadarPath::loop_canceled);
    if (mode.no_irs) out.report.final_feasibility.unit_modulus = 0.0; // IRS absent
    out.final_pack = std::move(resolved);
    out.solution = std::move(sol);
    out.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

} // namespace radcom
