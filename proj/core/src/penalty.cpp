#include "radcom/penalty.hpp"

#include <chrono>
#include <cmath>

namespace radcom {

CMat CaseOneProblem::eff_channels(const CVec& v) const {
    const int k_users = static_cast<int>(h_d.cols());
    CMat h(h_d.rows(), k_users);
    for (int k = 0; k < k_users; ++k) h.col(k) = eff_channel(v, k);
    return h;
}

CaseOneProblem build_case1_problem(const SystemConfig& cfg, const ChannelSet& cs) {
    CaseOneProblem p;
    const double sigma = std::sqrt(cfg.noise_w);
    p.h_d = cs.h_d / sigma;
    p.g_t = cs.g_t / sigma;
    p.h_r = cs.h_r;
    p.a = cs.a_mat / sigma;
    p.r_user = Eigen::Map<const Vec>(cfg.sinr_user_lin.data(),
                                     static_cast<Eigen::Index>(cfg.sinr_user_lin.size()));
    p.r_radar = cfg.sinr_radar_lin;
    return p;
}

CMat update_beamformers(const PenaltyState& state, const CaseOneProblem& prob, double rho) {
    const int n_tx = static_cast<int>(prob.h_d.rows());
    const CMat h = prob.eff_channels(state.v);

    const double inv2rho = 1.0 / (2.0 * rho);
    CMat t = CMat::Identity(n_tx, n_tx);
    t += inv2rho * (h * h.adjoint() + prob.a.adjoint() * prob.a);
    Eigen::LLT<CMat> llt(t);

    // rhs column i: sum_k h_k x_ki + A^H y_i; one factorization serves all K.
    const CMat rhs = h * state.x_aux + prob.a.adjoint() * state.y_aux;
    return inv2rho * llt.solve(rhs);
}

CVec update_phase_elementwise(const PenaltyState& state, const CaseOneProblem& prob) {
    const int k_users = static_cast<int>(prob.h_d.cols());
    const int m_irs = static_cast<int>(prob.g_t.rows());
    CVec v = state.v;

    // q[(k,i)](m) = [diag(h_rk^H) G_t w_ci]_m ; cur(k,i) = h_k^H w_ci - x_ki.
    const CMat gw = prob.g_t * state.w_c; // M x K
    std::vector<CMat> q(static_cast<std::size_t>(k_users));
    CMat cur(k_users, k_users);
    for (int k = 0; k < k_users; ++k) {
        q[static_cast<std::size_t>(k)] = prob.h_r.col(k).conjugate().asDiagonal() * gw;
        const CVec base = (prob.h_d.col(k).adjoint() * state.w_c).transpose();
        for (int i = 0; i < k_users; ++i) {
            cur(k, i) = base(i) - state.x_aux(k, i) +
                        (v.transpose() * q[static_cast<std::size_t>(k)].col(i))(0);
        }
    }

    for (int m = 0; m < m_irs; ++m) {
        cplx z = 0.0;
        for (int k = 0; k < k_users; ++k)
            for (int i = 0; i < k_users; ++i) {
                const cplx qm = q[static_cast<std::size_t>(k)](m, i);
                const cplx residual = cur(k, i) - v(m) * qm;
                z += qm * std::conj(residual);
            }
        if (std::abs(z) == 0.0) continue; // any phase optimal; keep previous
        const cplx v_new = -std::conj(z) / std::abs(z);
        const cplx dv = v_new - v(m);
        for (int k = 0; k < k_users; ++k)
            for (int i = 0; i < k_users; ++i)
                cur(k, i) += dv * q[static_cast<std::size_t>(k)](m, i);
        v(m) = v_new;
    }
    return v;
}

CVec update_aux_x(const PenaltyState& state, const CaseOneProblem& prob, int k,
                  double eps_bisect) {
    const int k_users = static_cast<int>(prob.h_d.cols());
    const CVec h = prob.eff_channel(state.v, k);
    const CVec c = (h.adjoint() * state.w_c).transpose(); // c_i = h_k^H w_ci
    const double r_th = prob.r_user(k);

    double interf_num = 0.0; // sum_{i != k} |c_i|^2
    for (int i = 0; i < k_users; ++i)
        if (i != k) interf_num += std::norm(c(i));
    const double sig_num = std::norm(c(k));

    const auto residual = [&](double lambda) {
        const double a = 1.0 + lambda * r_th;
        const double b = 1.0 - lambda;
        return r_th * (interf_num / (a * a) + 1.0) - sig_num / (b * b);
    };
    const auto residual_deriv = [&](double lambda) {
        const double a = 1.0 + lambda * r_th;
        const double b = 1.0 - lambda;
        return -2.0 * r_th * r_th * interf_num / (a * a * a) - 2.0 * sig_num / (b * b * b);
    };

    if (residual(0.0) <= 0.0) return c; // constraint slack at lambda = 0

    if (sig_num == 0.0)
        throw DegenerateDirectionError("update_aux_x: h_k^H w_ck = 0 with violated SINR");

    double lo = 0.0, hi = 1.0 - 1e-14;
    while (hi - lo > eps_bisect) {
        const double mid = 0.5 * (lo + hi);
        (residual(mid) > 0.0 ? lo : hi) = mid;
    }
    // Newton polish inside the bracket: the residual slope blows up as
    // lambda -> 1, so interval width alone does not bound |g(lambda)|.
    double lambda = 0.5 * (lo + hi);
    for (int it = 0; it < 40; ++it) {
        const double g = residual(lambda);
        if (std::abs(g) <= 1e-10 * r_th) break;
        const double step = g / residual_deriv(lambda);
        double next = lambda - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        (residual(next) > 0.0 ? lo : hi) = next;
        lambda = next;
    }

    CVec x(k_users);
    for (int i = 0; i < k_users; ++i)
        x(i) = i == k ? c(i) / (1.0 - lambda) : c(i) / (1.0 + lambda * r_th);
    return x;
}

double aux_y_lambda_analytic(double s_total, double target) {
    return 1.0 - std::sqrt(s_total / target);
}

double aux_y_lambda_bisect(double s_total, double target, double eps_bisect) {
    double lo = 0.0, hi = 1.0 - 1e-14;
    // Gamma(lambda) = s_total / (1-lambda)^2 is increasing on [0, 1).
    while (hi - lo > eps_bisect) {
        const double mid = 0.5 * (lo + hi);
        (s_total / ((1.0 - mid) * (1.0 - mid)) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

CMat update_aux_y(const PenaltyState& state, const CaseOneProblem& prob, double eps_bisect) {
    const CMat aw = prob.a * state.w_c; // N_r x K, columns A w_ci
    const double s_total = aw.squaredNorm();
    const double target = prob.r_radar; // sigma^2 r_r,th with sigma^2 = 1

    if (s_total >= target) return aw; // lambda_3 = 0
    if (s_total == 0.0)
        throw DegenerateDirectionError("update_aux_y: all radar responses zero");

    const double lambda = aux_y_lambda_bisect(s_total, target, eps_bisect);
    return aw / (1.0 - lambda);
}

double violation_xi(const PenaltyState& state, const CaseOneProblem& prob) {
    const int k_users = static_cast<int>(prob.h_d.cols());
    const CMat h = prob.eff_channels(state.v);
    double xi = 0.0;
    const CMat hw = h.adjoint() * state.w_c; // (k,i) = h_k^H w_ci
    for (int k = 0; k < k_users; ++k)
        for (int i = 0; i < k_users; ++i)
            xi = std::max(xi, std::norm(hw(k, i) - state.x_aux(k, i)));
    const CMat yres = prob.a * state.w_c - state.y_aux;
    for (int i = 0; i < k_users; ++i) {
        const double max_abs = yres.col(i).cwiseAbs().maxCoeff();
        xi = std::max(xi, max_abs * max_abs);
    }
    return xi;
}

double penalized_objective(const PenaltyState& state, const CaseOneProblem& prob) {
    const CMat h = prob.eff_channels(state.v);
    const CMat hw = h.adjoint() * state.w_c;
    const double coupling =
        (hw - state.x_aux).squaredNorm() + (prob.a * state.w_c - state.y_aux).squaredNorm();
    return state.w_c.squaredNorm() + coupling / (2.0 * state.rho);
}

std::pair<BeamformerSolution, SolveReport> solve_case1(const SystemConfig& cfg,
                                                       const ChannelSet& cs, RngStream rng) {
    if (cfg.cross_corr_active())
        throw ConfigError("solve_case1 requires cross_corr_limit = inf");

    const auto t_start = std::chrono::steady_clock::now();
    const CaseOneProblem prob = build_case1_problem(cfg, cs);
    const int k_users = cfg.n_users;
    const PenaltyParams& pp = cfg.penalty;

    PenaltyState state;
    state.rho = pp.rho0;
    state.v.resize(cfg.n_irs);
    for (int m = 0; m < cfg.n_irs; ++m) state.v(m) = rng.unit_phase();

    // Maximum-ratio start scaled to meet each SINR ignoring interference.
    state.w_c.resize(cfg.n_tx, k_users);
    for (int k = 0; k < k_users; ++k) {
        const CVec h = prob.eff_channel(state.v, k);
        const double hn2 = h.squaredNorm();
        if (hn2 == 0.0) throw DegenerateDirectionError("solve_case1: zero user channel");
        state.w_c.col(k) = std::sqrt(prob.r_user(k) / hn2) * (h / h.norm());
    }
    state.x_aux.resize(k_users, k_users);
    for (int k = 0; k < k_users; ++k)
        state.x_aux.row(k) = update_aux_x(state, prob, k, pp.eps_bisect).transpose();
    state.y_aux = update_aux_y(state, prob, pp.eps_bisect);

    SolveReport report;
    report.status = SolveReport::Status::max_iters;

    for (int outer = 0; outer < pp.max_outer; ++outer) {
        double obj = penalized_objective(state, prob);
        for (int inner = 0; inner < pp.max_inner; ++inner) {
            state.w_c = update_beamformers(state, prob, state.rho);
            state.v = update_phase_elementwise(state, prob);
            for (int k = 0; k < k_users; ++k)
                state.x_aux.row(k) = update_aux_x(state, prob, k, pp.eps_bisect).transpose();
            state.y_aux = update_aux_y(state, prob, pp.eps_bisect);
            ++report.iters_inner_total;

            const double obj_new = penalized_objective(state, prob);
            const double rel = (obj - obj_new) / std::max(std::abs(obj), 1e-300);
            obj = obj_new;
            if (rel < pp.eps_inner) break;
        }

        const double xi = violation_xi(state, prob);
        report.objective_trace.push_back(obj);
        report.violation_trace.push_back(xi);
        report.power_trace.push_back(state.w_c.squaredNorm());
        report.rho_trace.push_back(state.rho);
        ++report.iters_outer;

        if (xi <= pp.eps_outer) {
            report.status = SolveReport::Status::converged;
            break;
        }
        const std::size_t n = report.violation_trace.size();
        if (n > 20 && report.violation_trace[n - 1] > 10.0 * report.violation_trace[n - 21]) {
            report.status = SolveReport::Status::diverged;
            break;
        }
        state.rho *= pp.step_c;
    }

    BeamformerSolution sol;
    sol.w_c = state.w_c;
    sol.w_r = CMat::Zero(cfg.n_tx, cfg.n_tx); // dedicated radar beams not needed in case I
    sol.v = state.v;

    report.final_feasibility = feasibility_report(sol, cfg, cs, RadarPath::loop_canceled);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {std::move(sol), std::move(report)};
}

} // namespace radcom
