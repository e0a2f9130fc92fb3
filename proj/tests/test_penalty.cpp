#include <doctest.h>

#include <cmath>

#include "radcom/penalty.hpp"

using namespace radcom;

namespace {

SystemConfig penalty_config(int m_irs = 12, int k_users = 3) {
    SystemConfig cfg = default_config();
    cfg.n_irs = m_irs;
    cfg.n_users = k_users;
    cfg.sinr_user_db.assign(static_cast<std::size_t>(k_users), 20.0);
    cfg.finalize();
    return cfg;
}

PenaltyState random_state(const SystemConfig& cfg, const CaseOneProblem& prob, uint64_t seed,
                          double rho = 10.0) {
    RngStream rng(seed);
    PenaltyState st;
    st.rho = rho;
    st.v.resize(cfg.n_irs);
    for (int m = 0; m < cfg.n_irs; ++m) st.v(m) = rng.unit_phase();
    st.w_c.resize(cfg.n_tx, cfg.n_users);
    for (int i = 0; i < st.w_c.size(); ++i) st.w_c.data()[i] = 0.05 * rng.cgaussian();
    st.x_aux.resize(cfg.n_users, cfg.n_users);
    for (int i = 0; i < st.x_aux.size(); ++i) st.x_aux.data()[i] = rng.cgaussian();
    st.y_aux.resize(cfg.n_rx, cfg.n_users);
    for (int i = 0; i < st.y_aux.size(); ++i) st.y_aux.data()[i] = rng.cgaussian();
    (void)prob;
    return st;
}

// Objective of the beamformer subproblem at fixed (v, x, y).
double w_subobjective(const PenaltyState& st, const CaseOneProblem& prob, const CMat& w,
                      double rho) {
    const CMat h = prob.eff_channels(st.v);
    const CMat hw = h.adjoint() * w;
    const double coupling =
        (hw - st.x_aux).squaredNorm() + (prob.a * w - st.y_aux).squaredNorm();
    return w.squaredNorm() + coupling / (2.0 * rho);
}

} // namespace

TEST_CASE("beamformer update solves its subproblem") {
    SystemConfig cfg = penalty_config();
    const ChannelSet cs = generate_channels(cfg, RngStream(100));
    const CaseOneProblem prob = build_case1_problem(cfg, cs);
    PenaltyState st = random_state(cfg, prob, 101);

    SUBCASE("scalar reduction: N_t = 1, K = 1, A = 0, h = 1, x = 1") {
        CaseOneProblem p1;
        p1.h_d = CMat::Ones(1, 1);
        p1.g_t = CMat::Zero(1, 1);
        p1.h_r = CMat::Zero(1, 1);
        p1.a = CMat::Zero(1, 1);
        p1.r_user = Vec::Ones(1);
        p1.r_radar = 1.0;
        PenaltyState s1;
        s1.v = CVec::Ones(1);
        s1.w_c = CMat::Zero(1, 1);
        s1.x_aux = CMat::Ones(1, 1);
        s1.y_aux = CMat::Zero(1, 1);
        for (double rho : {0.1, 1.0, 10.0}) {
            const CMat w = update_beamformers(s1, p1, rho);
            const double expect = (1.0 / (2.0 * rho)) / (1.0 + 1.0 / (2.0 * rho));
            CHECK(std::abs(w(0, 0) - expect) < 1e-14);
        }
    }

    SUBCASE("rho -> infinity drives the columns to zero") {
        const CMat w = update_beamformers(st, prob, 1e14);
        CHECK(w.norm() < 1e-9);
    }

    SUBCASE("finite-difference gradient vanishes at the update") {
        const CMat w_opt = update_beamformers(st, prob, st.rho);
        const double f0 = w_subobjective(st, prob, w_opt, st.rho);
        const double eps = 1e-6 * std::max(1.0, w_opt.norm());
        double grad_norm_sq = 0.0;
        CMat w = w_opt;
        for (int idx = 0; idx < w.size(); ++idx) {
            for (int part = 0; part < 2; ++part) {
                const cplx delta = part == 0 ? cplx(eps, 0) : cplx(0, eps);
                w.data()[idx] = w_opt.data()[idx] + delta;
                const double fp = w_subobjective(st, prob, w, st.rho);
                w.data()[idx] = w_opt.data()[idx] - delta;
                const double fm = w_subobjective(st, prob, w, st.rho);
                w.data()[idx] = w_opt.data()[idx];
                const double g = (fp - fm) / (2.0 * eps);
                grad_norm_sq += g * g;
            }
        }
        CHECK(std::sqrt(grad_norm_sq) <= 1e-6 * std::max(1.0, std::abs(f0)));
    }
}

TEST_CASE("element-wise phase update") {
    SystemConfig cfg = penalty_config(6, 2);
    const ChannelSet cs = generate_channels(cfg, RngStream(200));
    const CaseOneProblem prob = build_case1_problem(cfg, cs);
    PenaltyState st = random_state(cfg, prob, 201);

    SUBCASE("unit modulus preserved") {
        const CVec v = update_phase_elementwise(st, prob);
        for (int m = 0; m < v.size(); ++m) CHECK(std::abs(std::abs(v(m)) - 1.0) < 1e-12);
    }

    SUBCASE("phase objective never increases") {
        const auto phase_obj = [&](const CVec& v) {
            PenaltyState tmp = st;
            tmp.v = v;
            const CMat h = prob.eff_channels(v);
            return (CMat(h.adjoint() * st.w_c) - st.x_aux).squaredNorm();
        };
        const double before = phase_obj(st.v);
        const CVec v = update_phase_elementwise(st, prob);
        CHECK(phase_obj(v) <= before + 1e-12 * std::max(1.0, before));
    }

    SUBCASE("closed form is never beaten by a 3600-point grid search") {
        // Sweep to a coordinate fixed point, then every element must beat
        // an exhaustive per-element grid up to grid resolution.
        const auto phase_obj = [&](const CVec& v) {
            const CMat h = prob.eff_channels(v);
            return (CMat(h.adjoint() * st.w_c) - st.x_aux).squaredNorm();
        };
        PenaltyState cur = st;
        for (int sweep = 0; sweep < 50; ++sweep) cur.v = update_phase_elementwise(cur, prob);
        const CVec v = cur.v;
        const double f_closed = phase_obj(v);
        for (int m = 0; m < v.size(); ++m) {
            CVec vg = v;
            double best = f_closed;
            for (int g = 0; g < 3600; ++g) {
                const double a = 2.0 * M_PI * g / 3600.0;
                vg(m) = cplx(std::cos(a), std::sin(a));
                best = std::min(best, phase_obj(vg));
            }
            CHECK(f_closed <= best + 1e-6 * std::max(1.0, best) + 1e-12);
        }
    }

    SUBCASE("single-element trivial directions") {
        // Configure a 1-element problem where z_m is forced real positive:
        // v = -1 must come out; and z = j gives v = j.
        // minimize Re{v z}: optimal v = -conj(z)/|z|.
        // Construct via a direct one-term instance: K=1, M=1, choose data.
        CaseOneProblem p1;
        p1.h_d = CMat::Zero(1, 1);
        p1.g_t = CMat::Ones(1, 1);
        p1.h_r = CMat::Ones(1, 1);
        p1.a = CMat::Zero(1, 1);
        p1.r_user = Vec::Ones(1);
        p1.r_radar = 1.0;
        PenaltyState s1;
        s1.rho = 1.0;
        s1.v = CVec::Ones(1);
        s1.w_c = CMat::Ones(1, 1);
        s1.y_aux = CMat::Zero(1, 1);
        // q = diag(h_r^H) G_t w = 1. residual a = h_d^H w - x = -x.
        // z = q * conj(a) = -conj(x).
        s1.x_aux = CMat::Constant(1, 1, cplx(-1.0, 0.0)); // z = 1 (real positive)
        CVec v = update_phase_elementwise(s1, p1);
        CHECK(std::abs(v(0) - cplx(-1.0, 0.0)) < 1e-14);
        s1.x_aux = CMat::Constant(1, 1, cplx(0.0, 1.0)); // z = -conj(j)... = j
        v = update_phase_elementwise(s1, p1);
        CHECK(std::abs(v(0) - cplx(0.0, 1.0)) < 1e-14);
    }
}

TEST_CASE("auxiliary x update") {
    SystemConfig cfg = penalty_config(8, 3);
    const ChannelSet cs = generate_channels(cfg, RngStream(300));
    const CaseOneProblem prob = build_case1_problem(cfg, cs);

    SUBCASE("inactive constraint returns h^H w unchanged") {
        PenaltyState st = random_state(cfg, prob, 301);
        // Scale the own-beam up until the SINR holds with slack.
        const CVec h = prob.eff_channel(st.v, 0);
        st.w_c.col(0) = 1e6 * h / h.norm();
        const CVec x = update_aux_x(st, prob, 0, 1e-9);
        const CVec c = (h.adjoint() * st.w_c).transpose();
        CHECK((x - c).norm() < 1e-12 * c.norm());
    }

    SUBCASE("K = 1 analytic root") {
        SystemConfig c1 = penalty_config(8, 1);
        const ChannelSet cs1 = generate_channels(c1, RngStream(302));
        const CaseOneProblem p1 = build_case1_problem(c1, cs1);
        PenaltyState st = random_state(c1, p1, 303);
        const CVec h = p1.eff_channel(st.v, 0);
        st.w_c.col(0) = 1e-4 * h / h.norm(); // constraint active
        const double c_abs = std::abs((h.adjoint() * st.w_c.col(0))(0));
        const double r_th = p1.r_user(0);
        REQUIRE(c_abs * c_abs < r_th);
        const double lambda_expect = 1.0 - c_abs / std::sqrt(r_th);
        const CVec x = update_aux_x(st, p1, 0, 1e-12);
        const double lambda_got = 1.0 - c_abs / std::abs(x(0));
        CHECK(lambda_got == doctest::Approx(lambda_expect).epsilon(1e-7));
        // Complementary slackness: constraint tight.
        CHECK(std::norm(x(0)) == doctest::Approx(r_th).epsilon(1e-7));
    }

    SUBCASE("active case: slackness residual small and sampling never beats it") {
        PenaltyState st = random_state(cfg, prob, 304);
        st.w_c *= 1e-3; // force the constraint active
        const int k = 1;
        const CVec h = prob.eff_channel(st.v, k);
        const CVec c = (h.adjoint() * st.w_c).transpose();
        const double r_th = prob.r_user(k);
        const CVec x = update_aux_x(st, prob, k, 1e-9);

        double interf = 0.0;
        for (int i = 0; i < 3; ++i)
            if (i != k) interf += std::norm(x(i));
        const double slack_resid = std::abs(r_th * (interf + 1.0) - std::norm(x(k)));
        CHECK(slack_resid <= 1e-8 * r_th);

        const double obj_opt = (x - c).squaredNorm();
        RngStream rng(305);
        int beaten = 0;
        for (int t = 0; t < 100000; ++t) {
            CVec cand(3);
            for (int i = 0; i < 3; ++i) cand(i) = x(i) + 0.3 * rng.cgaussian();
            double ci = 0.0;
            for (int i = 0; i < 3; ++i)
                if (i != k) ci += std::norm(cand(i));
            if (std::norm(cand(k)) < r_th * (ci + 1.0)) continue; // infeasible sample
            if ((cand - c).squaredNorm() < obj_opt - 1e-9) ++beaten;
        }
        CHECK(beaten == 0);
    }

    SUBCASE("degenerate direction raises") {
        PenaltyState st = random_state(cfg, prob, 306);
        const CVec h = prob.eff_channel(st.v, 0);
        // Zero out the own-beam response while keeping interference.
        st.w_c.col(0).setZero();
        st.w_c.col(1) = 1e3 * h / h.norm();
        CHECK_THROWS_AS(update_aux_x(st, prob, 0, 1e-9), DegenerateDirectionError);
    }
}

TEST_CASE("auxiliary y update") {
    SystemConfig cfg = penalty_config(8, 3);
    const ChannelSet cs = generate_channels(cfg, RngStream(400));
    const CaseOneProblem prob = build_case1_problem(cfg, cs);

    SUBCASE("inactive constraint returns A w unchanged") {
        PenaltyState st = random_state(cfg, prob, 401);
        st.w_c *= 1e6;
        const CMat y = update_aux_y(st, prob, 1e-9);
        const CMat aw = prob.a * st.w_c;
        CHECK((y - aw).norm() < 1e-12 * aw.norm());
    }

    SUBCASE("quarter-power analytic case: lambda = 1/2, y = 2 A w") {
        PenaltyState st = random_state(cfg, prob, 402);
        const CMat aw0 = prob.a * st.w_c;
        const double target = prob.r_radar;
        st.w_c *= std::sqrt(target / 4.0 / aw0.squaredNorm());
        const CMat y = update_aux_y(st, prob, 1e-12);
        const CMat aw = prob.a * st.w_c;
        CHECK((y - 2.0 * aw).norm() < 1e-6 * aw.norm());
    }

    SUBCASE("bisection matches the analytic root to 1e-8") {
        RngStream rng(403);
        for (int t = 0; t < 1000; ++t) {
            const double target = std::pow(10.0, rng.uniform(-2.0, 2.0));
            const double s_total = target * rng.uniform(1e-4, 0.999);
            const double lam_b = aux_y_lambda_bisect(s_total, target, 1e-10);
            const double lam_a = aux_y_lambda_analytic(s_total, target);
            CHECK(std::abs(lam_b - lam_a) <= 1e-8);
        }
    }

    SUBCASE("all-zero responses raise") {
        PenaltyState st = random_state(cfg, prob, 404);
        st.w_c.setZero();
        CHECK_THROWS_AS(update_aux_y(st, prob, 1e-9), DegenerateDirectionError);
    }
}

TEST_CASE("violation indicator") {
    SystemConfig cfg = penalty_config(6, 2);
    const ChannelSet cs = generate_channels(cfg, RngStream(500));
    const CaseOneProblem prob = build_case1_problem(cfg, cs);
    PenaltyState st = random_state(cfg, prob, 501);

    SUBCASE("zero when auxiliaries are set from the current beamformers") {
        const CMat h = prob.eff_channels(st.v);
        st.x_aux = h.adjoint() * st.w_c;
        st.y_aux = prob.a * st.w_c;
        CHECK(violation_xi(st, prob) == doctest::Approx(0.0));
    }

    SUBCASE("isolated perturbation of size delta reports delta^2") {
        const CMat h = prob.eff_channels(st.v);
        st.x_aux = h.adjoint() * st.w_c;
        st.y_aux = prob.a * st.w_c;
        st.x_aux(1, 0) += cplx(0.0, 3e-4);
        CHECK(violation_xi(st, prob) == doctest::Approx(9e-8).epsilon(1e-10));
    }

    SUBCASE("equals brute-force max over entries") {
        const CMat h = prob.eff_channels(st.v);
        const CMat hw = h.adjoint() * st.w_c;
        double expect = 0.0;
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 2; ++i) expect = std::max(expect, std::norm(hw(k, i) - st.x_aux(k, i)));
        const CMat yres = prob.a * st.w_c - st.y_aux;
        for (int c = 0; c < 2; ++c)
            for (int r = 0; r < cfg.n_rx; ++r) expect = std::max(expect, std::norm(yres(r, c)));
        CHECK(violation_xi(st, prob) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("inner-loop block updates never increase the penalized objective") {
    SystemConfig cfg = penalty_config(10, 3);
    const ChannelSet cs = generate_channels(cfg, RngStream(600));
    const CaseOneProblem prob = build_case1_problem(cfg, cs);
    PenaltyState st = random_state(cfg, prob, 601, 5.0);
    // Make the starting auxiliaries feasible so every later iterate stays valid.
    for (int k = 0; k < 3; ++k)
        st.x_aux.row(k) = update_aux_x(st, prob, k, 1e-9).transpose();
    st.y_aux = update_aux_y(st, prob, 1e-9);

    double obj = penalized_objective(st, prob);
    for (int it = 0; it < 5; ++it) {
        st.w_c = update_beamformers(st, prob, st.rho);
        double next = penalized_objective(st, prob);
        CHECK(next <= obj + 1e-10 * std::max(1.0, obj));
        obj = next;

        st.v = update_phase_elementwise(st, prob);
        next = penalized_objective(st, prob);
        CHECK(next <= obj + 1e-10 * std::max(1.0, obj));
        obj = next;

        for (int k = 0; k < 3; ++k)
            st.x_aux.row(k) = update_aux_x(st, prob, k, 1e-9).transpose();
        next = penalized_objective(st, prob);
        CHECK(next <= obj + 1e-10 * std::max(1.0, obj));
        obj = next;

        st.y_aux = update_aux_y(st, prob, 1e-9);
        next = penalized_objective(st, prob);
        CHECK(next <= obj + 1e-10 * std::max(1.0, obj));
        obj = next;
    }
}

TEST_CASE("solve_case1 on a small instance") {
    SystemConfig cfg = penalty_config(16, 2);
    cfg.penalty.max_outer = 200;
    cfg.finalize();
    const ChannelSet cs = generate_channels(cfg, RngStream(700));

    const auto [sol, rep] = solve_case1(cfg, cs, RngStream(701));
    CHECK(rep.status == SolveReport::Status::converged);
    CHECK(rep.violation_trace.back() <= cfg.penalty.eps_outer);
    // Unit-modulus phases and no radar beams.
    for (int m = 0; m < cfg.n_irs; ++m) CHECK(std::abs(std::abs(sol.v(m)) - 1.0) < 1e-12);
    CHECK(sol.w_r.norm() == 0.0);
    // xi <= 1e-7 caps coupling violations at sqrt(1e-7) in amplitude, which
    // propagates to ~1e-5-scale SINR residuals at 20 dB thresholds.
    CHECK(rep.final_feasibility.worst() <= 5e-4);
    // Penalty schedule rho_t = c^t rho_0.
    for (std::size_t t = 0; t < rep.rho_trace.size(); ++t)
        CHECK(rep.rho_trace[t] ==
              doctest::Approx(cfg.penalty.rho0 * std::pow(cfg.penalty.step_c, t)).epsilon(1e-12));

    SUBCASE("case-II config is rejected") {
        SystemConfig bad = cfg;
        bad.cross_corr_limit = 1.0;
        bad.finalize();
        CHECK_THROWS_AS(solve_case1(bad, cs, RngStream(1)), ConfigError);
    }

    SUBCASE("MRT power upper bound for one loose user") {
        SystemConfig c1 = penalty_config(16, 1);
        c1.sinr_user_db = {0.0};
        c1.penalty.max_outer = 200;
        c1.finalize();
        const ChannelSet cs1 = generate_channels(c1, RngStream(702));
        const auto [s1, r1] = solve_case1(c1, cs1, RngStream(703));
        CHECK(r1.status == SolveReport::Status::converged);
        // MRT with no interference meets the SINR at p = r sigma^2 / ||h||^2;
        // the joint optimum additionally covers the radar constraint, so
        // compare against the max of the two scalings along h.
        const CaseOneProblem p = build_case1_problem(c1, cs1);
        const CVec h = p.eff_channel(s1.v, 0);
        const double p_sinr = p.r_user(0) / h.squaredNorm();
        const CVec dir = h / h.norm();
        const double radar_gain = (p.a * dir).squaredNorm();
        const double p_radar = p.r_radar / radar_gain;
        const double p_mrt = std::max(p_sinr, p_radar);
        CHECK(transmit_power(s1) <= p_mrt * (1.0 + 1e-6));
    }
}
