#include "radcom/conic/solver.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <limits>

#include "cones.hpp"

namespace radcom::conic {

namespace {

using detail::ConeDims;
using detail::Scaling;
using cplx = std::complex<double>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Hermitian parameter embedding
// ---------------------------------------------------------------------------

// Parameter layout per block (column-major lower triangle): for column j,
// [diag_j, Re(i,j), Im(i,j) for i = j+1..n-1]. Must match Problem::param_*.

CMat params_to_hermitian(const double* p, int nc) {
    CMat w(nc, nc);
    int idx = 0;
    for (int j = 0; j < nc; ++j) {
        w(j, j) = p[idx++];
        for (int i = j + 1; i < nc; ++i) {
            const cplx val(p[idx], p[idx + 1]);
            idx += 2;
            w(i, j) = val;
            w(j, i) = std::conj(val);
        }
    }
    return w;
}

void hermitian_to_params(const CMat& w, double* p) {
    const int nc = static_cast<int>(w.rows());
    int idx = 0;
    for (int j = 0; j < nc; ++j) {
        p[idx++] = w(j, j).real();
        for (int i = j + 1; i < nc; ++i) {
            p[idx++] = w(i, j).real();
            p[idx++] = w(i, j).imag();
        }
    }
}

// [[A, -B], [B, A]] real symmetric embedding of A + iB.
void embed_hermitian(const CMat& w, Eigen::Ref<Mat> out) {
    const int nc = static_cast<int>(w.rows());
    out.topLeftCorner(nc, nc) = w.real();
    out.bottomRightCorner(nc, nc) = w.real();
    out.topRightCorner(nc, nc) = -w.imag();
    out.bottomLeftCorner(nc, nc) = w.imag();
}

// Orthogonal projection onto the embedded subalgebra, returned in complex form.
CMat extract_hermitian(const Eigen::Ref<const Mat>& s) {
    const int nc = static_cast<int>(s.rows()) / 2;
    const Mat a = 0.5 * (s.topLeftCorner(nc, nc) + s.bottomRightCorner(nc, nc));
    const Mat b = 0.5 * (s.bottomLeftCorner(nc, nc) - s.topRightCorner(nc, nc));
    CMat w = a.cast<cplx>() + cplx(0.0, 1.0) * b.cast<cplx>();
    return 0.5 * (w + CMat(w.adjoint()));
}

// Gradient of <E(.), S> with respect to the Hermitian parameters.
void embed_adjoint(const Eigen::Ref<const Mat>& s, int nc, double* grad) {
    int idx = 0;
    for (int j = 0; j < nc; ++j) {
        grad[idx++] = s(j, j) + s(nc + j, nc + j);
        for (int i = j + 1; i < nc; ++i) {
            grad[idx++] = s(i, j) + s(j, i) + s(nc + i, nc + j) + s(nc + j, nc + i);
            grad[idx++] = -s(i, nc + j) + s(j, nc + i) + s(nc + i, j) - s(nc + j, i);
        }
    }
}

// ---------------------------------------------------------------------------
// Lowered standard form:  min c'x  s.t.  Gx + s = h, Ax = b, s in K
// ---------------------------------------------------------------------------

struct PsdVar {
    int base; // first parameter index
    int nc;   // complex dimension
};

struct Lowered {
    int n = 0;
    Vec c;
    bool maximize = false;
    double obj_offset = 0.0;

    Mat g_lp;
    Vec h_lp;
    std::vector<Mat> g_soc;
    std::vector<Vec> h_soc;
    std::vector<PsdVar> psd;
    Mat a_eq;
    Vec b_eq;

    ConeDims dims;

    Vec h_full() const {
        Vec h = Vec::Zero(dims.cdim);
        h.head(dims.l) = h_lp;
        for (std::size_t i = 0; i < g_soc.size(); ++i)
            h.segment(dims.q_off[i], dims.q[i]) = h_soc[i];
        return h;
    }

    void apply_g(const Vec& x, Vec& out) const {
        out.setZero(dims.cdim);
        if (dims.l > 0) out.head(dims.l) = g_lp * x;
        for (std::size_t i = 0; i < g_soc.size(); ++i)
            out.segment(dims.q_off[i], dims.q[i]) = g_soc[i] * x;
        for (std::size_t i = 0; i < psd.size(); ++i) {
            const int m = dims.s[i];
            MatMap blk(out.data() + dims.s_off[i], m, m);
            const CMat w = params_to_hermitian(x.data() + psd[i].base, psd[i].nc);
            Mat emb(m, m);
            embed_hermitian(w, emb);
            blk = -emb;
        }
    }

    void apply_gt(const Vec& z, Vec& out) const {
        out.setZero(n);
        if (dims.l > 0) out.noalias() = g_lp.transpose() * z.head(dims.l);
        for (std::size_t i = 0; i < g_soc.size(); ++i)
            out.noalias() += g_soc[i].transpose() * z.segment(dims.q_off[i], dims.q[i]);
        for (std::size_t i = 0; i < psd.size(); ++i) {
            const int m = dims.s[i];
            ConstMatMap blk(z.data() + dims.s_off[i], m, m);
            Vec grad(psd[i].nc * psd[i].nc);
            embed_adjoint(blk, psd[i].nc, grad.data());
            out.segment(psd[i].base, grad.size()) -= grad;
        }
    }

    // Projects PSD sections of a cone-layout vector onto the embedded
    // subalgebra (exact-arithmetic iterates live there; this removes drift).
    void project_embedded(Vec& x) const {
        for (std::size_t i = 0; i < psd.size(); ++i) {
            const int m = dims.s[i];
            MatMap blk(x.data() + dims.s_off[i], m, m);
            const CMat w = extract_hermitian(blk);
            Mat emb(m, m);
            embed_hermitian(w, emb);
            blk = emb;
        }
    }
};

Lowered lower_problem(const Problem& prob) {
    const auto& eqs = prob.eq_rows();
    const auto& ineqs = prob.ineq_rows();
    const auto& socs = prob.soc_blocks();
    const LinearExpr& objective = prob.objective_expr();

    Lowered low;
    low.n = prob.num_vars();
    low.maximize = prob.is_maximize();
    low.obj_offset = objective.offset;

    low.c = Vec::Zero(low.n);
    for (const auto& [v, coef] : objective.terms) low.c(v) += low.maximize ? -coef : coef;

    // LP section.
    low.dims.l = static_cast<int>(ineqs.size());
    low.g_lp = Mat::Zero(low.dims.l, low.n);
    low.h_lp = Vec::Zero(low.dims.l);
    for (std::size_t r = 0; r < ineqs.size(); ++r) {
        for (const auto& [v, coef] : ineqs[r].expr.terms)
            low.g_lp(static_cast<Eigen::Index>(r), v) += coef;
        low.h_lp(static_cast<Eigen::Index>(r)) = ineqs[r].rhs - ineqs[r].expr.offset;
    }

    // SOC sections: s = (bound(x); terms(x)), so G = -[rows], h = [offsets].
    for (const auto& soc : socs) {
        const int q = static_cast<int>(soc.norm_terms.size()) + 1;
        Mat g = Mat::Zero(q, low.n);
        Vec h = Vec::Zero(q);
        for (const auto& [v, coef] : soc.bound.terms) g(0, v) -= coef;
        h(0) = soc.bound.offset;
        for (std::size_t r = 0; r < soc.norm_terms.size(); ++r) {
            for (const auto& [v, coef] : soc.norm_terms[r].terms)
                g(static_cast<Eigen::Index>(r) + 1, v) -= coef;
            h(static_cast<Eigen::Index>(r) + 1) = soc.norm_terms[r].offset;
        }
        low.dims.q.push_back(q);
        low.g_soc.push_back(std::move(g));
        low.h_soc.push_back(std::move(h));
    }

    // PSD variable blocks.
    for (int b = 0; b < prob.num_psd_blocks(); ++b) {
        low.psd.push_back({prob.psd_param_base(b), prob.psd_dim(b)});
        low.dims.s.push_back(2 * prob.psd_dim(b));
    }

    // Equalities.
    low.a_eq = Mat::Zero(static_cast<Eigen::Index>(eqs.size()), low.n);
    low.b_eq = Vec::Zero(static_cast<Eigen::Index>(eqs.size()));
    for (std::size_t r = 0; r < eqs.size(); ++r) {
        for (const auto& [v, coef] : eqs[r].expr.terms)
            low.a_eq(static_cast<Eigen::Index>(r), v) += coef;
        low.b_eq(static_cast<Eigen::Index>(r)) = eqs[r].rhs - eqs[r].expr.offset;
    }

    low.dims.finalize();
    return low;
}

// ---------------------------------------------------------------------------
// KKT system  [0 A' G'; A 0 0; G 0 -W'W] via Schur complement on
// H = G' (W'W)^{-1} G
// ---------------------------------------------------------------------------

class KktSystem {
  public:
    KktSystem(const Lowered& low, int refinement) : low_(low), refinement_(refinement) {}

    void set_refinement(int rounds) { refinement_ = rounds; }

    // accurate = true switches to the QR factorization of the scaled cone
    // matrix (never forms G'(W'W)^{-1}G, whose conditioning is the square of
    // the scaled matrix's). Used for the convergence endgame; requires p = 0.
    bool factor(const Scaling& w, bool accurate = false) {
        const int n = low_.n;
        const auto& dims = low_.dims;
        w_ = &w;
        qr_mode_ = accurate && low_.a_eq.rows() == 0;

        // Complex NT metric per PSD block: M = rti rti' with
        // (W'W)^{-1} X = M X M. The forward map reuses M via triangular
        // solves so that forward and inverse agree to solve accuracy, which
        // iterative refinement depends on.
        minv_c_.clear();
        minv_llt_.clear();
        for (std::size_t i = 0; i < low_.psd.size(); ++i) {
            const Mat m_emb = w.rti[i] * w.rti[i].transpose();
            CMat mc = extract_hermitian(m_emb);
            minv_llt_.emplace_back(mc);
            minv_c_.push_back(std::move(mc));
        }

        if (qr_mode_) return factor_qr(w);

        Mat h = Mat::Zero(n, n);

        if (dims.l > 0) {
            const Mat lp_scaled = w.di.asDiagonal() * low_.g_lp;
            h.selfadjointView<Eigen::Lower>().rankUpdate(lp_scaled.transpose(), 1.0);
        }
        for (std::size_t i = 0; i < low_.g_soc.size(); ++i) {
            Mat gs = low_.g_soc[i];
            apply_soc_winv(gs, i);
            h.selfadjointView<Eigen::Lower>().rankUpdate(gs.transpose(), 1.0);
        }
        for (std::size_t i = 0; i < low_.psd.size(); ++i) add_psd_schur_block(h, i);

        h_full_ = h.selfadjointView<Eigen::Lower>();
        // Jacobi equilibration tames the enormous diagonal spread of the
        // late-stage Schur complement before Cholesky.
        equil_ = h_full_.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
        Mat h_eq = equil_.asDiagonal() * h_full_ * equil_.asDiagonal();
        double ridge = 0.0;
        for (int attempt = 0; attempt < 4; ++attempt) {
            Mat hr = h_eq;
            if (ridge > 0.0) hr.diagonal().array() += ridge;
            llt_.compute(hr);
            if (llt_.info() == Eigen::Success) break;
            ridge = ridge == 0.0 ? 1e-14 * h_eq.trace() / n : ridge * 100.0;
            if (attempt == 3) return false;
        }

        if (low_.a_eq.rows() > 0) {
            const Mat hiat = solve_h(low_.a_eq.transpose());
            Mat sa = low_.a_eq * hiat;
            sa_llt_.compute(0.5 * (sa + sa.transpose()));
            if (sa_llt_.info() != Eigen::Success) return false;
        }
        return true;
    }

    // (W'W)^{-1} z, blockwise.
    void apply_wtw_inv(Vec& z) const {
        const auto& dims = low_.dims;
        z.head(dims.l).array() *= w_->di.array().square();
        for (std::size_t i = 0; i < low_.g_soc.size(); ++i) {
            Mat col = z.segment(dims.q_off[i], dims.q[i]);
            apply_soc_winv(col, i);
            apply_soc_winv(col, i);
            z.segment(dims.q_off[i], dims.q[i]) = col;
        }
        for (std::size_t i = 0; i < low_.psd.size(); ++i) {
            const int m = dims.s[i];
            MatMap blk(z.data() + dims.s_off[i], m, m);
            const CMat xc = extract_hermitian(blk);
            CMat res = minv_c_[i] * xc * minv_c_[i];
            res = 0.5 * (res + CMat(res.adjoint()));
            Mat emb(m, m);
            embed_hermitian(res, emb);
            blk = emb;
        }
    }

    // (W'W) z, blockwise (used by iterative refinement). Must apply exactly
    // the operator the active solve path factored: rti-based scalings for
    // the QR route, the complex NT metric for the Schur route.
    void apply_wtw(Vec& z) const {
        const auto& dims = low_.dims;
        if (qr_mode_) {
            detail::scale(z, *w_, dims, /*trans=*/false, /*inverse=*/false); // W z
            detail::scale(z, *w_, dims, /*trans=*/true, /*inverse=*/false);  // W' (W z)
            return;
        }
        z.head(dims.l).array() *= w_->d.array().square();
        for (std::size_t i = 0; i < low_.g_soc.size(); ++i) {
            Mat col = z.segment(dims.q_off[i], dims.q[i]);
            apply_soc_w(col, i);
            apply_soc_w(col, i);
            z.segment(dims.q_off[i], dims.q[i]) = col;
        }
        for (std::size_t i = 0; i < low_.psd.size(); ++i) {
            const int m = dims.s[i];
            MatMap blk(z.data() + dims.s_off[i], m, m);
            const CMat xc = extract_hermitian(blk);
            // M^{-1} X M^{-1} through the same factorization as the inverse map.
            CMat res = minv_llt_[i].solve(CMat(minv_llt_[i].solve(xc).adjoint())).adjoint();
            res = 0.5 * (res + CMat(res.adjoint()));
            Mat emb(m, m);
            embed_hermitian(res, emb);
            blk = emb;
        }
    }

    // Solves the 3x3 system for (ux, uy, uz) given (bx, by, bz), refining
    // until the true residual stops improving (the Schur factorization alone
    // loses digits when the scaling becomes extreme near convergence).
    void solve(const Vec& bx, const Vec& by, const Vec& bz, Vec& ux, Vec& uy, Vec& uz) const {
        solve_once(bx, by, bz, ux, uy, uz);
        const double bscale = std::max({bx.norm(), by.norm(), bz.norm(), 1e-300});
        Vec rx(low_.n), ry(low_.a_eq.rows()), rz(low_.dims.cdim);
        double prev = kInf;
        Vec best_x = ux, best_y = uy, best_z = uz;
        for (int round = 0; round < std::max(refinement_, 10); ++round) {
            residual(bx, by, bz, ux, uy, uz, rx, ry, rz);
            const double rnorm =
                std::sqrt(rx.squaredNorm() + ry.squaredNorm() + rz.squaredNorm());
            if (rnorm < prev) {
                best_x = ux;
                best_y = uy;
                best_z = uz;
            }
            if (rnorm <= 1e-14 * bscale || rnorm >= 0.5 * prev) break;
            prev = std::min(prev, rnorm);
            Vec dx, dy, dz;
            solve_once(rx, ry, rz, dx, dy, dz);
            ux += dx;
            uy += dy;
            uz += dz;
        }
        ux = best_x;
        uy = best_y;
        uz = best_z;
    }

  private:
    // QR path: factor the scaled cone matrix Gs = W^{-T} G block-wise:
    // thin QR per PSD section, then one QR of the small stacked matrix
    // [blkdiag(R_b); scaled LP rows; scaled SOC rows].
    bool factor_qr(const Scaling& w) {
        const int n = low_.n;
        const auto& dims = low_.dims;
        psd_q_.clear();
        const int d_rows = dims.l;
        int q_rows = 0;
        for (int q : dims.q) q_rows += q;
        int s_rows = 0;
        for (const auto& b : low_.psd) s_rows += b.nc * b.nc;

        Mat stacked = Mat::Zero(s_rows + d_rows + q_rows, n);
        int row = 0;
        for (std::size_t i = 0; i < low_.psd.size(); ++i) {
            const int nc = low_.psd[i].nc;
            const int m = 2 * nc;
            const int np = nc * nc;
            Mat gs_b(m * m, np);
            Vec unit = Vec::Zero(np);
            Mat emb(m, m);
            for (int p = 0; p < np; ++p) {
                unit(p) = 1.0;
                const CMat wc = params_to_hermitian(unit.data(), nc);
                unit(p) = 0.0;
                embed_hermitian(wc, emb);
                const Mat scaled = w.rti[i].transpose() * emb * w.rti[i];
                gs_b.col(p) = -Eigen::Map<const Vec>(scaled.data(), m * m);
            }
            Eigen::HouseholderQR<Mat> qr_b(gs_b);
            psd_q_.push_back(qr_b.householderQ() * Mat::Identity(m * m, np));
            stacked.block(row, low_.psd[i].base, np, np) =
                qr_b.matrixQR().topRows(np).triangularView<Eigen::Upper>();
            row += np;
        }
        if (dims.l > 0)
            stacked.middleRows(row, dims.l) = w.di.asDiagonal() * low_.g_lp;
        row += dims.l;
        for (std::size_t i = 0; i < low_.g_soc.size(); ++i) {
            Mat gs = low_.g_soc[i];
            apply_soc_winv(gs, i);
            stacked.middleRows(row, dims.q[i]) = gs;
            row += dims.q[i];
        }
        qr_s_.compute(stacked);
        // Full column rank check via the R diagonal.
        const Vec rdiag = qr_s_.matrixQR().diagonal().head(n).cwiseAbs();
        return rdiag.minCoeff() > 0.0;
    }

    // Scaled-space helpers for the QR path.
    void apply_winv_t(Vec& v) const { // v := W^{-T} v
        detail::scale(v, *w_, low_.dims, /*trans=*/true, /*inverse=*/true);
    }
    void apply_winv(Vec& v) const { // v := W^{-1} v
        detail::scale(v, *w_, low_.dims, /*trans=*/false, /*inverse=*/true);
    }

    void solve_once_qr(const Vec& bx, const Vec& bz, Vec& ux, Vec& uz) const {
        const auto& dims = low_.dims;
        const int n = low_.n;
        Vec bz_s = bz;
        apply_winv_t(bz_s); // W^{-T} bz

        // Map into the stacked row space: per PSD block Q_b' (block piece),
        // then LP and SOC rows verbatim.
        int s_rows = 0;
        for (const auto& b : low_.psd) s_rows += b.nc * b.nc;
        int d_rows = dims.l;
        for (int q : dims.q) d_rows += q;
        Vec v_s(s_rows + d_rows);
        int row = 0;
        for (std::size_t i = 0; i < low_.psd.size(); ++i) {
            const int m2 = 4 * low_.psd[i].nc * low_.psd[i].nc;
            const int np = low_.psd[i].nc * low_.psd[i].nc;
            v_s.segment(row, np) =
                psd_q_[i].transpose() * bz_s.segment(dims.s_off[i], m2);
            row += np;
        }
        v_s.segment(row, dims.l) = bz_s.head(dims.l);
        row += dims.l;
        for (std::size_t i = 0; i < low_.g_soc.size(); ++i) {
            v_s.segment(row, dims.q[i]) = bz_s.segment(dims.q_off[i], dims.q[i]);
            row += dims.q[i];
        }

        const auto r_view = qr_s_.matrixQR().topRows(n).triangularView<Eigen::Upper>();
        // x = R^{-1} (R^{-T} bx + (Q' v_s)_[0:n]).
        Vec t = r_view.transpose().solve(bx);
        Vec qv = qr_s_.householderQ().adjoint() * v_s;
        t += qv.head(n);
        ux = r_view.solve(t);

        // uz = W^{-1} (Gs x - W^{-T} bz).
        Vec gx(low_.dims.cdim);
        low_.apply_g(ux, gx);
        uz = gx;
        apply_winv_t(uz);
        uz -= bz_s;
        apply_winv(uz);
    }

    // H^{-1} rhs through the equilibrated factorization.
    template <typename Derived>
    Mat solve_h(const Eigen::MatrixBase<Derived>& rhs) const {
        return equil_.asDiagonal() * Mat(llt_.solve(Mat(equil_.asDiagonal() * rhs)));
    }

    void solve_once(const Vec& bx, const Vec& by, const Vec& bz, Vec& ux, Vec& uy,
                    Vec& uz) const {
        if (qr_mode_) {
            uy = Vec::Zero(0);
            solve_once_qr(bx, bz, ux, uz);
            return;
        }
        Vec wz = bz;
        apply_wtw_inv(wz);
        Vec t(low_.n);
        low_.apply_gt(wz, t);
        t += bx;

        if (low_.a_eq.rows() > 0) {
            const Vec hit = solve_h(t);
            uy = sa_llt_.solve(low_.a_eq * hit - by);
            ux = solve_h(t - low_.a_eq.transpose() * uy);
        } else {
            uy = Vec::Zero(0);
            ux = solve_h(t);
        }

        Vec gx(low_.dims.cdim);
        low_.apply_g(ux, gx);
        uz = gx - bz;
        apply_wtw_inv(uz);
    }

    void residual(const Vec& bx, const Vec& by, const Vec& bz, const Vec& ux, const Vec& uy,
                  const Vec& uz, Vec& rx, Vec& ry, Vec& rz) const {
        Vec gtz(low_.n);
        low_.apply_gt(uz, gtz);
        rx = bx - gtz;
        if (low_.a_eq.rows() > 0) {
            rx -= low_.a_eq.transpose() * uy;
            ry = by - low_.a_eq * ux;
        } else {
            ry.resize(0);
        }
        Vec gx(low_.dims.cdim);
        low_.apply_g(ux, gx);
        Vec wz = uz;
        apply_wtw(wz);
        rz = bz - (gx - wz);
    }

    // x := W^{-1} x for one SOC block, applied to each column.
    template <typename Derived>
    void apply_soc_winv(Eigen::MatrixBase<Derived>& x, std::size_t i) const {
        const Vec& v = w_->v[i];
        const double beta = w_->beta[i];
        const int m = static_cast<int>(v.size());
        Mat jx = x;
        jx.bottomRows(m - 1) = -jx.bottomRows(m - 1);
        const Eigen::RowVectorXd vjx = v.transpose() * jx;
        Mat t = 2.0 * v * vjx - Mat(x);
        t.bottomRows(m - 1) = -t.bottomRows(m - 1);
        x = t / beta;
    }

    // x := W x for one SOC block.
    template <typename Derived>
    void apply_soc_w(Eigen::MatrixBase<Derived>& x, std::size_t i) const {
        const Vec& v = w_->v[i];
        const double beta = w_->beta[i];
        const int m = static_cast<int>(v.size());
        const Eigen::RowVectorXd vx = v.transpose() * Mat(x);
        Mat jx = x;
        jx.bottomRows(m - 1) = -jx.bottomRows(m - 1);
        x = beta * (2.0 * v * vx - jx);
    }

    // Analytic Schur contribution of one embedded PSD block:
    // H[p,q] = <E(P_p), M E(P_q) M> = 2 Re tr(P_p Mc P_q Mc).
    void add_psd_schur_block(Mat& h, std::size_t i) const {
        const int nc = low_.psd[i].nc;
        const int base = low_.psd[i].base;
        const CMat& mc = minv_c_[i];

        struct Entry {
            cplx coef;
            int a, b;
        };
        struct Basis {
            Entry e[2];
            int count;
        };
        std::vector<Basis> basis(static_cast<std::size_t>(nc * nc));
        int idx = 0;
        for (int j = 0; j < nc; ++j) {
            basis[static_cast<std::size_t>(idx++)] = {{{1.0, j, j}, {}}, 1};
            for (int r = j + 1; r < nc; ++r) {
                basis[static_cast<std::size_t>(idx++)] = {{{1.0, r, j}, {1.0, j, r}}, 2};
                basis[static_cast<std::size_t>(idx++)] = {
                    {{cplx(0, 1), r, j}, {cplx(0, -1), j, r}}, 2};
            }
        }

        const int np = nc * nc;
        for (int p = 0; p < np; ++p) {
            for (int q = p; q < np; ++q) {
                cplx acc = 0.0;
                const Basis& bp = basis[static_cast<std::size_t>(p)];
                const Basis& bq = basis[static_cast<std::size_t>(q)];
                for (int ep = 0; ep < bp.count; ++ep)
                    for (int eq = 0; eq < bq.count; ++eq) {
                        const Entry& u = bp.e[ep];
                        const Entry& t = bq.e[eq];
                        acc += u.coef * t.coef * mc(u.b, t.a) * mc(t.b, u.a);
                    }
                const double val = 2.0 * acc.real();
                h(base + q, base + p) += val;
                if (p != q) h(base + p, base + q) += val;
            }
        }
    }

    const Lowered& low_;
    int refinement_;
    const Scaling* w_ = nullptr;
    bool qr_mode_ = false;
    std::vector<CMat> minv_c_;
    std::vector<Eigen::LLT<CMat>> minv_llt_;
    std::vector<Mat> psd_q_; // thin Q per PSD section (QR path)
    Eigen::HouseholderQR<Mat> qr_s_;
    Mat h_full_;
    Vec equil_;
    Eigen::LLT<Mat> llt_;
    Eigen::LLT<Mat> sa_llt_;
};

// ---------------------------------------------------------------------------
// Homogeneous self-dual conelp loop
// ---------------------------------------------------------------------------

struct ConelpResult {
    Status status = Status::failed;
    bool dual_infeasible = false;
    Vec x, s, z, y;
    double pcost = 0.0, dcost = 0.0;
    KktResiduals kkt;
    int iterations = 0;
    std::string diagnostics;
};

ConelpResult conelp(const Lowered& low, const Options& opts) {
    ConelpResult res;
    const auto& dims = low.dims;
    const int n = low.n;
    const int p = static_cast<int>(low.a_eq.rows());
    const Vec h = low.h_full();
    const Vec& c = low.c;
    const Vec e = detail::cone_identity(dims);

    const double resx0 = std::max(1.0, c.norm());
    const double resy0 = std::max(1.0, low.b_eq.norm());
    const double resz0 = std::max(1.0, h.norm());

    KktSystem kkt(low, opts.refinement);

    // Initial points from least-norm solves with W = I.
    Scaling w = detail::identity_scaling(dims);
    if (!kkt.factor(w)) {
        res.diagnostics = "initial KKT factorization failed";
        return res;
    }

    Vec x, y, s, z;
    {
        Vec uy, uz;
        kkt.solve(Vec::Zero(n), low.b_eq, h, x, uy, uz);
        s = -uz;
        low.project_embedded(s);
        const double ts = detail::distance_to_cone(s, dims);
        if (ts >= -1e-8) s += (1.0 + ts) * e;

        Vec ux;
        kkt.solve(-c, Vec::Zero(p), Vec::Zero(dims.cdim), ux, y, z);
        low.project_embedded(z);
        const double tz = detail::distance_to_cone(z, dims);
        if (tz >= -1e-8) z += (1.0 + tz) * e;
    }
    double tau = 1.0, kappa = 1.0;

    Vec x1(n), y1, z1(dims.cdim);
    Vec x2(n), y2, z2(dims.cdim);
    Vec rx(n), ry(p), rz(dims.cdim);
    Vec gx(dims.cdim), gtz(n);

    const int deg = dims.degree + 1;
    int iters_done = 0;

    // Ill-conditioned late-stage scalings can corrupt a step; keep the best
    // iterate seen and stop on stalls instead of walking away from it.
    struct Best {
        double score = kInf;
        Vec x, y, s, z;
        double tau = 1.0, kappa = 1.0;
        double pres = kInf, dres = kInf, gap = kInf, relgap = kInf, pcost = 0.0, dcost = 0.0;
    } best;
    int stall_count = 0;
    double mu0 = 0.0;

    for (int iter = 0; iter <= opts.max_iters; ++iter) {
        iters_done = iter;
        // Residuals of the self-dual embedding.
        low.apply_gt(z, gtz);
        rx = gtz + c * tau;
        if (p > 0) rx += low.a_eq.transpose() * y;
        low.apply_g(x, gx);
        rz = gx + s - h * tau;
        if (p > 0) ry = low.a_eq * x - low.b_eq * tau;
        const double hz_by = h.dot(z) + (p > 0 ? low.b_eq.dot(y) : 0.0);
        const double cx = c.dot(x);
        const double rtau = kappa + cx + hz_by;

        const double gap = detail::sdot(s, z) / (tau * tau);
        const double pcost = cx / tau;
        const double dcost = -hz_by / tau;
        double relgap = kInf;
        if (pcost < 0.0)
            relgap = gap / -pcost;
        else if (dcost > 0.0)
            relgap = gap / dcost;

        const double pres =
            std::max(p > 0 ? ry.norm() / resy0 : 0.0, rz.norm() / resz0) / tau;
        const double dres = rx.norm() / resx0 / tau;

        const double mu = (detail::sdot(s, z) + tau * kappa) / deg;
        if (iter == 0) mu0 = mu;

        const double score = std::max({pres, dres, std::min(gap, relgap)});
        if (score < best.score) {
            best = {score, x, y, s, z, tau, kappa, pres, dres, gap, relgap, pcost, dcost};
            stall_count = 0;
        } else if (best.score < 1e-6 && score > 10.0 * best.score) {
            if (++stall_count >= 2) break;
        }

        if (opts.verbose) {
            std::printf("it %3d  pcost % .6e dcost % .6e gap %.2e pres %.2e dres %.2e "
                        "tau %.2e kappa %.2e\n",
                        iter, pcost, dcost, gap, pres, dres, tau, kappa);
        }
        if (opts.on_iteration)
            opts.on_iteration({iter, pcost, dcost, gap, pres, dres, mu, tau, kappa, 0.0});

        // Optimality.
        if (pres <= opts.feastol && dres <= opts.feastol &&
            (gap <= opts.abstol || relgap <= opts.reltol)) {
            res.status = Status::optimal;
            res.x = x / tau;
            res.y = p > 0 ? Vec(y / tau) : Vec();
            res.s = s / tau;
            res.z = z / tau;
            res.pcost = pcost;
            res.dcost = dcost;
            res.kkt = {pres, dres, std::min(gap, relgap)};
            res.iterations = iter;
            return res;
        }

        // Infeasibility certificates.
        if (hz_by < 0.0) {
            Vec cert = gtz;
            if (p > 0) cert += low.a_eq.transpose() * y;
            const double pinfres = cert.norm() / resx0 / (-hz_by);
            if (pinfres <= opts.feastol) {
                res.status = Status::infeasible_certificate;
                res.dual_infeasible = false;
                res.y = p > 0 ? Vec(y / -hz_by) : Vec();
                res.z = z / -hz_by;
                res.x = Vec::Zero(n);
                res.s = Vec::Zero(dims.cdim);
                res.kkt = {pinfres, pinfres, 0.0};
                res.iterations = iter;
                return res;
            }
        }
        if (cx < 0.0) {
            Vec gxs = gx + s;
            const double dinfres =
                std::max(p > 0 ? (low.a_eq * x).norm() / resy0 : 0.0, gxs.norm() / resz0) /
                (-cx);
            if (dinfres <= opts.feastol) {
                res.status = Status::infeasible_certificate;
                res.dual_infeasible = true;
                res.x = x / -cx;
                res.s = s / -cx;
                res.z = Vec::Zero(dims.cdim);
                res.y = Vec();
                res.kkt = {dinfres, dinfres, 0.0};
                res.iterations = iter;
                return res;
            }
        }

        if (iter == opts.max_iters) break;

        // Nesterov-Todd scaling at the current iterate.
        try {
            w = detail::compute_scaling(s, z, dims);
        } catch (const std::exception& ex) {
            res.diagnostics = ex.what();
            break;
        }
        // Late-stage scalings make the Schur route lose the direction;
        // switch to the QR factorization for the endgame.
        const bool accurate = mu < 1e-4 * mu0;
        if (!kkt.factor(w, accurate)) {
            res.diagnostics = "KKT factorization failed";
            break;
        }
        kkt.set_refinement(opts.refinement + (accurate ? 1 : 0));

        // Iteration-constant solve: [.](x1,y1,z1) = (-c, b, h).
        kkt.solve(-c, low.b_eq, h, x1, y1, z1);
        const double denom_tau =
            c.dot(x1) + (p > 0 ? low.b_eq.dot(y1) : 0.0) + h.dot(z1) - kappa / tau;

        const Vec lam_sqr = detail::lambda_sqr(w, dims);

        Vec ds_aff, dz_aff;
        double dtau_aff = 0.0, dkappa_aff = 0.0;
        double sigma = 0.0;

        for (int pass = 0; pass < 2; ++pass) {
            const bool affine = pass == 0;
            const double eta = affine ? 1.0 : 1.0 - sigma;

            Vec ds_rhs = -lam_sqr;
            double dkappa_rhs = -tau * kappa;
            if (!affine) {
                // Mehrotra correction uses the affine direction in scaled space.
                Vec ws = ds_aff;
                detail::scale(ws, w, dims, /*trans=*/true, /*inverse=*/true); // W^{-T} ds
                Vec wz = dz_aff;
                detail::scale(wz, w, dims, /*trans=*/false, /*inverse=*/false); // W dz
                detail::sprod(ws, wz, dims);
                ds_rhs -= ws;
                ds_rhs += sigma * mu * e;
                dkappa_rhs += sigma * mu - dtau_aff * dkappa_aff;
            }

            // bz part: -eta rz - W'(lambda o\ ds_rhs).
            Vec lam_inv_ds = ds_rhs;
            detail::sinv_lambda(lam_inv_ds, w, dims);
            Vec wt_ds = lam_inv_ds;
            detail::scale(wt_ds, w, dims, /*trans=*/true, /*inverse=*/false); // W' u

            const Vec bx = -eta * rx;
            const Vec by = p > 0 ? Vec(-eta * ry) : Vec(Vec::Zero(0));
            const Vec bz = -eta * rz - wt_ds;
            kkt.solve(bx, by, bz, x2, y2, z2);

            const double num_tau = -eta * rtau - (c.dot(x2) + (p > 0 ? low.b_eq.dot(y2) : 0.0) +
                                                  h.dot(z2)) -
                                   dkappa_rhs / tau;
            const double dtau = num_tau / denom_tau;
            Vec dx = x2 + dtau * x1;
            Vec dy = p > 0 ? Vec(y2 + dtau * y1) : Vec();
            Vec dz = z2 + dtau * z1;
            const double dkappa = (dkappa_rhs - kappa * dtau) / tau;

            // ds = W'(lambda o\ ds_rhs - W dz).
            Vec wdz = dz;
            detail::scale(wdz, w, dims, /*trans=*/false, /*inverse=*/false);
            Vec ds = lam_inv_ds - wdz;
            detail::scale(ds, w, dims, /*trans=*/true, /*inverse=*/false);

            low.project_embedded(ds);
            low.project_embedded(dz);

            double bound = std::min(detail::max_feasible_step(s, ds, dims),
                                    detail::max_feasible_step(z, dz, dims));
            if (dtau < 0.0) bound = std::min(bound, -tau / dtau);
            if (dkappa < 0.0) bound = std::min(bound, -kappa / dkappa);

            if (affine) {
                const double alpha_aff = std::min(1.0, bound);
                sigma = std::pow(1.0 - alpha_aff, 3);
                sigma = std::min(1.0, std::max(0.0, sigma));
                ds_aff = ds;
                dz_aff = dz;
                dtau_aff = dtau;
                dkappa_aff = dkappa;
            } else {
                const double alpha = std::min(1.0, opts.step * bound);
                x += alpha * dx;
                if (p > 0) y += alpha * dy;
                s += alpha * ds;
                z += alpha * dz;
                tau += alpha * dtau;
                kappa += alpha * dkappa;
                low.project_embedded(s);
                low.project_embedded(z);
            }
        }

        if (!(tau > 0.0) || !std::isfinite(tau) || !std::isfinite(kappa)) {
            res.diagnostics = "tau/kappa became invalid";
            break;
        }
    }

    // Fell out of the loop (stall, numerical trouble, or iteration cap):
    // judge the best iterate seen against the tolerances.
    if (best.score < kInf) {
        res.x = best.x / best.tau;
        res.y = p > 0 ? Vec(best.y / best.tau) : Vec();
        res.s = best.s / best.tau;
        res.z = best.z / best.tau;
        res.pcost = best.pcost;
        res.dcost = best.dcost;
        res.kkt = {best.pres, best.dres, std::min(best.gap, best.relgap)};
        if (best.pres <= opts.feastol && best.dres <= opts.feastol &&
            (best.gap <= opts.abstol || best.relgap <= opts.reltol)) {
            res.status = Status::optimal;
            res.diagnostics.clear();
        } else {
            res.status = Status::max_iters;
        }
    }
    res.iterations = iters_done;
    return res;
}

} // namespace

// ---------------------------------------------------------------------------
// Public entry point
// ---------------------------------------------------------------------------

Solution solve(const Problem& problem, const Options& opts) {
    const Lowered low = lower_problem(problem);

    ConelpResult r = conelp(low, opts);

    Solution sol;
    sol.status = r.status;
    sol.dual_infeasible = r.dual_infeasible;
    sol.iterations = r.iterations;
    sol.diagnostics = r.diagnostics;
    sol.kkt = r.kkt;

    if (r.status == Status::failed) return sol;

    sol.x = r.x;
    sol.y_eq = r.y;
    if (r.z.size() == low.dims.cdim) {
        sol.z_lp = r.z.head(low.dims.l);
        for (std::size_t i = 0; i < low.g_soc.size(); ++i)
            sol.z_soc.push_back(r.z.segment(low.dims.q_off[i], low.dims.q[i]));
        for (std::size_t i = 0; i < low.psd.size(); ++i) {
            const int m = low.dims.s[i];
            ConstMatMap blk(r.z.data() + low.dims.s_off[i], m, m);
            // Complex-domain dual: tr(Lambda W) = <z_emb, E(W)> => Lambda = 2 Zc.
            sol.z_psd.push_back(2.0 * extract_hermitian(blk));
        }
    }
    if (r.status == Status::optimal || r.status == Status::max_iters) {
        const double cx = low.c.dot(r.x);
        sol.objective = (low.maximize ? -cx : cx) + low.obj_offset;
    }
    return sol;
}

} // namespace radcom::conic
