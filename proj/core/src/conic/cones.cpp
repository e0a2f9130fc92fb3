#include "cones.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace radcom::conic::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using MatMap = Eigen::Map<Mat>;
using CMatMap = Eigen::Map<const Mat>;

// sqrt(x0^2 - ||x1||^2) for a strictly interior SOC point.
double jnrm2(const Eigen::Ref<const Vec>& x) {
    const double arg = x(0) * x(0) - x.tail(x.size() - 1).squaredNorm();
    return std::sqrt(std::max(arg, 0.0));
}

double jdot(const Eigen::Ref<const Vec>& a, const Eigen::Ref<const Vec>& b) {
    return a(0) * b(0) - a.tail(a.size() - 1).dot(b.tail(b.size() - 1));
}

} // namespace

void ConeDims::finalize() {
    cdim = l;
    degree = l;
    q_off.clear();
    s_off.clear();
    for (int qi : q) {
        q_off.push_back(cdim);
        cdim += qi;
        degree += 1;
    }
    for (int si : s) {
        s_off.push_back(cdim);
        cdim += si * si;
        degree += si;
    }
}

Vec cone_identity(const ConeDims& dims) {
    Vec e = Vec::Zero(dims.cdim);
    e.head(dims.l).setOnes();
    for (std::size_t i = 0; i < dims.q.size(); ++i) e(dims.q_off[i]) = 1.0;
    for (std::size_t i = 0; i < dims.s.size(); ++i) {
        const int m = dims.s[i];
        MatMap blk(e.data() + dims.s_off[i], m, m);
        blk.setIdentity();
    }
    return e;
}

Scaling identity_scaling(const ConeDims& dims) {
    Scaling w;
    w.d = Vec::Ones(dims.l);
    w.di = w.d;
    for (std::size_t i = 0; i < dims.q.size(); ++i) {
        Vec v = Vec::Zero(dims.q[i]);
        v(0) = 1.0;
        w.v.push_back(std::move(v));
        w.beta.push_back(1.0);
    }
    for (int m : dims.s) {
        w.r.push_back(Mat::Identity(m, m));
        w.rti.push_back(Mat::Identity(m, m));
    }
    w.lambda = cone_identity(dims);
    return w;
}

Scaling compute_scaling(const Vec& s, const Vec& z, const ConeDims& dims) {
    Scaling w;
    w.lambda = Vec::Zero(dims.cdim);

    // LP block: W = diag(sqrt(s ./ z)), lambda = sqrt(s .* z).
    w.d = (s.head(dims.l).array() / z.head(dims.l).array()).sqrt();
    w.di = w.d.cwiseInverse();
    w.lambda.head(dims.l) = (s.head(dims.l).array() * z.head(dims.l).array()).sqrt();

    // SOC blocks: hyperbolic Householder scaling.
    for (std::size_t i = 0; i < dims.q.size(); ++i) {
        const int m = dims.q[i];
        const int off = dims.q_off[i];
        const auto sk = s.segment(off, m);
        const auto zk = z.segment(off, m);
        const double aa = jnrm2(sk);
        const double bb = jnrm2(zk);
        w.beta.push_back(std::sqrt(aa / bb));
        const double cc = std::sqrt((sk.dot(zk) / aa / bb + 1.0) / 2.0);

        Vec vk = -zk / bb;
        vk(0) = -vk(0);
        vk += sk / aa;
        vk /= 2.0 * cc;
        vk(0) += 1.0;
        vk /= std::sqrt(2.0 * vk(0));
        w.v.push_back(std::move(vk));

        auto lk = w.lambda.segment(off, m);
        lk(0) = cc;
        const double dd = 2.0 * cc + sk(0) / aa + zk(0) / bb;
        lk.tail(m - 1) = ((cc + zk(0) / bb) / dd / aa) * sk.tail(m - 1) +
                         ((cc + sk(0) / aa) / dd / bb) * zk.tail(m - 1);
        lk *= std::sqrt(aa * bb);
    }

    // PSD blocks: factor S = Ls Ls', Z = Lz Lz', SVD(Lz' Ls) = U diag(lam) V';
    // r = Lz^{-T} U lam^{1/2}, rti = Lz U lam^{-1/2}.
    for (std::size_t i = 0; i < dims.s.size(); ++i) {
        const int m = dims.s[i];
        const int off = dims.s_off[i];
        CMatMap sk(s.data() + off, m, m);
        CMatMap zk(z.data() + off, m, m);
        Eigen::LLT<Mat> ls_f(sk);
        Eigen::LLT<Mat> lz_f(zk);
        if (ls_f.info() != Eigen::Success || lz_f.info() != Eigen::Success)
            throw std::runtime_error("compute_scaling: cone iterate lost definiteness");
        const Mat ls = ls_f.matrixL();
        const Mat lz = lz_f.matrixL();
        Eigen::JacobiSVD<Mat> svd(lz.transpose() * ls,
                                  Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vec lam = svd.singularValues();
        const Vec lam_sqrt = lam.cwiseSqrt();

        Mat r = lz.transpose().template triangularView<Eigen::Upper>().solve(svd.matrixU());
        Mat rti = lz * svd.matrixU();
        for (int c = 0; c < m; ++c) {
            r.col(c) *= lam_sqrt(c);
            rti.col(c) /= lam_sqrt(c);
        }
        w.r.push_back(std::move(r));
        w.rti.push_back(std::move(rti));

        MatMap lblk(w.lambda.data() + off, m, m);
        lblk.setZero();
        lblk.diagonal() = lam;
    }
    return w;
}

void scale(Vec& x, const Scaling& w, const ConeDims& dims, bool trans, bool inverse) {
    x.head(dims.l).array() *= (inverse ? w.di : w.d).array();

    for (std::size_t i = 0; i < dims.q.size(); ++i) {
        const int m = dims.q[i];
        auto xk = x.segment(dims.q_off[i], m);
        const Vec& v = w.v[i];
        if (!inverse) {
            // x := beta (2 v (v'x) - J x)
            const double vx = v.dot(xk);
            Vec jx = xk;
            jx.tail(m - 1) = -jx.tail(m - 1);
            xk = w.beta[i] * (2.0 * vx * v - jx);
        } else {
            // x := (1/beta) (2 J v (v' J x) - J J x) = (1/beta) J (2 v (v'Jx) - x)
            Vec jx = xk;
            jx.tail(m - 1) = -jx.tail(m - 1);
            const double vjx = v.dot(jx);
            Vec t = 2.0 * vjx * v - xk;
            t.tail(m - 1) = -t.tail(m - 1);
            xk = t / w.beta[i];
        }
    }

    for (std::size_t i = 0; i < dims.s.size(); ++i) {
        const int m = dims.s[i];
        MatMap xk(x.data() + dims.s_off[i], m, m);
        const Mat& r = w.r[i];
        const Mat& rti = w.rti[i];
        Mat res;
        if (!inverse) {
            res = trans ? Mat(r * xk * r.transpose()) : Mat(r.transpose() * xk * r);
        } else {
            res = trans ? Mat(rti.transpose() * xk * rti) : Mat(rti * xk * rti.transpose());
        }
        xk = 0.5 * (res + res.transpose());
    }
}

void scale_wtw(Vec& x, const Scaling& w, const ConeDims& dims, bool inverse) {
    // W' W x == W'(W x); both W and W' share the SOC/LP symmetric forms.
    scale(x, w, dims, /*trans=*/false, inverse);
    scale(x, w, dims, /*trans=*/true, inverse);
}

void sprod(Vec& x, const Vec& u, const ConeDims& dims) {
    x.head(dims.l).array() *= u.head(dims.l).array();

    for (std::size_t i = 0; i < dims.q.size(); ++i) {
        const int m = dims.q[i];
        auto xk = x.segment(dims.q_off[i], m);
        const auto uk = u.segment(dims.q_off[i], m);
        const double dot = uk.dot(xk);
        const double x0 = xk(0);
        xk.tail(m - 1) = uk(0) * xk.tail(m - 1) + x0 * uk.tail(m - 1);
        xk(0) = dot;
    }

    for (std::size_t i = 0; i < dims.s.size(); ++i) {
        const int m = dims.s[i];
        MatMap xk(x.data() + dims.s_off[i], m, m);
        CMatMap uk(u.data() + dims.s_off[i], m, m);
        const Mat prod = uk * xk;
        xk = 0.5 * (prod + prod.transpose());
    }
}

void sinv_lambda(Vec& x, const Scaling& w, const ConeDims& dims) {
    const Vec& lam = w.lambda;
    x.head(dims.l).array() /= lam.head(dims.l).array();

    for (std::size_t i = 0; i < dims.q.size(); ++i) {
        const int m = dims.q[i];
        auto xk = x.segment(dims.q_off[i], m);
        const auto lk = lam.segment(dims.q_off[i], m);
        const double aa = jdot(lk, lk);
        const double cc = xk(0);
        const double dd = lk.tail(m - 1).dot(xk.tail(m - 1));
        xk(0) = (cc * lk(0) - dd) / aa;
        xk.tail(m - 1) =
            (xk.tail(m - 1) * (aa / lk(0)) + (dd / lk(0) - cc) * lk.tail(m - 1)) / aa;
    }

    for (std::size_t i = 0; i < dims.s.size(); ++i) {
        const int m = dims.s[i];
        const int off = dims.s_off[i];
        MatMap xk(x.data() + off, m, m);
        CMatMap lk(lam.data() + off, m, m);
        for (int c = 0; c < m; ++c)
            for (int rr = 0; rr < m; ++rr)
                xk(rr, c) /= 0.5 * (lk.diagonal()(rr) + lk.diagonal()(c));
    }
}

Vec lambda_sqr(const Scaling& w, const ConeDims& dims) {
    Vec out = Vec::Zero(dims.cdim);
    out.head(dims.l) = w.lambda.head(dims.l).array().square();
    for (std::size_t i = 0; i < dims.q.size(); ++i) {
        const int m = dims.q[i];
        const auto lk = w.lambda.segment(dims.q_off[i], m);
        auto ok = out.segment(dims.q_off[i], m);
        ok(0) = lk.squaredNorm();
        ok.tail(m - 1) = 2.0 * lk(0) * lk.tail(m - 1);
    }
    for (std::size_t i = 0; i < dims.s.size(); ++i) {
        const int m = dims.s[i];
        CMatMap lk(w.lambda.data() + dims.s_off[i], m, m);
        MatMap ok(out.data() + dims.s_off[i], m, m);
        ok.setZero();
        ok.diagonal() = lk.diagonal().array().square();
    }
    return out;
}

double distance_to_cone(const Vec& x, const ConeDims& dims) {
    double t = -kInf;
    if (dims.l > 0) t = std::max(t, -x.head(dims.l).minCoeff());
    for (std::size_t i = 0; i < dims.q.size(); ++i) {
        const int m = dims.q[i];
        const auto xk = x.segment(dims.q_off[i], m);
        t = std::max(t, xk.tail(m - 1).norm() - xk(0));
    }
    for (std::size_t i = 0; i < dims.s.size(); ++i) {
        const int m = dims.s[i];
        CMatMap xk(x.data() + dims.s_off[i], m, m);
        Eigen::SelfAdjointEigenSolver<Mat> es(xk, Eigen::EigenvaluesOnly);
        t = std::max(t, -es.eigenvalues().minCoeff());
    }
    return t;
}

double max_feasible_step(const Vec& x, const Vec& dx, const ConeDims& dims) {
    double bound = kInf;

    for (int i = 0; i < dims.l; ++i)
        if (dx(i) < 0.0) bound = std::min(bound, -x(i) / dx(i));

    for (std::size_t i = 0; i < dims.q.size(); ++i) {
        const int m = dims.q[i];
        const auto xk = x.segment(dims.q_off[i], m);
        const auto dk = dx.segment(dims.q_off[i], m);
        // First positive root of (x0+a d0)^2 - ||x1+a d1||^2 = 0.
        const double a2 = dk(0) * dk(0) - dk.tail(m - 1).squaredNorm();
        const double a1 = 2.0 * (xk(0) * dk(0) - xk.tail(m - 1).dot(dk.tail(m - 1)));
        const double a0 = xk(0) * xk(0) - xk.tail(m - 1).squaredNorm();
        double root = kInf;
        if (std::abs(a2) < 1e-300) {
            if (a1 < 0.0) root = -a0 / a1;
        } else {
            const double disc = a1 * a1 - 4.0 * a2 * a0;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                const double r1 = (-a1 - sq) / (2.0 * a2);
                const double r2 = (-a1 + sq) / (2.0 * a2);
                for (double r : {std::min(r1, r2), std::max(r1, r2)})
                    if (r > 0.0) {
                        root = r;
                        break;
                    }
            }
        }
        bound = std::min(bound, root);
    }

    for (std::size_t i = 0; i < dims.s.size(); ++i) {
        const int m = dims.s[i];
        CMatMap xk(x.data() + dims.s_off[i], m, m);
        CMatMap dk(dx.data() + dims.s_off[i], m, m);
        Eigen::LLT<Mat> llt(xk);
        if (llt.info() != Eigen::Success) {
            // Near-boundary iterate: jitter just enough to factor.
            Mat xj = xk;
            xj.diagonal().array() += 1e-14 * std::max(xj.trace(), 1e-300);
            llt.compute(xj);
            if (llt.info() != Eigen::Success) return 0.0;
        }
        const Mat l = llt.matrixL();
        Mat b = l.triangularView<Eigen::Lower>().solve(Mat(dk));
        b = l.triangularView<Eigen::Lower>().solve(Mat(b.transpose()));
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (b + b.transpose()),
                                              Eigen::EigenvaluesOnly);
        const double lam_min = es.eigenvalues().minCoeff();
        if (lam_min < 0.0) bound = std::min(bound, -1.0 / lam_min);
    }
    return bound;
}

void symmetrize_psd_blocks(Vec& x, const ConeDims& dims) {
    for (std::size_t i = 0; i < dims.s.size(); ++i) {
        const int m = dims.s[i];
        MatMap xk(x.data() + dims.s_off[i], m, m);
        const Mat sym = 0.5 * (xk + xk.transpose());
        xk = sym;
    }
}

} // namespace radcom::conic::detail
