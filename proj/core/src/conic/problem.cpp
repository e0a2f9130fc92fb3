#include "radcom/conic/problem.hpp"

#include <Eigen/Eigenvalues>
#include <ostream>

namespace radcom::conic {

SocLowering lower_quadratic_to_soc(const CMat& gram, const CVec& linear, double constant,
                                   double psd_tol) {
    if (gram.rows() != gram.cols()) throw BuildError("lower_quadratic_to_soc: gram not square");
    const CMat h = 0.5 * (gram + gram.adjoint());
    if ((gram - h).norm() > 1e-9 * std::max(1.0, gram.norm()))
        throw BuildError("lower_quadratic_to_soc: gram not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    const Vec evals = es.eigenvalues();
    const double tr = std::max(h.trace().real(), 0.0);
    const double floor = -psd_tol * std::max(tr, 1e-300);
    if (evals.minCoeff() < floor)
        throw BuildError("lower_quadratic_to_soc: gram indefinite beyond tolerance");

    // Keep eigen-directions carrying weight; clip small negatives to zero.
    const double keep = std::max(evals.maxCoeff(), 0.0) * 1e-14;
    int rank = 0;
    for (int i = 0; i < evals.size(); ++i)
        if (evals(i) > keep) ++rank;

    SocLowering low;
    low.factor.resize(rank, gram.cols());
    int r = 0;
    for (int i = 0; i < evals.size(); ++i) {
        if (evals(i) > keep)
            low.factor.row(r++) = std::sqrt(evals(i)) * es.eigenvectors().col(i).adjoint();
    }
    low.linear = linear;
    low.constant = constant;
    return low;
}

int Problem::add_psd_block(int n) {
    if (n < 1) throw BuildError("add_psd_block: dimension must be >= 1");
    psd_dim_.push_back(n);
    psd_base_.push_back(n_vars_);
    n_vars_ += n * n;
    return static_cast<int>(psd_dim_.size()) - 1;
}

int Problem::add_free_vars(int count) {
    if (count < 1) throw BuildError("add_free_vars: count must be >= 1");
    const int base = n_vars_;
    n_vars_ += count;
    free_vars_ += count;
    return base;
}

Problem::ComplexSpan Problem::add_complex_vars(int m) {
    ComplexSpan s;
    s.m = m;
    s.re0 = add_free_vars(m);
    s.im0 = add_free_vars(m);
    return s;
}

int Problem::param_diag(int block, int i) const {
    const int n = psd_dim_[static_cast<std::size_t>(block)];
    // Column-major lower-triangle walk: column j holds 1 + 2(n-1-j) params.
    int idx = psd_base_[static_cast<std::size_t>(block)];
    for (int j = 0; j < i; ++j) idx += 1 + 2 * (n - 1 - j);
    return idx;
}

int Problem::param_re(int block, int i, int j) const {
    return param_diag(block, j) + 1 + 2 * (i - j - 1);
}

int Problem::param_im(int block, int i, int j) const { return param_re(block, i, j) + 1; }

void Problem::add_trace_term(LinearExpr& e, int block, const CMat& q) const {
    const int n = psd_dim_[static_cast<std::size_t>(block)];
    if (q.rows() != n || q.cols() != n)
        throw BuildError("add_trace_term: coefficient dimension mismatch");
    const CMat h = 0.5 * (q + q.adjoint());
    for (int j = 0; j < n; ++j) {
        e.add(param_diag(block, j), h(j, j).real());
        for (int i = j + 1; i < n; ++i) {
            e.add(param_re(block, i, j), 2.0 * h(i, j).real());
            e.add(param_im(block, i, j), 2.0 * h(i, j).imag());
        }
    }
}

void Problem::add_re_inner(LinearExpr& e, const ComplexSpan& v, const CVec& c) {
    for (int i = 0; i < v.m; ++i) {
        e.add(v.re0 + i, c(i).real());
        e.add(v.im0 + i, c(i).imag());
    }
}

void Problem::add_im_inner(LinearExpr& e, const ComplexSpan& v, const CVec& c) {
    for (int i = 0; i < v.m; ++i) {
        e.add(v.im0 + i, c(i).real());
        e.add(v.re0 + i, -c(i).imag());
    }
}

void Problem::add_eq(LinearExpr e, double rhs) { eqs_.push_back({std::move(e), rhs}); }

void Problem::add_ineq(LinearExpr e, double rhs) { ineqs_.push_back({std::move(e), rhs}); }

void Problem::add_soc(std::vector<LinearExpr> norm_terms, LinearExpr bound) {
    socs_.push_back({std::move(norm_terms), std::move(bound)});
}

void Problem::add_quadratic_le(const ComplexSpan& x, const SocLowering& low,
                               LinearExpr extra) {
    if (low.linear.size() != x.m) throw BuildError("add_quadratic_le: size mismatch");
    // Affine part L(x) = Re(linear^H x) + constant + extra.
    LinearExpr affine = extra;
    affine.offset += low.constant;
    add_re_inner(affine, x, low.linear);

    if (low.factor.rows() == 0) {
        // Pure affine constraint L <= 0.
        double rhs = -affine.offset;
        affine.offset = 0.0;
        add_ineq(std::move(affine), rhs);
        return;
    }

    // ||[2 F x; 1 + L]|| <= 1 - L  encodes  ||F x||^2 + L <= 0.
    std::vector<LinearExpr> terms;
    terms.reserve(static_cast<std::size_t>(2 * low.factor.rows()) + 1);
    for (int r = 0; r < low.factor.rows(); ++r) {
        const CVec f = 2.0 * low.factor.row(r).adjoint(); // c with c^H x = 2 (F x)_r
        LinearExpr re, im;
        add_re_inner(re, x, f);
        add_im_inner(im, x, f);
        terms.push_back(std::move(re));
        terms.push_back(std::move(im));
    }
    LinearExpr last = affine;
    last.offset += 1.0;
    terms.push_back(std::move(last));

    LinearExpr bound = affine;
    bound *= -1.0;
    bound.offset += 1.0;
    add_soc(std::move(terms), std::move(bound));
}

void Problem::set_objective(LinearExpr e, bool maximize) {
    objective_ = std::move(e);
    maximize_ = maximize;
}

namespace {
void dump_expr(std::ostream& os, const LinearExpr& e) {
    for (const auto& [v, c] : e.terms) os << " " << v << ":" << c;
    if (e.offset != 0.0) os << " const:" << e.offset;
    os << "\n";
}
} // namespace

void Problem::dump(std::ostream& os) const {
    os << "vars " << n_vars_ << " free " << free_vars_ << "\n";
    os << "psd_blocks";
    for (std::size_t b = 0; b < psd_dim_.size(); ++b)
        os << " " << psd_dim_[b] << "@" << psd_base_[b];
    os << "\n";
    os << "objective " << (maximize_ ? "max" : "min");
    dump_expr(os, objective_);
    for (const auto& r : eqs_) {
        os << "eq rhs:" << r.rhs;
        dump_expr(os, r.expr);
    }
    for (const auto& r : ineqs_) {
        os << "ineq rhs:" << r.rhs;
        dump_expr(os, r.expr);
    }
    for (const auto& s : socs_) {
        os << "soc " << s.norm_terms.size() << "\n";
        os << " bound";
        dump_expr(os, s.bound);
        for (const auto& t : s.norm_terms) {
            os << " term";
            dump_expr(os, t);
        }
    }
}

CMat Problem::psd_value(int block, const Vec& x) const {
    const int n = psd_dim_[static_cast<std::size_t>(block)];
    CMat w(n, n);
    for (int j = 0; j < n; ++j) {
        w(j, j) = x(param_diag(block, j));
        for (int i = j + 1; i < n; ++i) {
            const std::complex<double> val(x(param_re(block, i, j)), x(param_im(block, i, j)));
            w(i, j) = val;
            w(j, i) = std::conj(val);
        }
    }
    return w;
}

CVec Problem::complex_value(const ComplexSpan& s, const Vec& x) {
    CVec v(s.m);
    for (int i = 0; i < s.m; ++i) v(i) = std::complex<double>(x(s.re0 + i), x(s.im0 + i));
    return v;
}

} // namespace radcom::conic
