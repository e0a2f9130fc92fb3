#pragma once

#include <Eigen/Dense>
#include <complex>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace radcom::conic {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

struct BuildError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Sparse real linear expression over solver variables plus a constant.
struct LinearExpr {
    std::vector<std::pair<int, double>> terms;
    double offset = 0.0;

    void add(int var, double coeff) {
        if (coeff != 0.0) terms.emplace_back(var, coeff);
    }
    LinearExpr& operator*=(double a) {
        for (auto& t : terms) t.second *= a;
        offset *= a;
        return *this;
    }
};

/// Factorized convex quadratic x^H gram x = ||factor x||^2 (complex), ready
/// for second-order-cone encoding of
///   x^H gram x + Re(linear^H x) + constant <= 0.
struct SocLowering {
    CMat factor;  // r x n, rank-revealing
    CVec linear;
    double constant = 0.0;
};

/// Validates gram PSD (eigenvalues >= -psd_tol * trace clipped to zero) and
/// factors it. Throws BuildError if gram is indefinite beyond tolerance.
SocLowering lower_quadratic_to_soc(const CMat& gram, const CVec& linear, double constant,
                                   double psd_tol = 1e-10);

/// Conic problem over Hermitian PSD matrix variables and free real scalars,
/// with linear equality/inequality and second-order-cone constraints.
/// Hermitian n x n blocks are parametrized by n^2 reals (diagonal, then
/// Re/Im of the strict lower triangle, column-major) and enter the cone
/// program through the real symmetric embedding [[A, -B], [B, A]].
class Problem {
  public:
    struct ComplexSpan {
        int re0 = 0, im0 = 0, m = 0;
    };

    /// Hermitian PSD matrix variable; returns the block index.
    int add_psd_block(int n);
    /// Free real scalars; returns the first variable index.
    int add_free_vars(int count);
    /// Complex vector variable (2m free reals).
    ComplexSpan add_complex_vars(int m);

    int num_vars() const { return n_vars_; }
    int psd_param_base(int block) const { return psd_base_[static_cast<std::size_t>(block)]; }
    int psd_dim(int block) const { return psd_dim_[static_cast<std::size_t>(block)]; }
    int num_psd_blocks() const { return static_cast<int>(psd_dim_.size()); }

    /// expr += tr(Q W_block); Q is symmetrized to its Hermitian part.
    void add_trace_term(LinearExpr& e, int block, const CMat& q) const;
    /// expr += Re(c^H v) / Im(c^H v) for a complex span.
    static void add_re_inner(LinearExpr& e, const ComplexSpan& v, const CVec& c);
    static void add_im_inner(LinearExpr& e, const ComplexSpan& v, const CVec& c);

    void add_eq(LinearExpr e, double rhs);
    void add_ineq(LinearExpr e, double rhs); // e <= rhs
    /// || stack(norm_terms) || <= bound.
    void add_soc(std::vector<LinearExpr> norm_terms, LinearExpr bound);
    /// x^H gram x + Re(linear^H x) + constant + extra <= 0 via the lowering.
    void add_quadratic_le(const ComplexSpan& x, const SocLowering& low,
                          LinearExpr extra = {});

    void set_objective(LinearExpr e, bool maximize = false);

    /// Sparse-triplet text dump for offline cross-checking.
    void dump(std::ostream& os) const;

    // Param indices of a Hermitian block entry (i >= j).
    int param_diag(int block, int i) const;
    int param_re(int block, int i, int j) const;
    int param_im(int block, int i, int j) const;

    /// Hermitian matrix value from a parameter vector over all variables.
    CMat psd_value(int block, const Vec& x) const;
    /// Complex vector value for a span.
    static CVec complex_value(const ComplexSpan& s, const Vec& x);

    // Raw constraint storage, consumed by the solver lowering.
    struct Row {
        LinearExpr expr;
        double rhs;
    };
    struct Soc {
        std::vector<LinearExpr> norm_terms;
        LinearExpr bound;
    };
    const std::vector<Row>& eq_rows() const { return eqs_; }
    const std::vector<Row>& ineq_rows() const { return ineqs_; }
    const std::vector<Soc>& soc_blocks() const { return socs_; }
    const LinearExpr& objective_expr() const { return objective_; }
    bool is_maximize() const { return maximize_; }

  private:
    int n_vars_ = 0;
    int free_vars_ = 0;
    std::vector<int> psd_dim_;
    std::vector<int> psd_base_;

    std::vector<Row> eqs_;
    std::vector<Row> ineqs_;
    std::vector<Soc> socs_;

    LinearExpr objective_;
    bool maximize_ = false;
};

} // namespace radcom::conic
