#pragma once

// Cone algebra for the interior-point solver: product-cone vector layout,
// Nesterov-Todd scaling, Jordan products, and feasible-step computation.
// Layout of a cone vector: [ LP block (l) | SOC blocks (q_i) | PSD blocks
// stored as full column-major m_i x m_i symmetric matrices ].

#include <Eigen/Dense>
#include <vector>

namespace radcom::conic::detail {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct ConeDims {
    int l = 0;
    std::vector<int> q;
    std::vector<int> s; // embedded (real symmetric) PSD dimensions

    int cdim = 0;   // total storage length
    int degree = 0; // barrier degree: l + |q| + sum(s)
    std::vector<int> q_off;
    std::vector<int> s_off;

    void finalize();
};

/// Identity element e of the product cone.
Vec cone_identity(const ConeDims& dims);

/// Nesterov-Todd scaling W with W^{-T} s = W z = lambda.
struct Scaling {
    Vec d, di;                  // LP: W = diag(d)
    std::vector<Vec> v;         // SOC: W = beta (2 v v' - J)
    std::vector<double> beta;
    std::vector<Mat> r, rti;    // PSD: W x = vec(r' X r), rti = r^{-T}
    Vec lambda;                 // scaled point, cone layout (PSD blocks diagonal)
};

/// Computes the NT scaling from strictly interior s, z.
Scaling compute_scaling(const Vec& s, const Vec& z, const ConeDims& dims);

/// Identity scaling (used for initialization).
Scaling identity_scaling(const ConeDims& dims);

/// In-place x := W x / W' x / W^{-1} x / W^{-T} x.
void scale(Vec& x, const Scaling& w, const ConeDims& dims, bool trans, bool inverse);

/// In-place x := (W' W) x or (W' W)^{-1} x.
void scale_wtw(Vec& x, const Scaling& w, const ConeDims& dims, bool inverse);

/// Jordan product x := u o x.
void sprod(Vec& x, const Vec& u, const ConeDims& dims);

/// Inverse product x := lambda o\ x where lambda is the scaled point
/// (PSD blocks diagonal).
void sinv_lambda(Vec& x, const Scaling& w, const ConeDims& dims);

/// lambda o lambda in cone layout.
Vec lambda_sqr(const Scaling& w, const ConeDims& dims);

/// <s, z> under the cone inner product (plain dot for this layout).
inline double sdot(const Vec& a, const Vec& b) { return a.dot(b); }

/// Largest t such that x + a*dx stays in the cone for all a in [0, t]
/// (+inf if unconstrained). x must be strictly interior.
double max_feasible_step(const Vec& x, const Vec& dx, const ConeDims& dims);

/// min { t : x + t e >= 0 }: negative iff x is strictly interior.
double distance_to_cone(const Vec& x, const ConeDims& dims);

/// Projects PSD blocks of a cone vector onto exact symmetry (and, for
/// embedded Hermitian blocks, callers may additionally project onto the
/// embedded subalgebra).
void symmetrize_psd_blocks(Vec& x, const ConeDims& dims);

} // namespace radcom::conic::detail
