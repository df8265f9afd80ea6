#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>

#include "derham/errors.hpp"
#include "derham/random.hpp"
#include "derham/solvers/pcg.hpp"
#include "derham/sparse/csr_matrix.hpp"
#include "derham/sparse/operator_expr.hpp"

namespace derham {

/// (A + cM) u + B p = F,  B^T u = G.
/// A is N x N and SPSD, M is N x N and SPD, B is N x K, U is K x K and SPD.
struct ConstrainedSystem {
    std::shared_ptr<const CsrMatrix> A;
    std::shared_ptr<const CsrMatrix> B;
    std::shared_ptr<const CsrMatrix> M;
    std::shared_ptr<const CsrMatrix> U;
    double c = 0.0;
    Vector F;
    Vector G;

    std::size_t n() const { return A ? A->rows() : 0; }
    std::size_t m() const { return B ? B->cols() : 0; }

    void validate() const
    {
        if (!A || !B || !M || !U)
            throw InvalidArgument("ConstrainedSystem: A, B, M and U are all required");
        const std::size_t N = A->rows();
        if (A->cols() != N || M->rows() != N || M->cols() != N || B->rows() != N)
            throw DimensionError("ConstrainedSystem: A, M must be N x N and B must have N rows");
        if (U->rows() != B->cols() || U->cols() != B->cols())
            throw DimensionError("ConstrainedSystem: U must be K x K with K the column count of B");
        if (!is_symmetric(*A))
            throw InvalidArgument("ConstrainedSystem: A is not symmetric");
        if (!is_symmetric(*M))
            throw InvalidArgument("ConstrainedSystem: M is not symmetric");
        if (!is_symmetric(*U))
            throw InvalidArgument("ConstrainedSystem: U is not symmetric");
        if (!(c >= 0.0) || !std::isfinite(c))
            throw InvalidArgument("ConstrainedSystem: c must be a finite nonnegative number");
        require_size(F, N, "ConstrainedSystem F");
        require_size(G, B->cols(), "ConstrainedSystem G");
        require_finite(F, "ConstrainedSystem F");
        require_finite(G, "ConstrainedSystem G");
        require_finite(A->values(), "ConstrainedSystem A");
        require_finite(B->values(), "ConstrainedSystem B");
        require_finite(M->values(), "ConstrainedSystem M");
        require_finite(U->values(), "ConstrainedSystem U");
    }
};

/// alpha when U = alpha I (only diagonal entries, all equal), nothing otherwise.
inline std::optional<double> scalar_identity_factor(const CsrMatrix& U)
{
    if (U.rows() != U.cols() || U.rows() == 0)
        return std::nullopt;
    const auto rp = U.row_ptr();
    const auto ci = U.col_idx();
    const auto v = U.values();
    std::optional<double> alpha;
    for (std::size_t i = 0; i < U.rows(); ++i) {
        double d = 0.0;
        for (std::size_t p = rp[i]; p < rp[i + 1]; ++p) {
            if (ci[p] != i) {
                if (v[p] != 0.0)
                    return std::nullopt;
            } else {
                d = v[p];
            }
        }
        if (!alpha)
            alpha = d;
        else if (d != *alpha)
            return std::nullopt;
    }
    return alpha;
}

inline bool is_diagonal(const CsrMatrix& U)
{
    const auto rp = U.row_ptr();
    const auto ci = U.col_idx();
    const auto v = U.values();
    for (std::size_t i = 0; i < U.rows(); ++i)
        for (std::size_t p = rp[i]; p < rp[i + 1]; ++p)
            if (ci[p] != i && v[p] != 0.0)
                return false;
    return true;
}

/// U as the cheapest faithful leaf: scaled identity, diagonal, or sparse.
inline OperatorExpr weight_operator(const std::shared_ptr<const CsrMatrix>& U)
{
    if (const auto alpha = scalar_identity_factor(*U))
        return OperatorExpr::identity(U->rows(), *alpha);
    if (is_diagonal(*U))
        return OperatorExpr::diagonal(diagonal(*U));
    return OperatorExpr::matrix(U);
}

inline OperatorExpr op_A(const ConstrainedSystem& s) { return OperatorExpr::matrix(s.A); }
inline OperatorExpr op_M(const ConstrainedSystem& s) { return OperatorExpr::matrix(s.M); }
inline OperatorExpr op_BUBt(const ConstrainedSystem& s)
{
    return OperatorExpr::triple_product(s.B, weight_operator(s.U));
}

inline Vector apply_BU(const ConstrainedSystem& s, std::span<const double> g) { return spmv(*s.B, spmv(*s.U, g)); }

/// Largest ||A y|| / (||A||_F ||y|| + eps) over random p, with M y = B p.
inline double verify_complex_property(const ConstrainedSystem& sys, std::size_t trials = 20, std::uint64_t seed = 42)
{
    if (!sys.A || !sys.B || !sys.M)
        throw InvalidArgument("verify_complex_property: A, B and M are required");
    const OperatorExpr M = op_M(sys);
    const Preconditioner jac = Preconditioner::jacobi(*sys.M);
    PcgConfig cfg;
    cfg.rel_tol = 1e-13;
    cfg.max_iter = 20 * sys.n() + 100;
    cfg.record_trace = false;
    const double anorm = norm_frobenius(*sys.A);
    UniformSource rng(seed);
    double worst = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const Vector p = rng.vector(sys.m());
        const Vector bp = spmv(*sys.B, p);
        if (blas::norm2(bp) == 0.0)
            continue;
        const PcgResult r = pcg(M, jac, bp, Vector{}, cfg);
        if (!r.converged)
            throw DivergenceError("verify_complex_property: mass solve did not converge (residual " +
                                  std::to_string(r.residual) + ")");
        const double defect = blas::norm2(spmv(*sys.A, r.x)) / (anorm * blas::norm2(r.x) + 1e-300);
        worst = std::max(worst, defect);
    }
    return worst;
}

} // namespace derham
