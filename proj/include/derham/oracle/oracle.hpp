#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "derham/constrained/system.hpp"
#include "derham/errors.hpp"
#include "derham/oracle/dense.hpp"

namespace derham::oracle {

inline constexpr std::size_t kkt_size_cap = 5000;
inline constexpr std::size_t eig_size_cap = 3000;

struct KktSolution {
    Vector u;
    Vector p;
    /// ||K (u,p) - (F,G)|| / ||(F,G)||
    double residual = 0.0;
    std::size_t rank = 0;
};

inline DenseMatrix kkt_matrix(const ConstrainedSystem& sys)
{
    const std::size_t N = sys.n(), K = sys.m();
    DenseMatrix Kd(N + K, N + K);
    for (const auto& t : sys.A->to_triplets())
        Kd(t.row, t.col) += t.value;
    for (const auto& t : sys.M->to_triplets())
        Kd(t.row, t.col) += sys.c * t.value;
    for (const auto& t : sys.B->to_triplets()) {
        Kd(t.row, N + t.col) += t.value;
        Kd(N + t.col, t.row) += t.value;
    }
    return Kd;
}

/// Minimum-norm least-squares solution of [[A + cM, B], [B^T, 0]] (u, p) = (F, G).
inline KktSolution dense_kkt_solve(const ConstrainedSystem& sys)
{
    sys.validate();
    const std::size_t N = sys.n(), K = sys.m();
    if (N + K > kkt_size_cap)
        throw SizeCapError("dense_kkt_solve: " + std::to_string(N + K) + " unknowns exceed the cap of " +
                           std::to_string(kkt_size_cap));
    const DenseMatrix Kd = kkt_matrix(sys);
    Vector rhs(sys.F);
    rhs.insert(rhs.end(), sys.G.begin(), sys.G.end());
    const Vector x = min_norm_lstsq(Kd, rhs);
    KktSolution out;
    out.u.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(N));
    out.p.assign(x.begin() + static_cast<std::ptrdiff_t>(N), x.end());
    const Vector r = blas::sub(Kd * x, rhs);
    const double bn = blas::norm2(rhs);
    out.residual = bn > 0.0 ? blas::norm2(r) / bn : blas::norm2(r);
    out.rank = numerical_rank(Kd);
    return out;
}

struct GeneralizedEigen {
    Vector values;       // ascending
    DenseMatrix vectors; // M-orthonormal columns
};

/// A x = lambda M x with A symmetric and M SPD, through the Cholesky factor of M.
inline GeneralizedEigen dense_generalized_eigs(const DenseMatrix& A, const DenseMatrix& M)
{
    const std::size_t n = A.rows();
    if (A.cols() != n || M.rows() != n || M.cols() != n)
        throw DimensionError("dense_generalized_eigs: A and M must be square of equal size");
    if (n > eig_size_cap)
        throw SizeCapError("dense_generalized_eigs: size " + std::to_string(n) + " exceeds the cap of " +
                           std::to_string(eig_size_cap));
    const DenseMatrix L = cholesky(M);
    DenseMatrix C = A;
    triangular_solve(L, C, true); // L^{-1} A
    C = C.transposed();
    triangular_solve(L, C, true); // L^{-1} A L^{-T}
    SymmetricEigen e = symmetric_eigen(C);
    triangular_solve(L, e.vectors, false);
    return {std::move(e.values), std::move(e.vectors)};
}

inline GeneralizedEigen dense_generalized_eigs(const CsrMatrix& A, const CsrMatrix& M)
{
    return dense_generalized_eigs(DenseMatrix::from_csr(A), DenseMatrix::from_csr(M));
}

/// A + B U B^T as a dense matrix.
inline DenseMatrix dense_a_plus_bubt(const ConstrainedSystem& sys)
{
    const DenseMatrix B = DenseMatrix::from_csr(*sys.B);
    return DenseMatrix::from_csr(*sys.A) + B * DenseMatrix::from_csr(*sys.U) * B.transposed();
}

struct ContainmentReport {
    std::size_t violations = 0;
    double lambda_min = 0.0; // smallest nonzero eigenvalue of (A + B U B^T) u = lambda M u
    double lower = 0.0;      // 1 - 1 / (1 + lambda_min)
    double min_eig = 0.0;    // extreme eigenvalues of P^{-1} Q
    double max_eig = 0.0;
};

/// Spectrum of (A + BUB^T + M)^{-1} (A + BUB^T + M H H^T M) against
/// [1 - 1/(1 + lambda_min) - tol, 1 + tol]. Zero of (A + BUB^T, M) is decided
/// with the same relative threshold as the iterative path.
inline ContainmentReport spectrum_containment_check(const ConstrainedSystem& sys, const std::vector<Vector>& H,
                                                    double tol = 1e-8, double zero_threshold = 1e-8)
{
    if (H.empty())
        throw InvalidArgument("spectrum_containment_check: the harmonic basis is empty, the bound concerns "
                              "dim C0 > 0 only");
    const std::size_t N = sys.n();
    if (N > eig_size_cap)
        throw SizeCapError("spectrum_containment_check: size " + std::to_string(N) + " exceeds the cap of " +
                           std::to_string(eig_size_cap));
    const DenseMatrix K = dense_a_plus_bubt(sys);
    const DenseMatrix M = DenseMatrix::from_csr(*sys.M);

    ContainmentReport rep;
    const GeneralizedEigen ek = dense_generalized_eigs(K, M);
    const double top = std::max(std::abs(ek.values.front()), std::abs(ek.values.back()));
    rep.lambda_min = 0.0;
    for (double v : ek.values)
        if (v > zero_threshold * top) {
            rep.lambda_min = v;
            break;
        }
    rep.lower = 1.0 - 1.0 / (1.0 + rep.lambda_min);

    DenseMatrix MH(N, H.size());
    for (std::size_t j = 0; j < H.size(); ++j) {
        const Vector mh = spmv(*sys.M, H[j]);
        for (std::size_t i = 0; i < N; ++i)
            MH(i, j) = mh[i];
    }
    const DenseMatrix P = K + M;
    const DenseMatrix Q = K + MH * MH.transposed();
    const GeneralizedEigen e = dense_generalized_eigs(Q, P);
    rep.min_eig = e.values.front();
    rep.max_eig = e.values.back();
    for (double v : e.values)
        if (v < rep.lower - tol || v > 1.0 + tol)
            ++rep.violations;
    return rep;
}

} // namespace derham::oracle
