#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "derham/errors.hpp"
#include "derham/sparse/csr_matrix.hpp"

namespace derham {

/// Zero-fill incomplete LU on the pattern of the input. L is unit lower
/// triangular with its unit diagonal stored; Ut is upper triangular.
struct Ilu0Factors {
    CsrMatrix L;
    CsrMatrix Ut;

    std::size_t size() const noexcept { return L.rows(); }
};

inline Ilu0Factors ilu0_factorize(const CsrMatrix& A)
{
    if (A.rows() != A.cols())
        throw DimensionError("ilu0_factorize: matrix is " + std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
    const std::size_t n = A.rows();
    const auto rp = A.row_ptr();
    const auto ci = A.col_idx();
    std::vector<double> lu(A.values().begin(), A.values().end());
    std::vector<std::size_t> diag(n);
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> where(n, none);

    for (std::size_t i = 0; i < n; ++i) {
        diag[i] = none;
        double rowmax = 0.0;
        for (std::size_t p = rp[i]; p < rp[i + 1]; ++p) {
            where[ci[p]] = p;
            rowmax = std::max(rowmax, std::abs(lu[p]));
            if (ci[p] == i)
                diag[i] = p;
        }
        if (diag[i] == none)
            throw PivotBreakdown(i, "ilu0_factorize: missing diagonal entry in row " + std::to_string(i));

        for (std::size_t p = rp[i]; p < rp[i + 1] && ci[p] < i; ++p) {
            const std::size_t k = ci[p];
            lu[p] /= lu[diag[k]];
            const double lik = lu[p];
            for (std::size_t q = diag[k] + 1; q < rp[k + 1]; ++q)
                if (where[ci[q]] != none)
                    lu[where[ci[q]]] -= lik * lu[q];
        }

        const double pivot = lu[diag[i]];
        if (!std::isfinite(pivot) || std::abs(pivot) <= 1e-14 * rowmax)
            throw PivotBreakdown(i, "ilu0_factorize: zero pivot in row " + std::to_string(i));
        for (std::size_t p = rp[i]; p < rp[i + 1]; ++p)
            where[ci[p]] = none;
    }

    std::vector<Triplet> lt, ut;
    lt.reserve(A.nnz());
    ut.reserve(A.nnz());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = rp[i]; p < rp[i + 1]; ++p) {
            if (ci[p] < i)
                lt.push_back({i, ci[p], lu[p]});
            else
                ut.push_back({i, ci[p], lu[p]});
        }
        lt.push_back({i, i, 1.0});
    }
    return {CsrMatrix::from_triplets(lt, n, n), CsrMatrix::from_triplets(ut, n, n)};
}

/// Ut^{-1} L^{-1} r by forward and backward substitution.
inline Vector ilu0_apply(const Ilu0Factors& f, std::span<const double> r)
{
    const std::size_t n = f.size();
    require_size(r, n, "ilu0_apply");
    Vector y(r.begin(), r.end());
    {
        const auto rp = f.L.row_ptr();
        const auto ci = f.L.col_idx();
        const auto v = f.L.values();
        for (std::size_t i = 0; i < n; ++i) {
            double s = y[i];
            for (std::size_t p = rp[i]; p < rp[i + 1] && ci[p] < i; ++p)
                s -= v[p] * y[ci[p]];
            y[i] = s;
        }
    }
    {
        const auto rp = f.Ut.row_ptr();
        const auto ci = f.Ut.col_idx();
        const auto v = f.Ut.values();
        for (std::size_t i = n; i-- > 0;) {
            // The diagonal is the first stored entry of each Ut row.
            double s = y[i];
            for (std::size_t p = rp[i] + 1; p < rp[i + 1]; ++p)
                s -= v[p] * y[ci[p]];
            y[i] = s / v[rp[i]];
        }
    }
    return y;
}

} // namespace derham
