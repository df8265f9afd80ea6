#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "derham/sparse/operator_expr.hpp"

namespace derham {

/// M-orthonormalize a block by modified Gram-Schmidt with one
/// re-orthogonalization pass. A vector whose M-norm after projection is below
/// drop_tol times its incoming M-norm is treated as dependent and discarded.
inline std::vector<Vector> m_orthonormalize(const OperatorExpr& M, std::vector<Vector> block, double drop_tol = 1e-10)
{
    std::vector<Vector> basis;
    std::vector<Vector> mbasis;
    basis.reserve(block.size());
    mbasis.reserve(block.size());
    for (auto& v : block) {
        require_size(v, M.size(), "m_orthonormalize");
        const double initial = std::sqrt(std::max(blas::dot(v, M.apply(v)), 0.0));
        if (!(initial > 0.0))
            continue;
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t j = 0; j < basis.size(); ++j)
                blas::axpy(-blas::dot(mbasis[j], v), basis[j], v);
        Vector mv = M.apply(v);
        const double norm = std::sqrt(std::max(blas::dot(v, mv), 0.0));
        if (!(norm > drop_tol * initial))
            continue;
        blas::scale(1.0 / norm, v);
        blas::scale(1.0 / norm, mv);
        basis.push_back(std::move(v));
        mbasis.push_back(std::move(mv));
    }
    return basis;
}

inline std::vector<Vector> m_orthonormalize(const CsrMatrix& M, std::vector<Vector> block, double drop_tol = 1e-10)
{
    return m_orthonormalize(OperatorExpr::matrix(M), std::move(block), drop_tol);
}

} // namespace derham
