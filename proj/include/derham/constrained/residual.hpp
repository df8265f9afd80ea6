#pragma once

#include <optional>

#include "derham/constrained/system.hpp"

namespace derham {

/// ||F - Bp - (A + cM) u||
inline double momentum_residual_norm(const ConstrainedSystem& sys, std::span<const double> u,
                                     std::span<const double> Bp)
{
    Vector r = blas::sub(sys.F, Bp);
    blas::axpy(-1.0, spmv(*sys.A, u), r);
    if (sys.c != 0.0)
        blas::axpy(-sys.c, spmv(*sys.M, u), r);
    return blas::norm2(r);
}

/// (||F - Bp - (A + cM) u|| + ||G - B^T u||) / (||F|| + ||G||)
inline double mixed_residual(const ConstrainedSystem& sys, std::span<const double> u, std::span<const double> Bp)
{
    require_size(u, sys.n(), "mixed_residual u");
    require_size(Bp, sys.n(), "mixed_residual Bp");
    const double num = momentum_residual_norm(sys, u, Bp) + blas::norm2(blas::sub(sys.G, spmv_t(*sys.B, u)));
    const double den = blas::norm2(sys.F) + blas::norm2(sys.G);
    return den > 0.0 ? num / den : num;
}

/// (||F - Bp - (A + cM) u|| + alpha ||B G - B B^T u||) / (||F|| + ||G||), for
/// U = alpha I. alpha defaults to the factor read off U; a given alpha must
/// agree with it.
inline double inconsistent_residual(const ConstrainedSystem& sys, std::span<const double> u,
                                    std::span<const double> Bp, std::optional<double> alpha = std::nullopt)
{
    const auto a = scalar_identity_factor(*sys.U);
    if (!a)
        throw UnsupportedCase("inconsistent_residual: U is not a scalar multiple of the identity");
    if (alpha && std::abs(*alpha - *a) > 1e-12 * std::abs(*a))
        throw UnsupportedCase("inconsistent_residual: alpha does not match U = alpha I");
    require_size(u, sys.n(), "inconsistent_residual u");
    require_size(Bp, sys.n(), "inconsistent_residual Bp");
    const Vector d = blas::sub(sys.G, spmv_t(*sys.B, u));
    const double num = momentum_residual_norm(sys, u, Bp) + *a * blas::norm2(spmv(*sys.B, d));
    const double den = blas::norm2(sys.F) + blas::norm2(sys.G);
    return den > 0.0 ? num / den : num;
}

/// ||G - B^T u|| / ||G||, or the absolute value when G = 0.
inline double constraint_defect(const ConstrainedSystem& sys, std::span<const double> u)
{
    const double d = blas::norm2(blas::sub(sys.G, spmv_t(*sys.B, u)));
    const double g = blas::norm2(sys.G);
    return g > 0.0 ? d / g : d;
}

} // namespace derham
