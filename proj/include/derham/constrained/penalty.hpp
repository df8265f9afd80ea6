#pragma once

#include "derham/constrained/system.hpp"
#include "derham/solvers/pcg.hpp"

namespace derham {

/// (A + cM + eps B B^T) u = F + eps B G. Non-convergence, expected for large
/// eps, is reported through `converged` and the trace. Jacobi is the default:
/// ILU(0) pivots of the penalized matrix degrade quickly as eps grows.
inline PcgResult penalty_solve(const ConstrainedSystem& sys, double epsilon,
                               PreconditionerKind kind = PreconditionerKind::Jacobi,
                               const PcgConfig& cfg = {}, std::vector<std::string>* warnings = nullptr)
{
    sys.validate();
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw InvalidArgument("penalty_solve: epsilon must be positive and finite");
    const CsrMatrix BBt = multiply(*sys.B, transpose(*sys.B));
    CsrMatrix S = add(1.0, *sys.A, epsilon, BBt);
    if (sys.c != 0.0)
        S = add(1.0, S, sys.c, *sys.M);
    Vector rhs = sys.F;
    blas::axpy(epsilon, spmv(*sys.B, sys.G), rhs);
    const Preconditioner pc = make_preconditioner(kind, S, warnings);
    return pcg(OperatorExpr::matrix(std::make_shared<const CsrMatrix>(std::move(S))), pc, rhs, cfg);
}

} // namespace derham
