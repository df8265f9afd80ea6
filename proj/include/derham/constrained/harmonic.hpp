#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "derham/constrained/operators.hpp"
#include "derham/constrained/system.hpp"
#include "derham/solvers/lobpcg.hpp"
#include "derham/sparse/orthonormalize.hpp"

namespace derham {

/// M-orthonormal basis of C0 = Ker A ∩ Ker B U B^T.
struct HarmonicBasis {
    std::shared_ptr<const std::vector<Vector>> columns = std::make_shared<const std::vector<Vector>>();
    /// Eigenvalues of the last eigensolver block, ascending.
    std::vector<double> block_eigenvalues;
    std::size_t block_size = 0;
    std::size_t lobpcg_iterations = 0;
    IterationTrace trace;

    std::size_t dim() const { return columns->size(); }
    bool empty() const { return columns->empty(); }
    const Vector& operator[](std::size_t j) const { return (*columns)[j]; }
};

struct HarmonicOptions {
    LobpcgConfig lobpcg{};
    double zero_threshold = 1e-8;
    int max_retries = 3;
};

/// Zero modes of (A + B U B^T) u = lambda M u, counted against
/// zero_threshold times the larger of the block's top eigenvalue and the
/// scale ||A + B U B^T||_inf / ||M||_inf (a block of only zero modes has no
/// scale of its own). When every returned mode is zero the block was too
/// small: it is enlarged and the solve repeated, at most max_retries times.
inline HarmonicBasis harmonic_basis(const ConstrainedSystem& sys, const HarmonicOptions& opt,
                                    SystemPreconditioners& precs)
{
    const OperatorExpr K = op_A(sys) + op_BUBt(sys);
    const OperatorExpr M = op_M(sys);
    const Preconditioner T = precs.augmented();
    LobpcgConfig cfg = opt.lobpcg;
    cfg.block_size = std::min(std::max<std::size_t>(cfg.block_size, 1), sys.n());
    const double scale =
        norm_inf(add(1.0, *sys.A, 1.0, multiply(multiply(*sys.B, *sys.U), transpose(*sys.B)))) / norm_inf(*sys.M);

    for (int attempt = 0;; ++attempt) {
        const LobpcgResult r = lobpcg(K, M, T, cfg);
        if (!r.converged)
            throw DivergenceError("harmonic_basis: eigensolver stopped after " + std::to_string(r.iterations) +
                                  " iterations with residual " + std::to_string(r.trace.last()));
        double ref = scale;
        for (double v : r.eigenvalues)
            ref = std::max(ref, std::abs(v));
        const std::size_t zeros = count_zero_modes(r.eigenvalues, opt.zero_threshold, ref);
        if (zeros == cfg.block_size && cfg.block_size < sys.n()) {
            if (attempt >= opt.max_retries)
                throw DivergenceError("harmonic_basis: all " + std::to_string(cfg.block_size) +
                                      " computed modes are zero after " + std::to_string(opt.max_retries) +
                                      " enlargements");
            cfg.block_size = std::min(2 * cfg.block_size + 2, sys.n());
            continue;
        }
        HarmonicBasis hb;
        std::vector<Vector> cols(r.vectors.begin(), r.vectors.begin() + static_cast<std::ptrdiff_t>(zeros));
        hb.columns = std::make_shared<const std::vector<Vector>>(m_orthonormalize(M, std::move(cols)));
        hb.block_eigenvalues = r.eigenvalues;
        hb.block_size = cfg.block_size;
        hb.lobpcg_iterations = r.iterations;
        hb.trace = r.trace;
        return hb;
    }
}

inline HarmonicBasis harmonic_basis(const ConstrainedSystem& sys, const HarmonicOptions& opt = {},
                                    PreconditionerKind kind = PreconditionerKind::Ilu0)
{
    SystemPreconditioners precs(sys, kind);
    return harmonic_basis(sys, opt, precs);
}

/// M H H^T M as a lazy operator, or nothing when H is empty.
inline OperatorExpr harmonic_term(const ConstrainedSystem& sys, const HarmonicBasis& H)
{
    if (H.empty())
        return {};
    return OperatorExpr::low_rank(sys.M, H.columns);
}

} // namespace derham
