#pragma once

#include <cstdint>
#include <string>

#include "derham/constrained/system.hpp"
#include "derham/fem/assemble.hpp"
#include "derham/random.hpp"
#include "derham/solvers/pcg.hpp"

namespace derham::fem {

enum class GMode { Zero, Consistent, Inconsistent };

struct GSpec {
    GMode mode = GMode::Consistent;
    /// ||z|| / ||B^T w|| of the injected Ker B component (Inconsistent only).
    double rel = 1e-2;
};

inline const char* to_string(GMode m)
{
    switch (m) {
    case GMode::Zero: return "zero";
    case GMode::Consistent: return "consistent";
    case GMode::Inconsistent: return "inconsistent";
    }
    return "?";
}

inline GMode parse_g_mode(const std::string& s)
{
    if (s == "zero")
        return GMode::Zero;
    if (s == "consistent")
        return GMode::Consistent;
    if (s == "inconsistent")
        return GMode::Inconsistent;
    throw InvalidArgument("unknown g mode '" + s + "' (expected zero, consistent or inconsistent)");
}

struct Rhs {
    Vector F;
    Vector G;
    Vector w; // G's consistent part is B^T w
};

namespace detail {

/// Component of `noise` orthogonal to Im B^T, i.e. in Ker B. The projection
/// onto Im B^T solves B B^T y = B noise by CG.
inline Vector kernel_component(const CsrMatrix& B, const Vector& noise)
{
    const auto Bp = std::make_shared<const CsrMatrix>(B);
    PcgConfig cfg;
    cfg.rel_tol = 1e-13;
    cfg.max_iter = 20 * (B.rows() + B.cols()) + 100;
    cfg.record_trace = false;
    const Vector rhs = spmv(B, noise);
    const PcgResult r = pcg(OperatorExpr::triple_product(Bp, OperatorExpr::identity(B.cols())),
                            Preconditioner::identity(B.rows()), rhs, Vector{}, cfg);
    return blas::sub(noise, spmv_t(B, r.x));
}

inline Vector finish_g(const Vector& consistent, Vector z, const GSpec& g)
{
    const double zn = blas::norm2(z);
    blas::scale(g.rel * blas::norm2(consistent) / zn, z);
    return blas::add(consistent, z);
}

} // namespace detail

/// F uniform in [-1, 1] from the seeded source; then w from the same stream
/// and G = B^T w, optionally plus a Ker B component of relative size g.rel.
/// For systems without mesh information the Ker B component comes from a
/// least-squares projection of random noise.
inline Rhs make_rhs(const ConstrainedSystem& sys, std::uint64_t seed, const GSpec& g)
{
    UniformSource rng(seed);
    Rhs out;
    out.F = rng.vector(sys.n());
    out.G.assign(sys.m(), 0.0);
    if (g.mode == GMode::Zero)
        return out;
    out.w = rng.vector(sys.n());
    out.G = spmv_t(*sys.B, out.w);
    if (g.mode == GMode::Inconsistent) {
        const Vector noise = rng.vector(sys.m());
        Vector z = detail::kernel_component(*sys.B, noise);
        if (!(blas::norm2(z) > 1e-8 * blas::norm2(noise)))
            throw InvalidArgument("make_rhs: Ker B is trivial, an inconsistent G cannot be constructed");
        out.G = detail::finish_g(out.G, std::move(z), g);
    }
    return out;
}

/// As above, with the Ker B component built from the complex structure:
/// constants for the Neumann Maxwell multiplier, gradients for grad-div.
inline Rhs make_rhs(const AssembledProblem& prob, std::uint64_t seed, const GSpec& g)
{
    if (g.mode != GMode::Inconsistent)
        return make_rhs(prob.system, seed, g);
    if (prob.problem == ProblemType::Maxwell && prob.bc == BoundaryCondition::Dirichlet)
        throw InvalidArgument("make_rhs: Ker B is trivial for Maxwell with Dirichlet conditions, an inconsistent G "
                              "cannot be constructed");
    UniformSource rng(seed);
    Rhs out;
    out.F = rng.vector(prob.system.n());
    out.w = rng.vector(prob.system.n());
    const Vector consistent = spmv_t(*prob.system.B, out.w);
    Vector z;
    if (prob.problem == ProblemType::Maxwell) {
        z.assign(prob.system.m(), 1.0);
    } else {
        // p lives on edges; Ker B = Ker Dcurl contains the gradients.
        const CsrMatrix Dg = grad_incidence(prob.mesh);
        const Vector s = rng.vector(Dg.cols());
        const Vector full = spmv(Dg, s);
        z.resize(prob.p_dofs.size());
        for (std::size_t i = 0; i < z.size(); ++i)
            z[i] = full[prob.p_dofs[i]];
    }
    out.G = detail::finish_g(consistent, std::move(z), g);
    return out;
}

inline void apply_rhs(ConstrainedSystem& sys, const Rhs& r)
{
    sys.F = r.F;
    sys.G = r.G;
}

} // namespace derham::fem
