#pragma once

#include <algorithm>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "derham/constrained/harmonic.hpp"
#include "derham/constrained/kind.hpp"
#include "derham/constrained/operators.hpp"
#include "derham/constrained/residual.hpp"
#include "derham/constrained/system.hpp"
#include "derham/solvers/pcg.hpp"

namespace derham {

struct SolveOptions {
    /// Every stage before the last.
    PcgConfig inner{1e-11, 5000, true};
    /// The last stage; its stopping measure is the mixed residual.
    PcgConfig final_stage{1e-10, 5000, true};
    PreconditionerKind precond = PreconditionerKind::Ilu0;
    /// (alpha1, alpha2) for the two-alpha path; defaults to (rho, 2 rho) with
    /// rho = ||A||_inf / ||B U B^T||_inf.
    std::optional<std::pair<double, double>> alphas;
    /// Stop the last stage on the inconsistent residual instead (U = alpha I).
    bool inconsistent_monitor = false;
    HarmonicOptions harmonic{};
    /// Used by solve(): kind override and the topological dim C0 to compare against.
    std::optional<ProblemKind> kind;
    std::optional<std::size_t> predicted_dim_c0;
};

struct StageRecord {
    std::string name;
    IterationTrace trace;
    std::size_t iterations = 0;
    double residual = 0.0;
};

struct Solution {
    Vector u;
    /// B p; p itself is never formed.
    Vector Bp;
    Vector tilde_u;
    Vector u_g;
    std::size_t dim_c0 = 0;
    ProblemKind kind = ProblemKind::Dim0_General;
    std::vector<StageRecord> stages;
    double final_residual = 0.0;
    /// ||G - B^T u|| / ||G||; for an inconsistent G this estimates the
    /// inconsistency.
    double constraint_defect = 0.0;
    std::optional<std::pair<double, double>> alphas;
    std::vector<std::string> warnings;

    const StageRecord* stage(const std::string& name) const
    {
        for (const auto& s : stages)
            if (s.name == name)
                return &s;
        return nullptr;
    }
    const StageRecord& last_stage() const { return stages.back(); }
};

namespace detail {

inline PcgResult run_stage(std::vector<StageRecord>* log, const std::string& name, const OperatorExpr& op,
                           const Preconditioner& pc, std::span<const double> rhs, const PcgConfig& cfg,
                           const ConvergenceMeasure& measure = {})
{
    PcgResult r = pcg(op, pc, rhs, Vector{}, cfg, measure);
    if (!r.converged) {
        std::ostringstream msg;
        msg << std::scientific << std::setprecision(3) << "stage '" << name << "' did not converge: residual "
            << r.residual << " after " << r.iterations << " iterations (tolerance " << cfg.rel_tol << ")";
        throw DivergenceError(msg.str());
    }
    if (log)
        log->push_back({name, r.trace, r.iterations, r.residual});
    return r;
}

inline bool is_zero(std::span<const double> v)
{
    for (double x : v)
        if (x != 0.0)
            return false;
    return true;
}

/// A + B U B^T, plus M H H^T M when H is nonempty.
inline OperatorExpr augmented_operator(const ConstrainedSystem& sys, const HarmonicBasis& H)
{
    OperatorExpr K = op_A(sys) + op_BUBt(sys);
    if (!H.empty())
        K = K + harmonic_term(sys, H);
    return K;
}

inline Preconditioner augmented_preconditioner(SystemPreconditioners& precs, const HarmonicBasis& H)
{
    return H.empty() ? precs.get(1.0, 0.0) : precs.augmented();
}

} // namespace detail

struct HodgeSplit {
    Vector tilde_u;
    Vector Mf1; // A u~
    Vector Mf2; // B U B^T u~
    Vector Mf0; // M H H^T M u~
    StageRecord stage;
};

/// Solves (A + B U B^T [+ M H H^T M]) u~ = F and splits F = Mf0 + Mf1 + Mf2.
inline HodgeSplit hodge_split_rhs(const ConstrainedSystem& sys, const HarmonicBasis& H, SystemPreconditioners& precs,
                                  const PcgConfig& cfg)
{
    std::vector<StageRecord> log;
    const PcgResult r = detail::run_stage(&log, "tilde", detail::augmented_operator(sys, H),
                                          detail::augmented_preconditioner(precs, H), sys.F, cfg);
    HodgeSplit out;
    out.tilde_u = r.x;
    out.Mf1 = spmv(*sys.A, r.x);
    out.Mf2 = op_BUBt(sys).apply(r.x);
    out.Mf0 = H.empty() ? Vector(sys.n(), 0.0) : harmonic_term(sys, H).apply(r.x);
    out.stage = std::move(log.front());
    return out;
}

inline HodgeSplit hodge_split_rhs(const ConstrainedSystem& sys, const HarmonicBasis& H,
                                  PreconditionerKind kind = PreconditionerKind::Ilu0,
                                  const PcgConfig& cfg = {1e-11, 5000, true})
{
    SystemPreconditioners precs(sys, kind);
    return hodge_split_rhs(sys, H, precs, cfg);
}

/// u_g from (A + B U B^T [+ M H H^T M]) u_g = B U G. Zero when G = 0.
inline Vector lift_constraint(const ConstrainedSystem& sys, const HarmonicBasis& H, SystemPreconditioners& precs,
                              const PcgConfig& cfg, std::vector<StageRecord>* log = nullptr)
{
    if (detail::is_zero(sys.G))
        return Vector(sys.n(), 0.0);
    const Vector rhs = apply_BU(sys, sys.G);
    return detail::run_stage(log, "lift", detail::augmented_operator(sys, H),
                             detail::augmented_preconditioner(precs, H), rhs, cfg)
        .x;
}

inline Vector lift_constraint(const ConstrainedSystem& sys, const HarmonicBasis& H,
                              PreconditionerKind kind = PreconditionerKind::Ilu0,
                              const PcgConfig& cfg = {1e-11, 5000, true})
{
    SystemPreconditioners precs(sys, kind);
    return lift_constraint(sys, H, precs, cfg);
}

/// B p = B U B^T u~ - c M u_g.
inline Vector recover_bp(const ConstrainedSystem& sys, std::span<const double> tilde_u, std::span<const double> u_g)
{
    Vector bp = op_BUBt(sys).apply(tilde_u);
    if (sys.c != 0.0)
        blas::axpy(-sys.c, spmv(*sys.M, u_g), bp);
    return bp;
}

/// (rho, 2 rho) with rho = ||A||_inf / ||B U B^T||_inf.
inline std::pair<double, double> default_alphas(const ConstrainedSystem& sys)
{
    const double a = norm_inf(*sys.A);
    const double b = norm_inf(multiply(multiply(*sys.B, *sys.U), transpose(*sys.B)));
    const double rho = (a > 0.0 && b > 0.0) ? a / b : 1.0;
    return {rho, 2.0 * rho};
}

namespace detail {

inline Solution two_alpha(const ConstrainedSystem& sys, SystemPreconditioners& precs, const SolveOptions& opt)
{
    Solution sol;
    const auto [a1, a2] = opt.alphas.value_or(default_alphas(sys));
    if (!(a1 > 0.0) || !(a2 > 0.0) || a1 == a2)
        throw InvalidArgument("two-alpha path needs distinct positive alphas");
    sol.alphas = std::make_pair(a1, a2);
    const Vector bug = apply_BU(sys, sys.G);
    const OperatorExpr bubt = op_BUBt(sys);
    const OperatorExpr K1 = op_A(sys) + a1 * bubt;
    const OperatorExpr K2 = op_A(sys) + a2 * bubt;
    const Vector r1 = blas::lincomb(1.0, sys.F, a1, bug);
    const Vector r2 = blas::lincomb(1.0, sys.F, a2, bug);
    PcgIteration it1(K1, precs.get(a1, 0.0), r1, Vector{});
    PcgIteration it2(K2, precs.get(a2, 0.0), r2, Vector{});

    auto combine = [&](const Vector& u1, const Vector& u2, Vector& u, Vector& bp) {
        u = blas::lincomb(a1 / (a1 - a2), u1, -a2 / (a1 - a2), u2);
        const Vector u2nd = blas::lincomb(a1 * a2 / (a2 - a1), u1, -a1 * a2 / (a2 - a1), u2);
        bp = bubt.apply(u2nd);
    };
    auto measure = [&] {
        Vector u, bp;
        combine(it1.x(), it2.x(), u, bp);
        return opt.inconsistent_monitor ? inconsistent_residual(sys, u, bp) : mixed_residual(sys, u, bp);
    };

    const PcgConfig& cfg = opt.final_stage;
    StageRecord s1{"alpha1", {}, 0, 0.0}, s2{"alpha2", {}, 0, 0.0}, sc{"combined", {}, 0, 0.0};
    double m = measure();
    bool live1 = true, live2 = true;
    auto record = [&] {
        if (!cfg.record_trace)
            return;
        s1.trace.push(it1.relative_residual());
        s2.trace.push(it2.relative_residual());
        sc.trace.push(m);
    };
    record();
    std::size_t steps = 0;
    while (m > cfg.rel_tol && steps < cfg.max_iter && (live1 || live2)) {
        if (live1)
            live1 = it1.step();
        if (live2)
            live2 = it2.step();
        ++steps;
        m = measure();
        if (!std::isfinite(m))
            throw DivergenceError("stage 'combined' produced a non-finite residual");
        record();
    }
    if (m > cfg.rel_tol)
        throw DivergenceError("stage 'combined' did not converge: residual " + std::to_string(m) + " after " +
                              std::to_string(steps) + " iterations (tolerance " + std::to_string(cfg.rel_tol) + ")");
    s1.iterations = it1.iterations();
    s1.residual = it1.relative_residual();
    s2.iterations = it2.iterations();
    s2.residual = it2.relative_residual();
    sc.iterations = steps;
    sc.residual = m;
    sol.stages = {std::move(s1), std::move(s2), std::move(sc)};
    combine(it1.x(), it2.x(), sol.u, sol.Bp);
    sol.u_g.assign(sys.n(), 0.0);
    return sol;
}

} // namespace detail

/// Runs the staged equivalent problem of the given kind. H must be the
/// measured harmonic basis (empty when dim C0 = 0).
inline Solution solve_equivalent(const ConstrainedSystem& sys, ProblemKind kind, const HarmonicBasis& H,
                                 SystemPreconditioners& precs, const SolveOptions& opt = {})
{
    sys.validate();
    check_admissible(kind, H.dim(), sys.c);
    if (opt.inconsistent_monitor && !scalar_identity_factor(*sys.U))
        throw UnsupportedCase("the inconsistent-G pathway requires U = alpha I");

    Solution sol;
    if (kind == ProblemKind::Dim0_CZero_TwoAlpha) {
        sol = detail::two_alpha(sys, precs, opt);
    } else {
        const double c = sys.c;
        const bool light = kind == ProblemKind::Dim0_CPos || kind == ProblemKind::DimPos_CPos_Light;
        const bool two_stage = kind == ProblemKind::Dim0_CZero_TwoStage;

        if (!two_stage)
            sol.u_g = lift_constraint(sys, H, precs, opt.inner, &sol.stages);
        else
            sol.u_g.assign(sys.n(), 0.0);

        sol.tilde_u = detail::run_stage(&sol.stages, "tilde", detail::augmented_operator(sys, H),
                                        detail::augmented_preconditioner(precs, H), sys.F, opt.inner)
                          .x;
        sol.Bp = recover_bp(sys, sol.tilde_u, sol.u_g);

        // rhs = F - B U B^T u~ [+ B U G] + c M u_g; note F - Bp = F - BUB^T u~ + c M u_g.
        Vector rhs = blas::sub(sys.F, sol.Bp);
        OperatorExpr op = op_A(sys);
        Preconditioner pc;
        if (light) {
            op = op + c * op_M(sys);
            pc = precs.get(0.0, c);
        } else {
            blas::axpy(1.0, apply_BU(sys, sys.G), rhs);
            op = op + op_BUBt(sys);
            if (c != 0.0)
                op = op + c * op_M(sys);
            pc = precs.get(1.0, c);
        }
        const Vector Bp = sol.Bp;
        const bool inc = opt.inconsistent_monitor;
        const ConvergenceMeasure measure = [&sys, Bp, inc](const Vector& u) {
            return inc ? inconsistent_residual(sys, u, Bp) : mixed_residual(sys, u, Bp);
        };
        sol.u = detail::run_stage(&sol.stages, "final", op, pc, rhs, opt.final_stage, measure).x;
    }

    sol.kind = kind;
    sol.dim_c0 = H.dim();
    sol.final_residual =
        opt.inconsistent_monitor ? inconsistent_residual(sys, sol.u, sol.Bp) : mixed_residual(sys, sol.u, sol.Bp);
    sol.constraint_defect = constraint_defect(sys, sol.u);
    sol.warnings = precs.warnings();
    return sol;
}

inline Solution solve_equivalent(const ConstrainedSystem& sys, ProblemKind kind, const HarmonicBasis& H,
                                 const SolveOptions& opt = {})
{
    SystemPreconditioners precs(sys, opt.precond);
    return solve_equivalent(sys, kind, H, precs, opt);
}

/// harmonic_basis with the block sized from the predicted dim C0 (plus two).
inline HarmonicBasis measure_harmonic(const ConstrainedSystem& sys, std::optional<std::size_t> predicted,
                                      HarmonicOptions opt, SystemPreconditioners& precs)
{
    if (predicted)
        opt.lobpcg.block_size = *predicted + 2;
    else
        opt.lobpcg.block_size = std::max<std::size_t>(opt.lobpcg.block_size, 2);
    return harmonic_basis(sys, opt, precs);
}

/// Measures dim C0, picks the kind (or uses the override) and solves.
inline Solution solve(const ConstrainedSystem& sys, const SolveOptions& opt = {})
{
    sys.validate();
    SystemPreconditioners precs(sys, opt.precond);
    const HarmonicBasis H = measure_harmonic(sys, opt.predicted_dim_c0, opt.harmonic, precs);
    const ProblemKind kind = opt.kind.value_or(auto_select_kind(H.dim(), sys.c));
    Solution sol = solve_equivalent(sys, kind, H, precs, opt);
    if (opt.predicted_dim_c0 && *opt.predicted_dim_c0 != H.dim())
        sol.warnings.push_back("measured dim C0 = " + std::to_string(H.dim()) + " differs from the topological " +
                               "prediction " + std::to_string(*opt.predicted_dim_c0));
    return sol;
}

} // namespace derham
