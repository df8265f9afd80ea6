#include <gtest/gtest.h>

#include <cmath>

#include "derham/constrained/equivalent.hpp"
#include "derham/constrained/penalty.hpp"
#include "derham/fem/assemble.hpp"
#include "derham/fem/rhs.hpp"
#include "derham/oracle/oracle.hpp"
#include "derham/random.hpp"

using namespace derham;

namespace {

std::shared_ptr<const CsrMatrix> share(CsrMatrix A) { return std::make_shared<const CsrMatrix>(std::move(A)); }

fem::AssembledProblem with_rhs(fem::AssembledProblem p, fem::GMode g = fem::GMode::Consistent, double rel = 1e-2,
                               std::uint64_t seed = 7)
{
    fem::apply_rhs(p.system, fem::make_rhs(p, seed, fem::GSpec{g, rel}));
    return p;
}

fem::AssembledProblem example(int number, std::size_t n, fem::GMode g = fem::GMode::Consistent)
{
    return with_rhs(fem::assemble_example(number, n), g);
}

/// Example 1's mesh and operators with c = 1.
fem::AssembledProblem cube_dirichlet_c1(std::size_t n)
{
    return fem::assemble_system(fem::build_mesh({fem::DomainShape::Cube, n}), fem::ProblemType::Maxwell,
                                fem::BoundaryCondition::Dirichlet, 1.0);
}

HarmonicBasis measured(const ConstrainedSystem& s, std::size_t block = 3)
{
    return harmonic_basis(s, HarmonicOptions{LobpcgConfig{.block_size = block}});
}

Solution solve_kind(const ConstrainedSystem& s, ProblemKind k)
{
    SolveOptions opt;
    opt.kind = k;
    return solve(s, opt);
}

double m_norm(const ConstrainedSystem& s, const Vector& v) { return std::sqrt(blas::dot(v, spmv(*s.M, v))); }

} // namespace

TEST(ComplexProperty, ViolationIsReported)
{
    ConstrainedSystem s;
    s.A = share(CsrMatrix::identity(1));
    s.M = share(CsrMatrix::identity(1));
    s.B = share(CsrMatrix::identity(1));
    s.U = share(CsrMatrix::identity(1));
    EXPECT_NEAR(verify_complex_property(s, 5), 1.0, 1e-12);
}

TEST(ComplexProperty, AssembledSystemsSatisfyIt)
{
    for (int ex = 1; ex <= 5; ++ex) {
        const auto p = fem::assemble_example(ex, 4);
        EXPECT_LE(verify_complex_property(p.system), ex == 2 ? 1e-10 : 1e-9) << "example " << ex;
    }
}

TEST(Harmonic, MeasuredDimensions)
{
    EXPECT_EQ(measured(fem::assemble_example(1, 4).system).dim(), 0u);
    EXPECT_EQ(measured(fem::assemble_example(3, 4).system).dim(), 1u);
    EXPECT_EQ(measured(fem::assemble_example(5, 4).system).dim(), 1u);
}

TEST(Harmonic, BasisIsMOrthonormalNullSpace)
{
    for (int ex : {3, 5}) {
        const ConstrainedSystem s = fem::assemble_example(ex, 8).system;
        const HarmonicBasis H = measured(s);
        ASSERT_EQ(H.dim(), 1u);
        const Vector& h = H[0];
        EXPECT_NEAR(blas::dot(h, spmv(*s.M, h)), 1.0, 1e-10);
        const Vector Kh = (op_A(s) + op_BUBt(s)).apply(h);
        EXPECT_LE(blas::norm2(Kh), 1e-8 * blas::norm2(spmv(*s.M, h))) << "example " << ex;
    }
}

TEST(Harmonic, TooSmallBlockIsEnlarged)
{
    // Three exact zero modes, found with an initial block of one.
    const std::size_t N = 12;
    Vector d(N);
    for (std::size_t i = 0; i < N; ++i)
        d[i] = i < 3 ? 0.0 : static_cast<double>(i);
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < N; ++i)
        t.push_back({i, i, d[i]});
    ConstrainedSystem s;
    s.A = share(CsrMatrix::from_triplets(t, N, N));
    s.M = share(CsrMatrix::identity(N));
    s.B = share(CsrMatrix::from_triplets(std::vector<Triplet>{}, N, 1));
    s.U = share(CsrMatrix::identity(1));
    s.F.assign(N, 0.0);
    s.G.assign(1, 0.0);
    HarmonicOptions opt;
    opt.lobpcg.block_size = 1;
    const HarmonicBasis H = harmonic_basis(s, opt, PreconditionerKind::Jacobi);
    EXPECT_EQ(H.dim(), 3u);
    EXPECT_GT(H.block_size, 3u);
    opt.max_retries = 0;
    EXPECT_THROW(harmonic_basis(s, opt, PreconditionerKind::Jacobi), DivergenceError);
}

TEST(HodgeSplit, PureGradientLoadLandsInSecondComponent)
{
    auto p = fem::assemble_example(1, 4);
    ConstrainedSystem& s = p.system;
    s.F = apply_BU(s, random_vector(s.m(), 3));
    const HodgeSplit h = hodge_split_rhs(s, HarmonicBasis{});
    const double f = blas::norm2(s.F);
    EXPECT_LE(blas::norm2(h.Mf1), 1e-9 * f);
    EXPECT_EQ(blas::norm2(h.Mf0), 0.0);
    EXPECT_LE(blas::norm2(blas::sub(h.Mf2, s.F)), 1e-9 * f);
}

TEST(HodgeSplit, HarmonicLoadLandsInZeroComponent)
{
    auto p = fem::assemble_example(3, 4);
    ConstrainedSystem& s = p.system;
    const HarmonicBasis H = measured(s);
    ASSERT_EQ(H.dim(), 1u);
    s.F = spmv(*s.M, H[0]);
    const HodgeSplit h = hodge_split_rhs(s, H);
    const double f = blas::norm2(s.F);
    EXPECT_LE(blas::norm2(blas::sub(h.Mf0, s.F)), 1e-9 * f);
    EXPECT_LE(blas::norm2(h.Mf1), 1e-9 * f);
    EXPECT_LE(blas::norm2(h.Mf2), 1e-9 * f);
}

TEST(HodgeSplit, ComponentsReconstructLoad)
{
    for (int ex : {1, 3}) {
        const auto p = example(ex, 4);
        const ConstrainedSystem& s = p.system;
        const HarmonicBasis H = measured(s);
        const HodgeSplit h = hodge_split_rhs(s, H);
        const Vector sum = blas::add(blas::add(h.Mf0, h.Mf1), h.Mf2);
        EXPECT_LE(blas::relative_diff(sum, s.F), 1e-9) << "example " << ex;
        EXPECT_EQ(h.stage.name, "tilde");
    }
}

TEST(Lift, ZeroConstraintGivesZero)
{
    const auto p = example(1, 4, fem::GMode::Zero);
    const Vector ug = lift_constraint(p.system, HarmonicBasis{});
    EXPECT_EQ(blas::norm2(ug), 0.0);
}

TEST(Lift, ConsistentConstraintIsRecovered)
{
    const auto p = example(1, 4);
    const ConstrainedSystem& s = p.system;
    const Vector ug = lift_constraint(s, HarmonicBasis{});
    EXPECT_LE(blas::norm2(blas::sub(spmv_t(*s.B, ug), s.G)) / blas::norm2(s.G), 1e-8);
}

TEST(Lift, InconsistentConstraintRecoversConsistentPart)
{
    auto p = fem::assemble_example(2, 4);
    const fem::Rhs r = fem::make_rhs(p, 7, fem::GSpec{fem::GMode::Inconsistent, 1e-2});
    fem::apply_rhs(p.system, r);
    const ConstrainedSystem& s = p.system;
    const Vector z = blas::sub(s.G, spmv_t(*s.B, r.w));
    ASSERT_GT(blas::norm2(z), 0.0);
    const Vector ug = lift_constraint(s, HarmonicBasis{});
    const Vector d = blas::sub(spmv_t(*s.B, ug), s.G);
    EXPECT_NEAR(blas::norm2(d), blas::norm2(z), 1e-6 * blas::norm2(z));
    EXPECT_LE(blas::norm2(spmv(*s.B, d)), 1e-8 * blas::norm2(spmv(*s.B, s.G)));
}

TEST(Lift, MemberOfSecondComponent)
{
    for (int ex : {1, 3, 5}) {
        const auto p = example(ex, 4);
        const ConstrainedSystem& s = p.system;
        const HarmonicBasis H = measured(s);
        const Vector ug = lift_constraint(s, H);
        EXPECT_LE(blas::norm2(spmv(*s.A, ug)), 1e-7 * norm_inf(*s.A) * blas::norm2(ug)) << "example " << ex;
        for (std::size_t j = 0; j < H.dim(); ++j)
            EXPECT_LE(std::abs(blas::dot(H[j], spmv(*s.M, ug))), 1e-7 * m_norm(s, ug)) << "example " << ex;
    }
}

TEST(Kind, AutoSelection)
{
    EXPECT_EQ(auto_select_kind(0, 1.0), ProblemKind::Dim0_CPos);
    EXPECT_EQ(auto_select_kind(0, 0.0), ProblemKind::Dim0_CZero_TwoStage);
    EXPECT_EQ(auto_select_kind(1, 1.0), ProblemKind::DimPos_CPos_Full);
    try {
        auto_select_kind(1, 0.0);
        FAIL() << "expected an unsupported case";
    } catch (const UnsupportedCase& e) {
        EXPECT_NE(std::string(e.what()).find("no solution or no unique solution"), std::string::npos);
    }
}

TEST(Kind, AdmissibilityAndNames)
{
    EXPECT_NO_THROW(check_admissible(ProblemKind::Dim0_General, 0, 0.0));
    EXPECT_NO_THROW(check_admissible(ProblemKind::Dim0_CZero_TwoAlpha, 0, 0.0));
    EXPECT_NO_THROW(check_admissible(ProblemKind::DimPos_CPos_Light, 2, 0.5));
    EXPECT_THROW(check_admissible(ProblemKind::Dim0_CPos, 0, 0.0), InvalidArgument);
    EXPECT_THROW(check_admissible(ProblemKind::Dim0_CZero_TwoStage, 0, 1.0), InvalidArgument);
    EXPECT_THROW(check_admissible(ProblemKind::DimPos_CPos_Full, 0, 1.0), InvalidArgument);
    EXPECT_THROW(check_admissible(ProblemKind::Dim0_General, 1, 1.0), InvalidArgument);
    EXPECT_THROW(check_admissible(ProblemKind::DimPos_CPos_Full, 1, 0.0), UnsupportedCase);
    for (ProblemKind k : {ProblemKind::Dim0_General, ProblemKind::Dim0_CPos, ProblemKind::Dim0_CZero_TwoStage,
                          ProblemKind::Dim0_CZero_TwoAlpha, ProblemKind::DimPos_CPos_Full,
                          ProblemKind::DimPos_CPos_Light})
        EXPECT_EQ(parse_problem_kind(to_string(k)), k);
    EXPECT_THROW(parse_problem_kind("dim0"), InvalidArgument);
}

TEST(SolveEquivalent, InadmissibleKindRejected)
{
    const auto p = example(3, 4);
    EXPECT_THROW(solve_kind(p.system, ProblemKind::Dim0_CPos), InvalidArgument);
}

TEST(SolveEquivalent, ManufacturedCurlLoadMatchesKkt)
{
    // F = A v lies in M C1; with G = 0 the multiplier term vanishes.
    auto p = cube_dirichlet_c1(4);
    ConstrainedSystem& s = p.system;
    s.F = spmv(*s.A, random_vector(s.n(), 11));
    s.G.assign(s.m(), 0.0);
    const Solution sol = solve(s);
    EXPECT_EQ(sol.kind, ProblemKind::Dim0_CPos);
    const oracle::KktSolution k = oracle::dense_kkt_solve(s);
    EXPECT_LE(blas::relative_diff(sol.u, k.u), 1e-8);
    EXPECT_LE(blas::norm2(sol.Bp), 1e-8 * blas::norm2(s.F));
    Vector r = spmv(*s.A, sol.u);
    blas::axpy(s.c, spmv(*s.M, sol.u), r);
    EXPECT_LE(blas::relative_diff(r, s.F), 1e-8);
}

TEST(SolveEquivalent, Example1MatchesKkt)
{
    const auto p = example(1, 4);
    const ConstrainedSystem& s = p.system;
    const Solution sol = solve(s);
    const oracle::KktSolution k = oracle::dense_kkt_solve(s);
    EXPECT_LE(blas::relative_diff(sol.u, k.u), 1e-8);
    EXPECT_LE(blas::relative_diff(sol.Bp, spmv(*s.B, k.p)), 1e-8);
    EXPECT_LE(momentum_residual_norm(s, sol.u, sol.Bp) / blas::norm2(s.F), 1e-9);
    EXPECT_LE(sol.final_residual, 1e-10);
    ASSERT_FALSE(sol.stages.empty());
    EXPECT_EQ(sol.last_stage().name, "final");
}

TEST(SolveEquivalent, TwoAlphaAgreesWithTwoStage)
{
    const auto p = example(4, 4);
    const Solution a = solve_kind(p.system, ProblemKind::Dim0_CZero_TwoAlpha);
    const Solution b = solve_kind(p.system, ProblemKind::Dim0_CZero_TwoStage);
    EXPECT_LE(blas::relative_diff(a.u, b.u), 1e-8);
    EXPECT_LE(blas::relative_diff(a.Bp, b.Bp), 1e-7);
    ASSERT_TRUE(a.alphas.has_value());
    EXPECT_NE(a.stage("alpha1"), nullptr);
    EXPECT_NE(a.stage("alpha2"), nullptr);
    EXPECT_NE(a.stage("combined"), nullptr);
}

TEST(SolveEquivalent, TwoAlphaExplicitAlphas)
{
    const auto p = example(1, 4);
    SolveOptions opt;
    opt.kind = ProblemKind::Dim0_CZero_TwoAlpha;
    opt.alphas = std::pair{3.0, 5.0};
    const Solution a = solve(p.system, opt);
    const Solution b = solve_kind(p.system, ProblemKind::Dim0_CZero_TwoStage);
    EXPECT_EQ(a.alphas->first, 3.0);
    EXPECT_LE(blas::relative_diff(a.u, b.u), 1e-8);
    opt.alphas = std::pair{2.0, 2.0};
    EXPECT_THROW(solve(p.system, opt), InvalidArgument);
}

TEST(SolveEquivalent, ConstraintSatisfiedOnEveryPath)
{
    struct Case {
        fem::AssembledProblem p;
        ProblemKind kind;
    };
    std::vector<Case> cases;
    cases.push_back({example(1, 4), ProblemKind::Dim0_CZero_TwoStage});
    cases.push_back({example(1, 4), ProblemKind::Dim0_CZero_TwoAlpha});
    cases.push_back({example(1, 4), ProblemKind::Dim0_General});
    cases.push_back({with_rhs(cube_dirichlet_c1(4)), ProblemKind::Dim0_CPos});
    cases.push_back({with_rhs(cube_dirichlet_c1(4)), ProblemKind::Dim0_General});
    cases.push_back({example(3, 8), ProblemKind::DimPos_CPos_Full});
    cases.push_back({example(3, 8), ProblemKind::DimPos_CPos_Light});
    cases.push_back({example(5, 8), ProblemKind::DimPos_CPos_Full});
    cases.push_back({example(5, 8), ProblemKind::DimPos_CPos_Light});
    cases.push_back({example(4, 8), ProblemKind::Dim0_CZero_TwoStage});
    for (const Case& c : cases) {
        const Solution sol = solve_kind(c.p.system, c.kind);
        const double g = blas::norm2(c.p.system.G);
        const double d = blas::norm2(blas::sub(c.p.system.G, spmv_t(*c.p.system.B, sol.u)));
        EXPECT_LE(d / (g + 1e-300), 1e-8) << to_string(c.kind);
        EXPECT_LE(sol.final_residual, 1e-10) << to_string(c.kind);
    }
}

TEST(SolveEquivalent, GeneralAndLightDim0PathsAgree)
{
    const auto p = with_rhs(cube_dirichlet_c1(4));
    const Solution a = solve_kind(p.system, ProblemKind::Dim0_General);
    const Solution b = solve_kind(p.system, ProblemKind::Dim0_CPos);
    EXPECT_LE(blas::relative_diff(a.u, b.u), 1e-8);
}

TEST(SolveEquivalent, FullAndLightPathsAgree)
{
    for (int ex : {3, 5}) {
        const auto p = example(ex, 8);
        const Solution a = solve_kind(p.system, ProblemKind::DimPos_CPos_Full);
        const Solution b = solve_kind(p.system, ProblemKind::DimPos_CPos_Light);
        EXPECT_LE(blas::relative_diff(a.u, b.u), 1e-8) << "example " << ex;
        EXPECT_EQ(a.dim_c0, 1u);
    }
}

TEST(SolveEquivalent, LinearInLoad)
{
    auto p = example(3, 4);
    const Solution a = solve(p.system);
    blas::scale(10.0, p.system.F);
    blas::scale(10.0, p.system.G);
    const Solution b = solve(p.system);
    Vector scaled = a.u;
    blas::scale(10.0, scaled);
    EXPECT_LE(blas::relative_diff(b.u, scaled), 1e-8);
}

TEST(SolveEquivalent, PredictionMismatchIsOnlyAWarning)
{
    const auto p = example(1, 4);
    SolveOptions opt;
    opt.predicted_dim_c0 = 1;
    const Solution sol = solve(p.system, opt);
    EXPECT_EQ(sol.dim_c0, 0u);
    ASSERT_FALSE(sol.warnings.empty());
    EXPECT_NE(sol.warnings.back().find("prediction"), std::string::npos);
}

TEST(SolveEquivalent, DivergenceNamesStage)
{
    const auto p = example(1, 4);
    SolveOptions opt;
    opt.final_stage.max_iter = 2;
    try {
        solve(p.system, opt);
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_NE(std::string(e.what()).find("stage 'final'"), std::string::npos) << e.what();
    }
}

TEST(SolveEquivalent, DimensionPositiveWithoutShiftUnsupported)
{
    auto p = example(3, 4);
    p.system.c = 0.0;
    EXPECT_THROW(solve(p.system), UnsupportedCase);
}

TEST(RecoverBp, ZeroLiftLeavesProjection)
{
    const auto p = example(3, 4);
    const ConstrainedSystem& s = p.system;
    const Vector t = random_vector(s.n(), 2);
    const Vector bp = recover_bp(s, t, Vector(s.n(), 0.0));
    EXPECT_LE(blas::relative_diff(bp, op_BUBt(s).apply(t)), 1e-15);
}

TEST(RecoverBp, NoShiftIgnoresLift)
{
    const auto p = example(1, 4);
    const ConstrainedSystem& s = p.system;
    const Vector t = random_vector(s.n(), 2);
    EXPECT_EQ(recover_bp(s, t, random_vector(s.n(), 5)), recover_bp(s, t, Vector(s.n(), 0.0)));
}

TEST(Residual, MixedResidualBasics)
{
    const auto p = example(1, 4, fem::GMode::Zero);
    const ConstrainedSystem& s = p.system;
    const Vector zero(s.n(), 0.0);
    EXPECT_DOUBLE_EQ(mixed_residual(s, zero, zero), 1.0);

    const auto q = example(1, 4);
    const oracle::KktSolution k = oracle::dense_kkt_solve(q.system);
    const Vector bp = spmv(*q.system.B, k.p);
    EXPECT_LE(mixed_residual(q.system, k.u, bp), 1e-10);
    EXPECT_LE(inconsistent_residual(q.system, k.u, bp), 1e-10);

    // Perturbing u moves the momentum term by at most ||A + cM|| ||delta||.
    const Vector delta = random_vector(q.system.n(), 4);
    const Vector u2 = blas::add(k.u, delta);
    const double den = blas::norm2(q.system.F) + blas::norm2(q.system.G);
    const double lip = norm_inf(*q.system.A) * blas::norm2(delta);
    EXPECT_LE(momentum_residual_norm(q.system, u2, bp) / den, mixed_residual(q.system, k.u, bp) + lip / den);
}

TEST(Residual, InconsistentResidualNeedsScalarWeight)
{
    auto p = example(1, 4);
    const Vector zero(p.system.n(), 0.0);
    EXPECT_THROW(inconsistent_residual(p.system, zero, zero, 1.0), UnsupportedCase);
    Vector d(p.system.m(), 1.0);
    d[0] = 2.0;
    p.system.U = share(CsrMatrix::identity(p.system.m()));
    EXPECT_NO_THROW(inconsistent_residual(p.system, zero, zero));
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < d.size(); ++i)
        t.push_back({i, i, d[i]});
    p.system.U = share(CsrMatrix::from_triplets(t, d.size(), d.size()));
    EXPECT_THROW(inconsistent_residual(p.system, zero, zero), UnsupportedCase);
}

TEST(Residual, PureKernelConstraintIsInvisibleToInconsistentResidual)
{
    auto p = example(2, 4, fem::GMode::Zero);
    ConstrainedSystem& s = p.system;
    const Solution sol = solve(s);
    s.G.assign(s.m(), 1.0); // constants are in Ker B
    const double den = blas::norm2(s.F) + blas::norm2(s.G);
    EXPECT_LE(inconsistent_residual(s, sol.u, sol.Bp), 1e-9);
    EXPECT_NEAR(mixed_residual(s, sol.u, sol.Bp), blas::norm2(s.G) / den, 1e-8);
}

TEST(Residual, InjectedInconsistencyConvergesOnlyUnderInconsistentMonitor)
{
    const auto p = example(2, 8, fem::GMode::Inconsistent);
    const ConstrainedSystem& s = p.system;
    SolveOptions opt;
    opt.inconsistent_monitor = true;
    const Solution sol = solve(s, opt);
    EXPECT_LE(sol.final_residual, 1e-9);
    const double mixed = mixed_residual(s, sol.u, sol.Bp);
    const double den = blas::norm2(s.F) + blas::norm2(s.G);
    // ||G - B^T u|| is the injected Ker B part, about 1e-2 of the consistent G.
    EXPECT_GT(mixed, 0.5e-2 * blas::norm2(s.G) / den);
    EXPECT_LT(mixed, 2e-2 * blas::norm2(s.G) / den);
    EXPECT_NEAR(sol.constraint_defect, 1e-2, 1e-4);
}

TEST(Penalty, NonPositiveEpsilonRejected)
{
    const auto p = example(1, 2);
    EXPECT_THROW(penalty_solve(p.system, 0.0), InvalidArgument);
    EXPECT_THROW(penalty_solve(p.system, -1.0), InvalidArgument);
    EXPECT_THROW(penalty_solve(p.system, std::numeric_limits<double>::infinity()), InvalidArgument);
}

TEST(Penalty, ErrorDecaysLikeInverseEpsilon)
{
    const auto p = example(1, 4);
    const Vector exact = oracle::dense_kkt_solve(p.system).u;
    PcgConfig cfg{1e-12, 20000, false};
    const double e2 = blas::relative_diff(penalty_solve(p.system, 1e2, PreconditionerKind::Jacobi, cfg).x, exact);
    const double e4 = blas::relative_diff(penalty_solve(p.system, 1e4, PreconditionerKind::Jacobi, cfg).x, exact);
    const double slope = std::log10(e2 / e4) / 2.0;
    EXPECT_NEAR(slope, 1.0, 0.1);
}

TEST(Penalty, SweepIsVShaped)
{
    const auto p = example(1, 4);
    const Vector exact = oracle::dense_kkt_solve(p.system).u;
    PcgConfig cfg{1e-10, 20000, false};
    std::vector<double> err;
    for (double eps : {1e2, 1e4, 1e6, 1e8, 1e10, 1e12})
        err.push_back(blas::relative_diff(penalty_solve(p.system, eps, PreconditionerKind::Jacobi, cfg).x, exact));
    const auto best = std::min_element(err.begin(), err.end());
    EXPECT_NE(best, err.begin());
    EXPECT_NE(best, err.end() - 1);
    EXPECT_GT(err.front(), 10.0 * *best);
    EXPECT_GT(err.back(), 10.0 * *best);
}
