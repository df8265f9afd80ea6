#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "derham/io/matrix_market.hpp"
#include "derham/random.hpp"
#include "derham/sparse/csr_matrix.hpp"
#include "derham/sparse/operator_expr.hpp"
#include "derham/sparse/orthonormalize.hpp"

using namespace derham;

namespace {

using Dense = std::vector<std::vector<double>>;

Dense to_dense(const CsrMatrix& A)
{
    Dense d(A.rows(), std::vector<double>(A.cols(), 0.0));
    for (const auto& t : A.to_triplets())
        d[t.row][t.col] += t.value;
    return d;
}

Vector dense_mul(const Dense& d, const Vector& x)
{
    Vector y(d.size(), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j)
            y[i] += d[i][j] * x[j];
    return y;
}

CsrMatrix random_sparse(std::size_t r, std::size_t c, double density, std::uint64_t seed)
{
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0), coin(0.0, 1.0);
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            if (coin(g) < density)
                t.push_back({i, j, u(g)});
    return CsrMatrix::from_triplets(t, r, c);
}

CsrMatrix random_symmetric(std::size_t n, double density, std::uint64_t seed)
{
    const CsrMatrix R = random_sparse(n, n, density, seed);
    return add(1.0, R, 1.0, transpose(R));
}

} // namespace

TEST(CsrFromTriplets, Diagonal)
{
    const auto A = CsrMatrix::from_triplets({{0, 0, 1.0}, {1, 1, 2.0}}, 2, 2);
    EXPECT_EQ(A.nnz(), 2u);
    EXPECT_EQ(A.at(0, 0), 1.0);
    EXPECT_EQ(A.at(1, 1), 2.0);
    EXPECT_EQ(A.at(0, 1), 0.0);
}

TEST(CsrFromTriplets, DuplicatesSummed)
{
    const auto A = CsrMatrix::from_triplets({{0, 0, 1.0}, {0, 0, 1.0}}, 1, 1);
    EXPECT_EQ(A.nnz(), 1u);
    EXPECT_EQ(A.at(0, 0), 2.0);
}

TEST(CsrFromTriplets, UnsortedInputGivesSortedRows)
{
    const auto A = CsrMatrix::from_triplets({{1, 2, 3.0}, {0, 1, 1.0}, {1, 0, 2.0}, {0, 0, 4.0}}, 2, 3);
    const auto rp = A.row_ptr();
    const auto ci = A.col_idx();
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t p = rp[i] + 1; p < rp[i + 1]; ++p)
            EXPECT_LT(ci[p - 1], ci[p]);
    EXPECT_EQ(A.at(1, 2), 3.0);
}

TEST(CsrFromTriplets, OutOfRangeIsStructuralError)
{
    EXPECT_THROW(CsrMatrix::from_triplets({{2, 0, 1.0}}, 2, 2), StructuralError);
    EXPECT_THROW(CsrMatrix::from_triplets({{0, 5, 1.0}}, 2, 2), StructuralError);
}

TEST(CsrMatrix, ConstructorRejectsDuplicateColumns)
{
    EXPECT_THROW(CsrMatrix(1, 2, {0, 2}, {1, 1}, {1.0, 1.0}), StructuralError);
    EXPECT_THROW(CsrMatrix(1, 2, {0, 2}, {1, 0}, {1.0, 1.0}), StructuralError);
    EXPECT_THROW(CsrMatrix(2, 2, {1, 1, 1}, {0}, {1.0}), StructuralError);
}

TEST(CsrMatrix, TripletRoundTripIsIdempotent)
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const CsrMatrix A = random_sparse(17, 11, 0.3, seed);
        const CsrMatrix B = CsrMatrix::from_triplets(A.to_triplets(), A.rows(), A.cols());
        const CsrMatrix C = CsrMatrix::from_triplets(B.to_triplets(), B.rows(), B.cols());
        EXPECT_EQ(A, B);
        EXPECT_EQ(B, C);
    }
}

TEST(Spmv, IdentityAndDiagonal)
{
    const Vector x{1.5, -2.0, 3.25};
    EXPECT_EQ(spmv(CsrMatrix::identity(3), x), x);
    const Vector d{1.0, 2.0, 3.0};
    EXPECT_EQ(spmv(CsrMatrix::diagonal(d), Vector{1.0, 1.0, 1.0}), (Vector{1.0, 2.0, 3.0}));
}

TEST(Spmv, MatchesDenseReference)
{
    const CsrMatrix A = random_sparse(10, 10, 0.4, 7);
    const Vector x = random_vector(10, 3);
    const Dense d = to_dense(A);
    const Vector ref = dense_mul(d, x);
    const Vector y = spmv(A, x);
    const double bound = 1e-13 * norm_frobenius(A) * blas::norm2(x);
    for (std::size_t i = 0; i < 10; ++i)
        EXPECT_LE(std::abs(y[i] - ref[i]), bound);

    Dense dt(10, std::vector<double>(10));
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 0; j < 10; ++j)
            dt[i][j] = d[j][i];
    const Vector reft = dense_mul(dt, x);
    const Vector yt = spmv_t(A, x);
    for (std::size_t i = 0; i < 10; ++i)
        EXPECT_LE(std::abs(yt[i] - reft[i]), bound);
}

TEST(Spmv, DimensionMismatch)
{
    EXPECT_THROW(spmv(CsrMatrix::identity(3), Vector(2)), DimensionError);
    EXPECT_THROW(spmv_t(random_sparse(3, 4, 0.5, 1), Vector(4)), DimensionError);
}

TEST(SparseAlgebra, MultiplyAndAddMatchDense)
{
    const CsrMatrix A = random_sparse(6, 5, 0.5, 11);
    const CsrMatrix B = random_sparse(5, 7, 0.5, 12);
    const Dense da = to_dense(A), db = to_dense(B), dc = to_dense(multiply(A, B));
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 7; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 5; ++k)
                s += da[i][k] * db[k][j];
            EXPECT_NEAR(dc[i][j], s, 1e-14);
        }
    const CsrMatrix S = add(2.0, A, -1.0, random_sparse(6, 5, 0.5, 13));
    const Dense ds = to_dense(S), de = to_dense(random_sparse(6, 5, 0.5, 13));
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            EXPECT_NEAR(ds[i][j], 2.0 * da[i][j] - de[i][j], 1e-15);
}

TEST(SparseAlgebra, TransposeTwiceIsIdentity)
{
    const CsrMatrix A = random_sparse(9, 4, 0.4, 21);
    EXPECT_EQ(transpose(transpose(A)), A);
}

TEST(SparseAlgebra, Submatrix)
{
    const CsrMatrix A = random_sparse(6, 6, 0.6, 5);
    const std::vector<std::size_t> rows{1, 4}, cols{0, 2, 5};
    const CsrMatrix S = submatrix(A, rows, cols);
    ASSERT_EQ(S.rows(), 2u);
    ASSERT_EQ(S.cols(), 3u);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            EXPECT_EQ(S.at(i, j), A.at(rows[i], cols[j]));
}

TEST(OperatorExpr, SumOfMatrixAndScaledMass)
{
    const CsrMatrix A = random_symmetric(8, 0.4, 1);
    const CsrMatrix M = add(1.0, CsrMatrix::identity(8, 4.0), 0.1, random_symmetric(8, 0.3, 2));
    const double c = 2.5;
    const OperatorExpr e = OperatorExpr::matrix(A) + c * OperatorExpr::matrix(M);
    const Vector x = random_vector(8, 9);
    const Vector ref = blas::lincomb(1.0, spmv(A, x), c, spmv(M, x));
    EXPECT_LE(blas::relative_diff(e.apply(x), ref), 1e-15);
}

TEST(OperatorExpr, TripleProductWithScalarIdentity)
{
    const CsrMatrix B = random_sparse(9, 4, 0.5, 3);
    const double alpha = 3.5;
    const OperatorExpr e =
        OperatorExpr::triple_product(std::make_shared<const CsrMatrix>(B), OperatorExpr::identity(4, alpha));
    const Vector x = random_vector(9, 4);
    const Dense db = to_dense(B);
    Vector ref(9, 0.0);
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 9; ++j) {
            double bbt = 0.0;
            for (std::size_t k = 0; k < 4; ++k)
                bbt += db[i][k] * db[j][k];
            ref[i] += alpha * bbt * x[j];
        }
    EXPECT_LE(blas::relative_diff(e.apply(x), ref), 1e-12);
}

TEST(OperatorExpr, LowRankSingleColumn)
{
    const auto M = std::make_shared<const CsrMatrix>(
        add(1.0, CsrMatrix::identity(6, 3.0), 0.2, random_symmetric(6, 0.5, 8)));
    Vector h = random_vector(6, 5);
    blas::scale(1.0 / std::sqrt(blas::dot(h, spmv(*M, h))), h);
    const auto H = std::make_shared<const std::vector<Vector>>(std::vector<Vector>{h});
    const OperatorExpr e = OperatorExpr::low_rank(M, H);
    const Vector x = random_vector(6, 6);
    Vector ref = spmv(*M, h);
    blas::scale(blas::dot(h, spmv(*M, x)), ref);
    EXPECT_LE(blas::relative_diff(e.apply(x), ref), 1e-14);
    EXPECT_FALSE(e.is_sparse_representable());
    EXPECT_THROW(materialize(e), UnsupportedCase);
}

TEST(OperatorExpr, ShapeMismatchesAreRejected)
{
    const auto B = std::make_shared<const CsrMatrix>(random_sparse(5, 3, 0.5, 1));
    EXPECT_THROW(OperatorExpr::triple_product(B, OperatorExpr::identity(4)), DimensionError);
    EXPECT_THROW(OperatorExpr::identity(3) + OperatorExpr::identity(4), DimensionError);
    EXPECT_THROW(OperatorExpr::identity(3).apply(Vector(2)), DimensionError);
    EXPECT_THROW(OperatorExpr::matrix(random_sparse(4, 4, 0.6, 2)), InvalidArgument);
}

TEST(OperatorExpr, MaterializeMatchesApply)
{
    const auto A = std::make_shared<const CsrMatrix>(random_symmetric(7, 0.4, 31));
    const auto B = std::make_shared<const CsrMatrix>(random_sparse(7, 3, 0.5, 32));
    const OperatorExpr e = OperatorExpr::matrix(A) +
                           OperatorExpr::triple_product(B, OperatorExpr::diagonal({1.0, 2.0, 3.0})) +
                           0.5 * OperatorExpr::identity(7);
    const CsrMatrix m = materialize(e);
    const Vector x = random_vector(7, 33);
    EXPECT_LE(blas::relative_diff(spmv(m, x), e.apply(x)), 1e-14);
    EXPECT_TRUE(is_symmetric(m));
}

// Every combinator preserves symmetry and linearity; exercised on a tree that
// uses all of them.
TEST(OperatorExprProperty, SymmetryAndLinearity)
{
    const std::size_t n = 12;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto A = std::make_shared<const CsrMatrix>(random_symmetric(n, 0.3, seed));
        const auto M = std::make_shared<const CsrMatrix>(add(1.0, CsrMatrix::identity(n, 5.0), 0.3,
                                                             random_symmetric(n, 0.2, seed + 100)));
        const auto B = std::make_shared<const CsrMatrix>(random_sparse(n, 5, 0.4, seed + 200));
        const auto H = std::make_shared<const std::vector<Vector>>(
            std::vector<Vector>{random_vector(n, seed + 300), random_vector(n, seed + 400)});
        const OperatorExpr inner = OperatorExpr::diagonal(random_vector(5, seed + 500)) + OperatorExpr::identity(5, 2.0);
        const OperatorExpr e = OperatorExpr::matrix(A) + 0.7 * OperatorExpr::triple_product(B, inner) +
                               OperatorExpr::low_rank(M, H) + (-1.3) * OperatorExpr::matrix(M);

        UniformSource g(seed);
        const Vector x = g.vector(n), y = g.vector(n);
        const Vector ex = e.apply(x), ey = e.apply(y);
        const double scale = blas::norm2(x) * blas::norm2(ey) + blas::norm2(y) * blas::norm2(ex);
        EXPECT_LE(std::abs(blas::dot(x, ey) - blas::dot(y, ex)), 1e-12 * scale);

        const double a = g.next() * 3.0, b = g.next() * 3.0;
        const Vector lhs = e.apply(blas::lincomb(a, x, b, y));
        const Vector rhs = blas::lincomb(a, ex, b, ey);
        EXPECT_LE(blas::norm2(blas::sub(lhs, rhs)), 1e-12 * (std::abs(a) * blas::norm2(ex) + std::abs(b) * blas::norm2(ey)));
    }
}

TEST(MOrthonormalize, IdentityMetric)
{
    const auto out = m_orthonormalize(CsrMatrix::identity(2), {{2.0, 0.0}, {0.0, 3.0}});
    ASSERT_EQ(out.size(), 2u);
    EXPECT_NEAR(out[0][0], 1.0, 1e-15);
    EXPECT_NEAR(out[0][1], 0.0, 1e-15);
    EXPECT_NEAR(out[1][0], 0.0, 1e-15);
    EXPECT_NEAR(out[1][1], 1.0, 1e-15);
}

TEST(MOrthonormalize, DependentVectorDropped)
{
    const auto out = m_orthonormalize(CsrMatrix::identity(2), {{1.0, 0.0}, {1.0, 1e-16}});
    EXPECT_EQ(out.size(), 1u);
}

TEST(MOrthonormalize, GramIsIdentityAndSpanPreserved)
{
    const std::size_t n = 20;
    const CsrMatrix M = add(1.0, CsrMatrix::identity(n, 4.0), 0.5, random_symmetric(n, 0.15, 77));
    std::vector<Vector> block{random_vector(n, 1), random_vector(n, 2), random_vector(n, 3)};
    const auto out = m_orthonormalize(M, block);
    ASSERT_EQ(out.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            EXPECT_NEAR(blas::dot(out[i], spmv(M, out[j])), i == j ? 1.0 : 0.0, 1e-12);
    // Each input is reproduced by its M-projection onto the output span.
    for (const auto& v : block) {
        Vector proj(n, 0.0);
        for (const auto& q : out)
            blas::axpy(blas::dot(q, spmv(M, v)), q, proj);
        EXPECT_LE(blas::relative_diff(proj, v), 1e-12);
    }
}

TEST(MatrixMarket, GeneralRoundTrip)
{
    const CsrMatrix A = random_sparse(7, 5, 0.4, 17);
    std::stringstream ss;
    io::write_matrix_market(ss, A);
    EXPECT_EQ(io::read_matrix_market(ss), A);
}

TEST(MatrixMarket, SymmetricRoundTrip)
{
    const CsrMatrix A = random_symmetric(8, 0.3, 18);
    std::stringstream ss;
    io::write_matrix_market(ss, A, true);
    EXPECT_NE(ss.str().find("symmetric"), std::string::npos);
    EXPECT_EQ(io::read_matrix_market(ss), A);
}

TEST(MatrixMarket, MalformedEntryNamesLine)
{
    std::stringstream ss("%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 1 1.0\n1 x 2.0\n");
    try {
        io::read_matrix_market(ss, "bad.mtx");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 5u);
        EXPECT_NE(std::string(e.what()).find("bad.mtx:5"), std::string::npos);
    }
}

TEST(MatrixMarket, TruncatedAndOutOfRange)
{
    std::stringstream a("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.0\n");
    EXPECT_THROW(io::read_matrix_market(a), ParseError);
    std::stringstream b("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n");
    EXPECT_THROW(io::read_matrix_market(b), ParseError);
    std::stringstream c("%%MatrixMarket matrix array real general\n2 2\n");
    EXPECT_THROW(io::read_matrix_market(c), ParseError);
}

TEST(VectorText, RoundTripIsExact)
{
    const Vector v = random_vector(50, 9);
    std::stringstream ss;
    io::write_vector(ss, v);
    EXPECT_EQ(io::read_vector(ss), v);
    std::stringstream bad("1.0 2.0\n3.0 abc\n");
    try {
        io::read_vector(bad, "v.vec");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}
