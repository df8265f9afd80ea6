#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "derham/errors.hpp"
#include "derham/sparse/csr_matrix.hpp"
#include "derham/sparse/vector.hpp"

namespace derham {

namespace detail {
struct ExprNode;
}

/// Lazy symmetric operator.
///
/// Leaves are symmetric CSR matrices, diagonals, scaled identities and the
/// low-rank term M H H^T M. Combinators are sums, real scaling and the
/// congruence B U B^T with a symmetric inner U. Nothing else can be spelled,
/// so every expression is symmetric. Application never materializes a
/// product: B U B^T x runs as B(U(B^T x)) and M H H^T M x as four
/// successive products.
class OperatorExpr {
public:
    OperatorExpr() = default;

    /// Throws InvalidArgument if A is not symmetric to 1e-12 relative.
    static OperatorExpr matrix(std::shared_ptr<const CsrMatrix> A);
    static OperatorExpr matrix(CsrMatrix A) { return matrix(std::make_shared<const CsrMatrix>(std::move(A))); }
    static OperatorExpr diagonal(Vector d);
    static OperatorExpr identity(std::size_t n, double alpha = 1.0);
    /// M H H^T M, with H given as columns.
    static OperatorExpr low_rank(std::shared_ptr<const CsrMatrix> M, std::shared_ptr<const std::vector<Vector>> H);
    /// B * inner * B^T
    static OperatorExpr triple_product(std::shared_ptr<const CsrMatrix> B, OperatorExpr inner);

    friend OperatorExpr operator+(const OperatorExpr& a, const OperatorExpr& b);
    friend OperatorExpr operator*(double s, const OperatorExpr& a);

    bool empty() const noexcept { return !node_; }
    std::size_t size() const;
    Vector apply(std::span<const double> x) const;

    /// True when no low-rank term is present, i.e. the expression can be
    /// assembled into a sparse matrix.
    bool is_sparse_representable() const;

    /// Throws UnsupportedCase when a low-rank term is present.
    CsrMatrix materialized() const;

private:
    explicit OperatorExpr(std::shared_ptr<const detail::ExprNode> n) : node_(std::move(n)) {}
    void require_nonempty(const char* what) const
    {
        if (!node_)
            throw InvalidArgument(std::string(what) + ": empty OperatorExpr");
    }

    std::shared_ptr<const detail::ExprNode> node_;
};

namespace detail {

struct MatrixLeaf {
    std::shared_ptr<const CsrMatrix> A;
};
struct DiagonalLeaf {
    Vector d;
};
struct IdentityLeaf {
    std::size_t n;
    double alpha;
};
struct LowRankLeaf {
    std::shared_ptr<const CsrMatrix> M;
    std::shared_ptr<const std::vector<Vector>> H;
};
struct SumNode {
    OperatorExpr a, b;
};
struct ScaleNode {
    double s;
    OperatorExpr a;
};
struct TripleNode {
    std::shared_ptr<const CsrMatrix> B;
    OperatorExpr inner;
};
struct ExprNode {
    std::variant<MatrixLeaf, DiagonalLeaf, IdentityLeaf, LowRankLeaf, SumNode, ScaleNode, TripleNode> v;
};

inline std::size_t size_of(const MatrixLeaf& n) { return n.A->rows(); }
inline std::size_t size_of(const DiagonalLeaf& n) { return n.d.size(); }
inline std::size_t size_of(const IdentityLeaf& n) { return n.n; }
inline std::size_t size_of(const LowRankLeaf& n) { return n.M->rows(); }
inline std::size_t size_of(const SumNode& n) { return n.a.size(); }
inline std::size_t size_of(const ScaleNode& n) { return n.a.size(); }
inline std::size_t size_of(const TripleNode& n) { return n.B->rows(); }

inline Vector apply_node(const MatrixLeaf& n, std::span<const double> x) { return spmv(*n.A, x); }
inline Vector apply_node(const DiagonalLeaf& n, std::span<const double> x)
{
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] = n.d[i] * x[i];
    return y;
}
inline Vector apply_node(const IdentityLeaf& n, std::span<const double> x)
{
    Vector y(x.begin(), x.end());
    blas::scale(n.alpha, y);
    return y;
}
inline Vector apply_node(const LowRankLeaf& n, std::span<const double> x)
{
    const Vector mx = spmv(*n.M, x);
    Vector hv(n.M->rows(), 0.0);
    for (const auto& h : *n.H)
        blas::axpy(blas::dot(h, mx), h, hv);
    return spmv(*n.M, hv);
}
inline Vector apply_node(const SumNode& n, std::span<const double> x)
{
    Vector y = n.a.apply(x);
    blas::axpy(1.0, n.b.apply(x), y);
    return y;
}
inline Vector apply_node(const ScaleNode& n, std::span<const double> x)
{
    Vector y = n.a.apply(x);
    blas::scale(n.s, y);
    return y;
}
inline Vector apply_node(const TripleNode& n, std::span<const double> x)
{
    return spmv(*n.B, n.inner.apply(spmv_t(*n.B, x)));
}

inline CsrMatrix materialize_node(const MatrixLeaf& n) { return *n.A; }
inline CsrMatrix materialize_node(const DiagonalLeaf& n) { return CsrMatrix::diagonal(n.d); }
inline CsrMatrix materialize_node(const IdentityLeaf& n) { return CsrMatrix::identity(n.n, n.alpha); }
inline CsrMatrix materialize_node(const LowRankLeaf&)
{
    throw UnsupportedCase("materialize: the low-rank term M H H^T M is dense and is never assembled");
}
inline CsrMatrix materialize_node(const SumNode& n) { return add(1.0, n.a.materialized(), 1.0, n.b.materialized()); }
inline CsrMatrix materialize_node(const ScaleNode& n) { return scaled(n.s, n.a.materialized()); }
inline CsrMatrix materialize_node(const TripleNode& n)
{
    return multiply(multiply(*n.B, n.inner.materialized()), transpose(*n.B));
}

inline bool sparse_ok(const LowRankLeaf&) { return false; }
inline bool sparse_ok(const SumNode& n) { return n.a.is_sparse_representable() && n.b.is_sparse_representable(); }
inline bool sparse_ok(const ScaleNode& n) { return n.a.is_sparse_representable(); }
inline bool sparse_ok(const TripleNode& n) { return n.inner.is_sparse_representable(); }
inline bool sparse_ok(const MatrixLeaf&) { return true; }
inline bool sparse_ok(const DiagonalLeaf&) { return true; }
inline bool sparse_ok(const IdentityLeaf&) { return true; }

} // namespace detail

inline OperatorExpr OperatorExpr::matrix(std::shared_ptr<const CsrMatrix> A)
{
    if (!A)
        throw InvalidArgument("OperatorExpr::matrix: null matrix");
    if (!is_symmetric(*A))
        throw InvalidArgument("OperatorExpr::matrix: operand is not symmetric");
    return OperatorExpr(std::make_shared<const detail::ExprNode>(detail::ExprNode{detail::MatrixLeaf{std::move(A)}}));
}

inline OperatorExpr OperatorExpr::diagonal(Vector d)
{
    return OperatorExpr(std::make_shared<const detail::ExprNode>(detail::ExprNode{detail::DiagonalLeaf{std::move(d)}}));
}

inline OperatorExpr OperatorExpr::identity(std::size_t n, double alpha)
{
    return OperatorExpr(std::make_shared<const detail::ExprNode>(detail::ExprNode{detail::IdentityLeaf{n, alpha}}));
}

inline OperatorExpr OperatorExpr::low_rank(std::shared_ptr<const CsrMatrix> M,
                                           std::shared_ptr<const std::vector<Vector>> H)
{
    if (!M || !H)
        throw InvalidArgument("OperatorExpr::low_rank: null operand");
    if (!is_symmetric(*M))
        throw InvalidArgument("OperatorExpr::low_rank: M is not symmetric");
    for (const auto& h : *H)
        require_size(h, M->rows(), "OperatorExpr::low_rank column");
    return OperatorExpr(
        std::make_shared<const detail::ExprNode>(detail::ExprNode{detail::LowRankLeaf{std::move(M), std::move(H)}}));
}

inline OperatorExpr OperatorExpr::triple_product(std::shared_ptr<const CsrMatrix> B, OperatorExpr inner)
{
    if (!B)
        throw InvalidArgument("OperatorExpr::triple_product: null matrix");
    inner.require_nonempty("triple_product");
    if (inner.size() != B->cols())
        throw DimensionError("triple_product: inner operator is " + std::to_string(inner.size()) + " wide, B has " +
                             std::to_string(B->cols()) + " columns");
    return OperatorExpr(
        std::make_shared<const detail::ExprNode>(detail::ExprNode{detail::TripleNode{std::move(B), std::move(inner)}}));
}

inline OperatorExpr operator+(const OperatorExpr& a, const OperatorExpr& b)
{
    a.require_nonempty("sum");
    b.require_nonempty("sum");
    if (a.size() != b.size())
        throw DimensionError("OperatorExpr sum: sizes " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()));
    return OperatorExpr(std::make_shared<const detail::ExprNode>(detail::ExprNode{detail::SumNode{a, b}}));
}

inline OperatorExpr operator*(double s, const OperatorExpr& a)
{
    a.require_nonempty("scale");
    return OperatorExpr(std::make_shared<const detail::ExprNode>(detail::ExprNode{detail::ScaleNode{s, a}}));
}

inline std::size_t OperatorExpr::size() const
{
    if (!node_)
        return 0;
    return std::visit([](const auto& n) { return detail::size_of(n); }, node_->v);
}

inline Vector OperatorExpr::apply(std::span<const double> x) const
{
    require_nonempty("apply");
    require_size(x, size(), "OperatorExpr::apply");
    return std::visit([&](const auto& n) { return detail::apply_node(n, x); }, node_->v);
}

inline bool OperatorExpr::is_sparse_representable() const
{
    if (!node_)
        return false;
    return std::visit([](const auto& n) { return detail::sparse_ok(n); }, node_->v);
}

inline CsrMatrix OperatorExpr::materialized() const
{
    require_nonempty("materialize");
    return std::visit([](const auto& n) { return detail::materialize_node(n); }, node_->v);
}

/// Assemble the expression into an explicit sparse matrix. Only used to build
/// preconditioners; solvers keep applying the expression lazily.
inline CsrMatrix materialize(const OperatorExpr& e) { return e.materialized(); }

} // namespace derham
