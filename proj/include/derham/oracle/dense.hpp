#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "derham/errors.hpp"
#include "derham/sparse/csr_matrix.hpp"

namespace derham::oracle {

/// Row-major dense matrix for brute-force reference computations.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0) : r_(r), c_(c), a_(r * c, fill) {}

    static DenseMatrix identity(std::size_t n)
    {
        DenseMatrix I(n, n);
        for (std::size_t i = 0; i < n; ++i)
            I(i, i) = 1.0;
        return I;
    }

    static DenseMatrix from_csr(const CsrMatrix& A)
    {
        DenseMatrix d(A.rows(), A.cols());
        for (const auto& t : A.to_triplets())
            d(t.row, t.col) += t.value;
        return d;
    }

    std::size_t rows() const noexcept { return r_; }
    std::size_t cols() const noexcept { return c_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * c_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * c_ + j]; }
    const std::vector<double>& data() const noexcept { return a_; }

    DenseMatrix transposed() const
    {
        DenseMatrix t(c_, r_);
        for (std::size_t i = 0; i < r_; ++i)
            for (std::size_t j = 0; j < c_; ++j)
                t(j, i) = (*this)(i, j);
        return t;
    }

    Vector column(std::size_t j) const
    {
        Vector v(r_);
        for (std::size_t i = 0; i < r_; ++i)
            v[i] = (*this)(i, j);
        return v;
    }

    double max_abs() const
    {
        double m = 0.0;
        for (double x : a_)
            m = std::max(m, std::abs(x));
        return m;
    }

private:
    std::size_t r_ = 0, c_ = 0;
    std::vector<double> a_;
};

inline DenseMatrix operator*(const DenseMatrix& A, const DenseMatrix& B)
{
    if (A.cols() != B.rows())
        throw DimensionError("dense multiply: inner dimensions differ");
    DenseMatrix C(A.rows(), B.cols());
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t k = 0; k < A.cols(); ++k) {
            const double a = A(i, k);
            if (a == 0.0)
                continue;
            for (std::size_t j = 0; j < B.cols(); ++j)
                C(i, j) += a * B(k, j);
        }
    return C;
}

inline DenseMatrix operator+(const DenseMatrix& A, const DenseMatrix& B)
{
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw DimensionError("dense add: shapes differ");
    DenseMatrix C = A;
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j)
            C(i, j) += B(i, j);
    return C;
}

inline DenseMatrix operator*(double s, DenseMatrix A)
{
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j)
            A(i, j) *= s;
    return A;
}

inline Vector operator*(const DenseMatrix& A, std::span<const double> x)
{
    require_size(x, A.cols(), "dense matvec");
    Vector y(A.rows(), 0.0);
    for (std::size_t i = 0; i < A.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < A.cols(); ++j)
            s += A(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

/// Lower-triangular L with A = L L^T. Throws InvalidArgument when A is not
/// numerically SPD.
inline DenseMatrix cholesky(const DenseMatrix& A)
{
    const std::size_t n = A.rows();
    if (A.cols() != n)
        throw DimensionError("cholesky: matrix is not square");
    DenseMatrix L(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = A(j, j);
        for (std::size_t k = 0; k < j; ++k)
            d -= L(j, k) * L(j, k);
        if (!(d > 0.0))
            throw InvalidArgument("cholesky: matrix is not positive definite (pivot " + std::to_string(j) + ")");
        L(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = A(i, j);
            for (std::size_t k = 0; k < j; ++k)
                s -= L(i, k) * L(j, k);
            L(i, j) = s / L(j, j);
        }
    }
    return L;
}

/// Solves L X = B (lower = true) or L^T X = B (lower = false) in place.
inline void triangular_solve(const DenseMatrix& L, DenseMatrix& B, bool lower)
{
    const std::size_t n = L.rows();
    for (std::size_t c = 0; c < B.cols(); ++c) {
        if (lower) {
            for (std::size_t i = 0; i < n; ++i) {
                double s = B(i, c);
                for (std::size_t k = 0; k < i; ++k)
                    s -= L(i, k) * B(k, c);
                B(i, c) = s / L(i, i);
            }
        } else {
            for (std::size_t i = n; i-- > 0;) {
                double s = B(i, c);
                for (std::size_t k = i + 1; k < n; ++k)
                    s -= L(k, i) * B(k, c);
                B(i, c) = s / L(i, i);
            }
        }
    }
}

struct SymmetricEigen {
    Vector values;       // ascending
    DenseMatrix vectors; // orthonormal columns
};

/// Householder tridiagonalization followed by implicit QL with Wilkinson-type
/// shifts (after the classic tred2 / tql2 pair).
inline SymmetricEigen symmetric_eigen(const DenseMatrix& S)
{
    const std::size_t n = S.rows();
    if (S.cols() != n)
        throw DimensionError("symmetric_eigen: matrix is not square");
    SymmetricEigen out;
    if (n == 0)
        return out;
    DenseMatrix V(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            V(i, j) = 0.5 * (S(i, j) + S(j, i));
    Vector d(n), e(n, 0.0);

    for (std::size_t j = 0; j < n; ++j)
        d[j] = V(n - 1, j);
    for (std::size_t i = n - 1; i > 0; --i) {
        double scale = 0.0, h = 0.0;
        for (std::size_t k = 0; k < i; ++k)
            scale += std::abs(d[k]);
        if (scale == 0.0) {
            e[i] = d[i - 1];
            for (std::size_t j = 0; j < i; ++j) {
                d[j] = V(i - 1, j);
                V(i, j) = 0.0;
                V(j, i) = 0.0;
            }
        } else {
            for (std::size_t k = 0; k < i; ++k) {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            double f = d[i - 1];
            double g = std::sqrt(h);
            if (f > 0)
                g = -g;
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for (std::size_t j = 0; j < i; ++j)
                e[j] = 0.0;
            for (std::size_t j = 0; j < i; ++j) {
                f = d[j];
                V(j, i) = f;
                g = e[j] + V(j, j) * f;
                for (std::size_t k = j + 1; k <= i - 1; ++k) {
                    g += V(k, j) * d[k];
                    e[k] += V(k, j) * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for (std::size_t j = 0; j < i; ++j) {
                e[j] /= h;
                f += e[j] * d[j];
            }
            const double hh = f / (h + h);
            for (std::size_t j = 0; j < i; ++j)
                e[j] -= hh * d[j];
            for (std::size_t j = 0; j < i; ++j) {
                f = d[j];
                g = e[j];
                for (std::size_t k = j; k <= i - 1; ++k)
                    V(k, j) -= (f * e[k] + g * d[k]);
                d[j] = V(i - 1, j);
                V(i, j) = 0.0;
            }
        }
        d[i] = h;
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        V(n - 1, i) = V(i, i);
        V(i, i) = 1.0;
        const double h = d[i + 1];
        if (h != 0.0) {
            for (std::size_t k = 0; k <= i; ++k)
                d[k] = V(k, i + 1) / h;
            for (std::size_t j = 0; j <= i; ++j) {
                double g = 0.0;
                for (std::size_t k = 0; k <= i; ++k)
                    g += V(k, i + 1) * V(k, j);
                for (std::size_t k = 0; k <= i; ++k)
                    V(k, j) -= g * d[k];
            }
        }
        for (std::size_t k = 0; k <= i; ++k)
            V(k, i + 1) = 0.0;
    }
    for (std::size_t j = 0; j < n; ++j) {
        d[j] = V(n - 1, j);
        V(n - 1, j) = 0.0;
    }
    V(n - 1, n - 1) = 1.0;
    e[0] = 0.0;

    // QL iteration on the tridiagonal (d, e).
    for (std::size_t i = 1; i < n; ++i)
        e[i - 1] = e[i];
    e[n - 1] = 0.0;
    double f = 0.0, tst1 = 0.0;
    const double eps = std::ldexp(1.0, -52);
    for (std::size_t l = 0; l < n; ++l) {
        tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
        std::size_t m = l;
        while (m < n) {
            if (std::abs(e[m]) <= eps * tst1)
                break;
            ++m;
        }
        if (m == n)
            m = n - 1;
        if (m > l) {
            int iter = 0;
            do {
                if (++iter > 200)
                    throw DivergenceError("symmetric_eigen: QL iteration did not converge");
                double g = d[l];
                double p = (d[l + 1] - g) / (2.0 * e[l]);
                double r = std::hypot(p, 1.0);
                if (p < 0)
                    r = -r;
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                const double dl1 = d[l + 1];
                double h = g - d[l];
                for (std::size_t i = l + 2; i < n; ++i)
                    d[i] -= h;
                f += h;
                p = d[m];
                double c = 1.0, c2 = 1.0, c3 = 1.0;
                const double el1 = e[l + 1];
                double s = 0.0, s2 = 0.0;
                for (std::size_t ii = m; ii-- > l;) {
                    const std::size_t i = ii;
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = std::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for (std::size_t k = 0; k < n; ++k) {
                        h = V(k, i + 1);
                        V(k, i + 1) = s * V(k, i) + c * h;
                        V(k, i) = c * V(k, i) - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
            } while (std::abs(e[l]) > eps * tst1);
        }
        d[l] += f;
        e[l] = 0.0;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
    out.values.resize(n);
    out.vectors = DenseMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = d[order[j]];
        for (std::size_t i = 0; i < n; ++i)
            out.vectors(i, j) = V(i, order[j]);
    }
    return out;
}

/// Householder QR with column pivoting, A P = Q R. Q is kept as the list of
/// reflectors.
struct PivotedQR {
    DenseMatrix R;                     // m x n, upper trapezoidal
    std::vector<Vector> reflectors;    // v_k, acting on rows k..m-1
    std::vector<double> betas;         // H_k = I - beta_k v_k v_k^T
    std::vector<std::size_t> perm;     // column j of A P is column perm[j] of A
    std::size_t rank = 0;

    /// Q^T b
    Vector apply_qt(Vector b) const
    {
        for (std::size_t k = 0; k < reflectors.size(); ++k) {
            const Vector& v = reflectors[k];
            double s = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i)
                s += v[i] * b[k + i];
            s *= betas[k];
            for (std::size_t i = 0; i < v.size(); ++i)
                b[k + i] -= s * v[i];
        }
        return b;
    }
};

/// Rank is the number of diagonal entries of R above rank_tol times the
/// largest one.
inline PivotedQR pivoted_qr(DenseMatrix A, double rank_tol = 1e-10)
{
    const std::size_t m = A.rows(), n = A.cols();
    PivotedQR q;
    q.perm.resize(n);
    std::iota(q.perm.begin(), q.perm.end(), std::size_t{0});
    Vector norms(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i)
            norms[j] += A(i, j) * A(i, j);

    const std::size_t steps = std::min(m, n);
    double first = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        // Recompute trailing column norms exactly; cheap at oracle sizes and
        // avoids the downdating cancellation problem.
        std::size_t piv = k;
        double best = -1.0;
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < m; ++i)
                s += A(i, j) * A(i, j);
            norms[j] = s;
            if (s > best) {
                best = s;
                piv = j;
            }
        }
        if (piv != k) {
            for (std::size_t i = 0; i < m; ++i)
                std::swap(A(i, k), A(i, piv));
            std::swap(q.perm[k], q.perm[piv]);
            std::swap(norms[k], norms[piv]);
        }
        const double alpha_norm = std::sqrt(std::max(best, 0.0));
        if (k == 0)
            first = alpha_norm;
        if (alpha_norm <= rank_tol * first || alpha_norm == 0.0)
            break;

        Vector v(m - k);
        for (std::size_t i = k; i < m; ++i)
            v[i - k] = A(i, k);
        const double alpha = v[0] >= 0.0 ? -alpha_norm : alpha_norm;
        v[0] -= alpha;
        const double vnorm2 = blas::dot(v, v);
        const double beta = vnorm2 > 0.0 ? 2.0 / vnorm2 : 0.0;
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < m; ++i)
                s += v[i - k] * A(i, j);
            s *= beta;
            for (std::size_t i = k; i < m; ++i)
                A(i, j) -= s * v[i - k];
        }
        for (std::size_t i = k + 1; i < m; ++i)
            A(i, k) = 0.0;
        q.reflectors.push_back(std::move(v));
        q.betas.push_back(beta);
        ++q.rank;
    }
    q.R = std::move(A);
    return q;
}

inline std::size_t numerical_rank(const DenseMatrix& A, double rank_tol = 1e-10)
{
    return pivoted_qr(A, rank_tol).rank;
}

/// Minimum-norm least-squares solution of A x = b through the complete
/// orthogonal decomposition A P = Q [L 0; 0 0] Z^T.
inline Vector min_norm_lstsq(const DenseMatrix& A, std::span<const double> b, double rank_tol = 1e-10)
{
    require_size(b, A.rows(), "min_norm_lstsq");
    const std::size_t n = A.cols();
    const PivotedQR q = pivoted_qr(A, rank_tol);
    const std::size_t r = q.rank;
    Vector x(n, 0.0);
    if (r == 0)
        return x;
    const Vector c = q.apply_qt(Vector(b.begin(), b.end()));

    // [R11 R12]^T = Z [T; 0], so [R11 R12] = [T^T 0] Z^T.
    DenseMatrix W(n, r);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = i; j < n; ++j)
            W(j, i) = q.R(i, j);
    const PivotedQR z = pivoted_qr(W, 0.0);

    // T^T y1 = c1 with T = z.R's leading block, whose columns are permuted by z.perm.
    // W P_z = Z T  =>  [R11 R12] = P_z T^T Z^T restricted; solve P_z T^T y = c1.
    Vector c1(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(r));
    Vector rhs(r);
    for (std::size_t i = 0; i < r; ++i)
        rhs[i] = c1[z.perm[i]];
    Vector y(n, 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        double s = rhs[i];
        for (std::size_t k = 0; k < i; ++k)
            s -= z.R(k, i) * y[k];
        if (z.R(i, i) == 0.0)
            throw DivergenceError("min_norm_lstsq: singular triangular factor");
        y[i] = s / z.R(i, i);
    }
    // x_perm = Z y, applying reflectors in reverse.
    for (std::size_t k = z.reflectors.size(); k-- > 0;) {
        const Vector& v = z.reflectors[k];
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += v[i] * y[k + i];
        s *= z.betas[k];
        for (std::size_t i = 0; i < v.size(); ++i)
            y[k + i] -= s * v[i];
    }
    for (std::size_t j = 0; j < n; ++j)
        x[q.perm[j]] = y[j];
    return x;
}

} // namespace derham::oracle
