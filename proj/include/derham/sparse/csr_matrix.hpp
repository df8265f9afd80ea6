#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "derham/errors.hpp"
#include "derham/sparse/vector.hpp"

namespace derham {

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Compressed sparse row matrix.
///
/// Invariants (checked by the validating constructor): row_ptr has nrows+1
/// non-decreasing entries starting at 0 and ending at nnz; column indices are
/// strictly increasing inside each row and below ncols. Stored zeros are
/// allowed, duplicates are not.
class CsrMatrix {
public:
    CsrMatrix() : row_ptr_(1, 0) {}

    CsrMatrix(std::size_t nrows, std::size_t ncols, std::vector<std::size_t> row_ptr,
              std::vector<std::size_t> col_idx, std::vector<double> values)
        : nrows_(nrows), ncols_(ncols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
          values_(std::move(values))
    {
        validate();
    }

    /// Duplicates are summed (FEM assembly semantics).
    static CsrMatrix from_triplets(std::span<const Triplet> triplets, std::size_t nrows, std::size_t ncols)
    {
        std::vector<std::size_t> count(nrows + 1, 0);
        for (const auto& t : triplets) {
            if (t.row >= nrows || t.col >= ncols)
                throw StructuralError("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                                      ") outside " + std::to_string(nrows) + "x" + std::to_string(ncols));
            ++count[t.row + 1];
        }
        std::partial_sum(count.begin(), count.end(), count.begin());

        std::vector<std::size_t> cols(triplets.size());
        std::vector<double> vals(triplets.size());
        std::vector<std::size_t> fill(count.begin(), count.end() - 1);
        for (const auto& t : triplets) {
            const std::size_t pos = fill[t.row]++;
            cols[pos] = t.col;
            vals[pos] = t.value;
        }

        std::vector<std::size_t> row_ptr(nrows + 1, 0);
        std::vector<std::size_t> col_idx;
        std::vector<double> values;
        col_idx.reserve(triplets.size());
        values.reserve(triplets.size());
        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < nrows; ++i) {
            const std::size_t b = count[i], e = count[i + 1];
            order.resize(e - b);
            std::iota(order.begin(), order.end(), b);
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t x, std::size_t y) { return cols[x] < cols[y]; });
            for (std::size_t k : order) {
                if (!col_idx.empty() && values.size() > row_ptr[i] && col_idx.back() == cols[k])
                    values.back() += vals[k];
                else {
                    col_idx.push_back(cols[k]);
                    values.push_back(vals[k]);
                }
            }
            row_ptr[i + 1] = col_idx.size();
        }
        return CsrMatrix(nrows, ncols, std::move(row_ptr), std::move(col_idx), std::move(values));
    }

    static CsrMatrix from_triplets(const std::vector<Triplet>& triplets, std::size_t nrows, std::size_t ncols)
    {
        return from_triplets(std::span<const Triplet>(triplets), nrows, ncols);
    }

    static CsrMatrix identity(std::size_t n, double alpha = 1.0)
    {
        return diagonal(Vector(n, alpha));
    }

    static CsrMatrix diagonal(std::span<const double> d)
    {
        const std::size_t n = d.size();
        std::vector<std::size_t> rp(n + 1), ci(n);
        std::iota(rp.begin(), rp.end(), std::size_t{0});
        std::iota(ci.begin(), ci.end(), std::size_t{0});
        return CsrMatrix(n, n, std::move(rp), std::move(ci), Vector(d.begin(), d.end()));
    }

    std::size_t rows() const noexcept { return nrows_; }
    std::size_t cols() const noexcept { return ncols_; }
    std::size_t nnz() const noexcept { return values_.size(); }

    std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
    std::span<const std::size_t> col_idx() const noexcept { return col_idx_; }
    std::span<const double> values() const noexcept { return values_; }

    /// Entry (i, j); zero when not stored.
    double at(std::size_t i, std::size_t j) const
    {
        if (i >= nrows_ || j >= ncols_)
            throw StructuralError("at: index out of range");
        const auto b = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
        const auto e = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
        const auto it = std::lower_bound(b, e, j);
        if (it == e || *it != j)
            return 0.0;
        return values_[static_cast<std::size_t>(it - col_idx_.begin())];
    }

    std::vector<Triplet> to_triplets() const
    {
        std::vector<Triplet> out;
        out.reserve(nnz());
        for (std::size_t i = 0; i < nrows_; ++i)
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
                out.push_back({i, col_idx_[k], values_[k]});
        return out;
    }

    bool same_structure(const CsrMatrix& o) const
    {
        return nrows_ == o.nrows_ && ncols_ == o.ncols_ && row_ptr_ == o.row_ptr_ && col_idx_ == o.col_idx_;
    }

    friend bool operator==(const CsrMatrix& a, const CsrMatrix& b)
    {
        return a.same_structure(b) && a.values_ == b.values_;
    }

private:
    void validate() const
    {
        if (row_ptr_.size() != nrows_ + 1)
            throw StructuralError("row_ptr must have nrows+1 entries");
        if (row_ptr_.front() != 0)
            throw StructuralError("row_ptr[0] must be 0");
        if (row_ptr_.back() != col_idx_.size() || col_idx_.size() != values_.size())
            throw StructuralError("row_ptr[nrows] must equal nnz");
        for (std::size_t i = 0; i < nrows_; ++i) {
            if (row_ptr_[i] > row_ptr_[i + 1])
                throw StructuralError("row_ptr decreases at row " + std::to_string(i));
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                if (col_idx_[k] >= ncols_)
                    throw StructuralError("column index out of range in row " + std::to_string(i));
                if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1])
                    throw StructuralError("columns not strictly increasing in row " + std::to_string(i));
            }
        }
    }

    std::size_t nrows_ = 0;
    std::size_t ncols_ = 0;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> col_idx_;
    std::vector<double> values_;
};

/// y = A x. Each row is reduced in stored order, so the result does not depend
/// on how rows are scheduled.
inline void spmv_into(const CsrMatrix& A, std::span<const double> x, std::span<double> y)
{
    if (x.size() != A.cols() || y.size() != A.rows())
        throw DimensionError("spmv: " + std::to_string(A.rows()) + "x" + std::to_string(A.cols()) +
                             " matrix applied to length " + std::to_string(x.size()));
    const auto rp = A.row_ptr();
    const auto ci = A.col_idx();
    const auto v = A.values();
    for (std::size_t i = 0; i < A.rows(); ++i) {
        double s = 0.0;
        for (std::size_t k = rp[i]; k < rp[i + 1]; ++k)
            s += v[k] * x[ci[k]];
        y[i] = s;
    }
}

inline Vector spmv(const CsrMatrix& A, std::span<const double> x)
{
    Vector y(A.rows());
    spmv_into(A, x, y);
    return y;
}

/// y = A^T x
inline Vector spmv_t(const CsrMatrix& A, std::span<const double> x)
{
    if (x.size() != A.rows())
        throw DimensionError("spmv_t: length mismatch");
    Vector y(A.cols(), 0.0);
    const auto rp = A.row_ptr();
    const auto ci = A.col_idx();
    const auto v = A.values();
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t k = rp[i]; k < rp[i + 1]; ++k)
            y[ci[k]] += v[k] * x[i];
    return y;
}

inline CsrMatrix transpose(const CsrMatrix& A)
{
    std::vector<std::size_t> rp(A.cols() + 1, 0);
    for (std::size_t c : A.col_idx())
        ++rp[c + 1];
    std::partial_sum(rp.begin(), rp.end(), rp.begin());
    std::vector<std::size_t> ci(A.nnz());
    Vector vals(A.nnz());
    std::vector<std::size_t> fill(rp.begin(), rp.end() - 1);
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t k = A.row_ptr()[i]; k < A.row_ptr()[i + 1]; ++k) {
            const std::size_t pos = fill[A.col_idx()[k]]++;
            ci[pos] = i;
            vals[pos] = A.values()[k];
        }
    return CsrMatrix(A.cols(), A.rows(), std::move(rp), std::move(ci), std::move(vals));
}

/// Sparse product A*B (Gustavson). Entries that cancel to zero stay stored.
inline CsrMatrix multiply(const CsrMatrix& A, const CsrMatrix& B)
{
    if (A.cols() != B.rows())
        throw DimensionError("multiply: inner dimensions differ");
    const std::size_t n = B.cols();
    std::vector<std::size_t> marker(n, static_cast<std::size_t>(-1));
    Vector acc(n, 0.0);
    std::vector<std::size_t> rp(A.rows() + 1, 0), ci, row_cols;
    Vector vals;
    for (std::size_t i = 0; i < A.rows(); ++i) {
        row_cols.clear();
        for (std::size_t ka = A.row_ptr()[i]; ka < A.row_ptr()[i + 1]; ++ka) {
            const std::size_t k = A.col_idx()[ka];
            const double a = A.values()[ka];
            for (std::size_t kb = B.row_ptr()[k]; kb < B.row_ptr()[k + 1]; ++kb) {
                const std::size_t j = B.col_idx()[kb];
                if (marker[j] != i) {
                    marker[j] = i;
                    acc[j] = 0.0;
                    row_cols.push_back(j);
                }
                acc[j] += a * B.values()[kb];
            }
        }
        std::sort(row_cols.begin(), row_cols.end());
        for (std::size_t j : row_cols) {
            ci.push_back(j);
            vals.push_back(acc[j]);
        }
        rp[i + 1] = ci.size();
    }
    return CsrMatrix(A.rows(), n, std::move(rp), std::move(ci), std::move(vals));
}

/// a*A + b*B on the union pattern.
inline CsrMatrix add(double a, const CsrMatrix& A, double b, const CsrMatrix& B)
{
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw DimensionError("add: shape mismatch");
    std::vector<std::size_t> rp(A.rows() + 1, 0), ci;
    Vector vals;
    ci.reserve(A.nnz() + B.nnz());
    vals.reserve(A.nnz() + B.nnz());
    for (std::size_t i = 0; i < A.rows(); ++i) {
        std::size_t ka = A.row_ptr()[i], kb = B.row_ptr()[i];
        const std::size_t ea = A.row_ptr()[i + 1], eb = B.row_ptr()[i + 1];
        while (ka < ea || kb < eb) {
            const std::size_t ja = ka < ea ? A.col_idx()[ka] : static_cast<std::size_t>(-1);
            const std::size_t jb = kb < eb ? B.col_idx()[kb] : static_cast<std::size_t>(-1);
            if (ja == jb) {
                ci.push_back(ja);
                vals.push_back(a * A.values()[ka++] + b * B.values()[kb++]);
            } else if (ja < jb) {
                ci.push_back(ja);
                vals.push_back(a * A.values()[ka++]);
            } else {
                ci.push_back(jb);
                vals.push_back(b * B.values()[kb++]);
            }
        }
        rp[i + 1] = ci.size();
    }
    return CsrMatrix(A.rows(), A.cols(), std::move(rp), std::move(ci), std::move(vals));
}

inline CsrMatrix scaled(double a, const CsrMatrix& A)
{
    Vector v(A.values().begin(), A.values().end());
    blas::scale(a, v);
    return CsrMatrix(A.rows(), A.cols(), {A.row_ptr().begin(), A.row_ptr().end()},
                     {A.col_idx().begin(), A.col_idx().end()}, std::move(v));
}

/// A * diag(d)
inline CsrMatrix scale_columns(const CsrMatrix& A, std::span<const double> d)
{
    require_size(d, A.cols(), "scale_columns");
    Vector v(A.values().begin(), A.values().end());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] *= d[A.col_idx()[k]];
    return CsrMatrix(A.rows(), A.cols(), {A.row_ptr().begin(), A.row_ptr().end()},
                     {A.col_idx().begin(), A.col_idx().end()}, std::move(v));
}

/// Rows `rows` and columns `cols` of A, renumbered in the given order.
/// `cols` must be strictly increasing.
inline CsrMatrix submatrix(const CsrMatrix& A, std::span<const std::size_t> rows, std::span<const std::size_t> cols)
{
    constexpr std::size_t absent = static_cast<std::size_t>(-1);
    std::vector<std::size_t> newcol(A.cols(), absent);
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (cols[j] >= A.cols() || (j > 0 && cols[j] <= cols[j - 1]))
            throw StructuralError("submatrix: column list must be increasing and in range");
        newcol[cols[j]] = j;
    }
    std::vector<std::size_t> rp(rows.size() + 1, 0), ci;
    Vector vals;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t i = rows[r];
        if (i >= A.rows())
            throw StructuralError("submatrix: row out of range");
        for (std::size_t k = A.row_ptr()[i]; k < A.row_ptr()[i + 1]; ++k) {
            const std::size_t j = newcol[A.col_idx()[k]];
            if (j != absent) {
                ci.push_back(j);
                vals.push_back(A.values()[k]);
            }
        }
        rp[r + 1] = ci.size();
    }
    return CsrMatrix(rows.size(), cols.size(), std::move(rp), std::move(ci), std::move(vals));
}

inline Vector diagonal(const CsrMatrix& A)
{
    Vector d(std::min(A.rows(), A.cols()), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = A.at(i, i);
    return d;
}

inline double max_abs(const CsrMatrix& A) { return blas::norm_inf(A.values()); }

inline double norm_frobenius(const CsrMatrix& A) { return blas::norm2(A.values()); }

/// Maximum absolute row sum.
inline double norm_inf(const CsrMatrix& A)
{
    double m = 0.0;
    for (std::size_t i = 0; i < A.rows(); ++i) {
        double s = 0.0;
        for (std::size_t k = A.row_ptr()[i]; k < A.row_ptr()[i + 1]; ++k)
            s += std::abs(A.values()[k]);
        m = std::max(m, s);
    }
    return m;
}

/// max |A - A^T|
inline double max_asymmetry(const CsrMatrix& A)
{
    if (A.rows() != A.cols())
        throw DimensionError("max_asymmetry: matrix is not square");
    return max_abs(add(1.0, A, -1.0, transpose(A)));
}

inline bool is_symmetric(const CsrMatrix& A, double rel_tol = 1e-12)
{
    return A.rows() == A.cols() && max_asymmetry(A) <= rel_tol * std::max(max_abs(A), 1e-300);
}

} // namespace derham
