#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "derham/errors.hpp"
#include "derham/precond/preconditioner.hpp"
#include "derham/random.hpp"
#include "derham/solvers/small_eigen.hpp"
#include "derham/solvers/trace.hpp"
#include "derham/sparse/operator_expr.hpp"
#include "derham/sparse/orthonormalize.hpp"

namespace derham {

struct LobpcgConfig {
    std::size_t block_size = 1;
    double rel_tol = 1e-11;
    std::size_t max_iter = 2000;
    std::uint64_t seed = 42;

    void validate() const
    {
        if (block_size < 1)
            throw InvalidArgument("LobpcgConfig: block_size must be at least 1");
        if (!(rel_tol > 0.0))
            throw InvalidArgument("LobpcgConfig: rel_tol must be positive");
        if (max_iter < 1)
            throw InvalidArgument("LobpcgConfig: max_iter must be at least 1");
    }
};

struct LobpcgResult {
    std::vector<double> eigenvalues; // ascending
    std::vector<Vector> vectors;     // M-orthonormal
    std::vector<double> residuals;   // ||A u - lambda M u|| / ||M u|| per pair
    IterationTrace trace;            // largest residual over the block
    std::size_t iterations = 0;
    bool converged = false;
};

namespace detail {

struct RitzStep {
    std::vector<double> values;
    std::vector<Vector> x; // new Ritz vectors
    std::vector<Vector> p; // their components outside the leading k basis vectors
};

/// Rayleigh-Ritz on an M-orthonormal basis; the first k basis vectors are the
/// current iterates.
inline RitzStep rayleigh_ritz(const OperatorExpr& A, const std::vector<Vector>& S, std::size_t k)
{
    const std::size_t m = S.size();
    std::vector<Vector> AS(m);
    for (std::size_t j = 0; j < m; ++j)
        AS[j] = A.apply(S[j]);
    std::vector<double> G(m * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            G[i * m + j] = G[j * m + i] = 0.5 * (blas::dot(S[i], AS[j]) + blas::dot(S[j], AS[i]));
    const SmallEigen e = jacobi_eigen(std::move(G), m);

    RitzStep out;
    const std::size_t n = S.front().size();
    for (std::size_t c = 0; c < std::min(k, m); ++c) {
        out.values.push_back(e.values[c]);
        Vector x(n, 0.0), p(n, 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            const double w = e.vectors[j * m + c];
            blas::axpy(w, S[j], x);
            if (j >= k)
                blas::axpy(w, S[j], p);
        }
        out.x.push_back(std::move(x));
        out.p.push_back(std::move(p));
    }
    return out;
}

} // namespace detail

/// Block LOBPCG with soft locking for the smallest eigenpairs of
/// A u = lambda M u. Converged columns stop contributing search directions
/// but stay in the Rayleigh-Ritz basis. A block that loses rank is refilled
/// with fresh random vectors; three such failures abort.
inline LobpcgResult lobpcg(const OperatorExpr& A, const OperatorExpr& M, const Preconditioner& T,
                           const LobpcgConfig& cfg)
{
    cfg.validate();
    const std::size_t n = A.size();
    if (M.size() != n)
        throw DimensionError("lobpcg: A and M sizes differ");
    const std::size_t k = cfg.block_size;
    if (k > n)
        throw InvalidArgument("lobpcg: block size " + std::to_string(k) + " exceeds problem size " +
                              std::to_string(n));

    UniformSource rng(cfg.seed);
    int failures = 0;
    auto fill_block = [&](std::vector<Vector> X) {
        while (true) {
            X = m_orthonormalize(M, std::move(X));
            if (X.size() == k)
                return X;
            if (++failures > 3)
                throw DivergenceError("lobpcg: block lost rank repeatedly");
            while (X.size() < k)
                X.push_back(rng.vector(n));
        }
    };

    std::vector<Vector> X;
    for (std::size_t j = 0; j < k; ++j)
        X.push_back(rng.vector(n));
    X = fill_block(std::move(X));
    detail::RitzStep rr = detail::rayleigh_ritz(A, X, k);
    X = std::move(rr.x);
    std::vector<double> lambda = std::move(rr.values);
    std::vector<Vector> P;

    LobpcgResult res;
    std::vector<double> resid(k);
    for (std::size_t iter = 0;; ++iter) {
        std::vector<Vector> R(k);
        double worst = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const Vector mx = M.apply(X[j]);
            R[j] = A.apply(X[j]);
            blas::axpy(-lambda[j], mx, R[j]);
            const double mn = blas::norm2(mx);
            resid[j] = mn > 0.0 ? blas::norm2(R[j]) / mn : blas::norm2(R[j]);
            if (!std::isfinite(resid[j]))
                throw DivergenceError("lobpcg: non-finite residual at iteration " + std::to_string(iter));
            worst = std::max(worst, resid[j]);
        }
        res.trace.push(worst);
        if (worst <= cfg.rel_tol) {
            res.converged = true;
            res.iterations = iter;
            break;
        }
        if (iter >= cfg.max_iter) {
            res.iterations = iter;
            break;
        }

        std::vector<Vector> S = X;
        for (std::size_t j = 0; j < k; ++j)
            if (resid[j] > cfg.rel_tol)
                S.push_back(T.apply(R[j]));
        for (std::size_t j = 0; j < P.size(); ++j)
            if (resid[j] > cfg.rel_tol && blas::norm2(P[j]) > 0.0)
                S.push_back(P[j]);
        S = m_orthonormalize(M, std::move(S));
        if (S.size() < k) {
            X = fill_block(std::move(S));
            P.clear();
            rr = detail::rayleigh_ritz(A, X, k);
            X = std::move(rr.x);
            lambda = std::move(rr.values);
            continue;
        }
        rr = detail::rayleigh_ritz(A, S, k);
        X = std::move(rr.x);
        P = std::move(rr.p);
        lambda = std::move(rr.values);
    }

    res.eigenvalues = std::move(lambda);
    res.vectors = std::move(X);
    res.residuals = std::move(resid);
    return res;
}

/// Number of eigenvalues at or below rel_threshold times the reference scale,
/// which defaults to the largest magnitude in the list.
inline std::size_t count_zero_modes(std::span<const double> eigenvalues, double rel_threshold = 1e-8,
                                    double reference = -1.0)
{
    double ref = reference;
    if (ref < 0.0) {
        ref = 0.0;
        for (double v : eigenvalues)
            ref = std::max(ref, std::abs(v));
    }
    std::size_t count = 0;
    for (double v : eigenvalues)
        if (v <= rel_threshold * ref)
            ++count;
    return count;
}

} // namespace derham
