#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "derham/errors.hpp"
#include "derham/precond/preconditioner.hpp"
#include "derham/solvers/trace.hpp"
#include "derham/sparse/operator_expr.hpp"

namespace derham {

struct PcgConfig {
    double rel_tol = 1e-10;
    std::size_t max_iter = 5000;
    bool record_trace = true;

    void validate() const
    {
        if (!(rel_tol > 0.0))
            throw InvalidArgument("PcgConfig: rel_tol must be positive");
        if (max_iter < 1)
            throw InvalidArgument("PcgConfig: max_iter must be at least 1");
    }
};

/// Replaces ||rhs - op x|| / ||rhs|| as the stopping measure. Receives the
/// current iterate.
using ConvergenceMeasure = std::function<double(const Vector& x)>;

struct PcgResult {
    Vector x;
    IterationTrace trace;
    std::size_t iterations = 0;
    bool converged = false;
    /// Last value of the stopping measure.
    double residual = 0.0;
};

/// One preconditioned CG recurrence, advanced a step at a time so that
/// callers can run several in lockstep.
class PcgIteration {
public:
    PcgIteration(OperatorExpr op, Preconditioner precond, std::span<const double> rhs, Vector x0)
        : op_(std::move(op)), pc_(std::move(precond)), b_(rhs.begin(), rhs.end()), x_(std::move(x0))
    {
        require_size(b_, op_.size(), "pcg rhs");
        require_finite(b_, "pcg rhs");
        if (x_.empty())
            x_.assign(b_.size(), 0.0);
        require_size(x_, b_.size(), "pcg x0");
        require_finite(x_, "pcg x0");
        bnorm_ = blas::norm2(b_);
        reset_direction();
    }

    const Vector& x() const noexcept { return x_; }
    std::size_t iterations() const noexcept { return iter_; }
    double rhs_norm() const noexcept { return bnorm_; }

    /// Recursively updated ||r|| / ||rhs||.
    double relative_residual() const { return bnorm_ > 0.0 ? blas::norm2(r_) / bnorm_ : blas::norm2(r_); }

    double true_relative_residual() const
    {
        const Vector r = blas::sub(b_, op_.apply(x_));
        return bnorm_ > 0.0 ? blas::norm2(r) / bnorm_ : blas::norm2(r);
    }

    /// Recomputes r = rhs - op x and discards the search direction.
    void reset_direction()
    {
        r_ = blas::sub(b_, op_.apply(x_));
        z_ = pc_.apply(r_);
        p_ = z_;
        rz_ = blas::dot(r_, z_);
    }

    /// Returns false when the recurrence cannot continue because the residual
    /// vanished exactly.
    bool step()
    {
        if (rz_ == 0.0)
            return false;
        const Vector q = op_.apply(p_);
        const double pq = blas::dot(p_, q);
        if (!std::isfinite(pq) || !std::isfinite(rz_))
            throw DivergenceError("pcg: non-finite value at iteration " + std::to_string(iter_ + 1));
        if (!(pq > 0.0))
            throw DivergenceError("pcg: non-positive curvature p^T A p = " + std::to_string(pq) + " at iteration " +
                                  std::to_string(iter_ + 1));
        const double alpha = rz_ / pq;
        blas::axpy(alpha, p_, x_);
        blas::axpy(-alpha, q, r_);
        z_ = pc_.apply(r_);
        const double rz_new = blas::dot(r_, z_);
        if (!std::isfinite(rz_new) || !all_finite(x_))
            throw DivergenceError("pcg: non-finite value at iteration " + std::to_string(iter_ + 1));
        const double beta = rz_new / rz_;
        rz_ = rz_new;
        for (std::size_t i = 0; i < p_.size(); ++i)
            p_[i] = z_[i] + beta * p_[i];
        ++iter_;
        return true;
    }

private:
    OperatorExpr op_;
    Preconditioner pc_;
    Vector b_, x_, r_, z_, p_;
    double rz_ = 0.0;
    double bnorm_ = 0.0;
    std::size_t iter_ = 0;
};

/// Preconditioned conjugate gradients. Convergence is declared on the
/// recursive residual and then confirmed on the true residual; a failed
/// confirmation restarts the recurrence from the current iterate. Hitting
/// max_iter is reported through `converged`, not thrown.
inline PcgResult pcg(const OperatorExpr& op, const Preconditioner& precond, std::span<const double> rhs, Vector x0,
                     const PcgConfig& cfg, const ConvergenceMeasure& measure = {})
{
    cfg.validate();
    PcgResult res;
    if (blas::norm2(rhs) == 0.0 && !measure) {
        res.x.assign(rhs.size(), 0.0);
        require_size(res.x, op.size(), "pcg rhs");
        res.converged = true;
        if (cfg.record_trace)
            res.trace.push(0.0);
        return res;
    }

    PcgIteration it(op, precond, rhs, std::move(x0));
    auto current = [&] { return measure ? measure(it.x()) : it.relative_residual(); };
    auto confirmed = [&] { return measure ? measure(it.x()) : it.true_relative_residual(); };

    double r = current();
    if (cfg.record_trace)
        res.trace.push(r);
    int restarts = 0;
    while (true) {
        if (r <= cfg.rel_tol) {
            const double t = confirmed();
            if (t <= cfg.rel_tol) {
                r = t;
                res.converged = true;
                break;
            }
            if (++restarts > 5)
                break;
            it.reset_direction();
        }
        if (it.iterations() >= cfg.max_iter)
            break;
        if (!it.step()) {
            r = confirmed();
            res.converged = r <= cfg.rel_tol;
            break;
        }
        r = current();
        if (!std::isfinite(r))
            throw DivergenceError("pcg: non-finite residual at iteration " + std::to_string(it.iterations()));
        if (cfg.record_trace)
            res.trace.push(r);
    }
    res.iterations = it.iterations();
    res.residual = r;
    res.x = it.x();
    return res;
}

inline PcgResult pcg(const OperatorExpr& op, const Preconditioner& precond, std::span<const double> rhs,
                     const PcgConfig& cfg)
{
    return pcg(op, precond, rhs, Vector{}, cfg);
}

} // namespace derham
