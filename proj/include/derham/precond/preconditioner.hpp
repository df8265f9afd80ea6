#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "derham/errors.hpp"
#include "derham/precond/ilu0.hpp"
#include "derham/sparse/csr_matrix.hpp"

namespace derham {

enum class PreconditionerKind { None, Jacobi, Ilu0 };

inline const char* to_string(PreconditionerKind k)
{
    switch (k) {
    case PreconditionerKind::None: return "none";
    case PreconditionerKind::Jacobi: return "jacobi";
    case PreconditionerKind::Ilu0: return "ilu0";
    }
    return "?";
}

inline PreconditionerKind parse_preconditioner_kind(const std::string& s)
{
    if (s == "none" || s == "identity")
        return PreconditionerKind::None;
    if (s == "jacobi")
        return PreconditionerKind::Jacobi;
    if (s == "ilu0" || s == "ilu")
        return PreconditionerKind::Ilu0;
    throw InvalidArgument("unknown preconditioner '" + s + "' (expected none, jacobi or ilu0)");
}

/// Immutable, cheaply copyable handle. ILU factors are shared, not copied.
class Preconditioner {
public:
    Preconditioner() = default;

    static Preconditioner identity(std::size_t n) { return Preconditioner(n, IdentityP{}); }

    static Preconditioner jacobi(std::span<const double> diag)
    {
        Vector inv(diag.size());
        for (std::size_t i = 0; i < diag.size(); ++i) {
            if (!(std::abs(diag[i]) > 0.0) || !std::isfinite(diag[i]))
                throw PivotBreakdown(i, "jacobi: zero or non-finite diagonal in row " + std::to_string(i));
            inv[i] = 1.0 / diag[i];
        }
        return Preconditioner(diag.size(), JacobiP{std::move(inv)});
    }
    static Preconditioner jacobi(const CsrMatrix& A) { return jacobi(diagonal(A)); }

    static Preconditioner ilu0(std::shared_ptr<const Ilu0Factors> f)
    {
        if (!f)
            throw InvalidArgument("Preconditioner::ilu0: null factors");
        const std::size_t n = f->size();
        return Preconditioner(n, IluP{std::move(f)});
    }
    static Preconditioner ilu0(const CsrMatrix& A)
    {
        return ilu0(std::make_shared<const Ilu0Factors>(ilu0_factorize(A)));
    }

    PreconditionerKind kind() const noexcept
    {
        if (std::holds_alternative<JacobiP>(impl_))
            return PreconditionerKind::Jacobi;
        if (std::holds_alternative<IluP>(impl_))
            return PreconditionerKind::Ilu0;
        return PreconditionerKind::None;
    }

    std::size_t size() const noexcept { return n_; }

    /// An identity preconditioner built with the default constructor adapts to
    /// any size.
    Vector apply(std::span<const double> r) const
    {
        if (n_ != 0 || !std::holds_alternative<IdentityP>(impl_))
            require_size(r, n_, "Preconditioner::apply");
        if (const auto* j = std::get_if<JacobiP>(&impl_)) {
            Vector z(r.size());
            for (std::size_t i = 0; i < r.size(); ++i)
                z[i] = j->inv[i] * r[i];
            return z;
        }
        if (const auto* f = std::get_if<IluP>(&impl_))
            return ilu0_apply(*f->factors, r);
        return Vector(r.begin(), r.end());
    }

private:
    struct IdentityP {};
    struct JacobiP {
        Vector inv;
    };
    struct IluP {
        std::shared_ptr<const Ilu0Factors> factors;
    };

    Preconditioner(std::size_t n, std::variant<IdentityP, JacobiP, IluP> impl) : n_(n), impl_(std::move(impl)) {}

    std::size_t n_ = 0;
    std::variant<IdentityP, JacobiP, IluP> impl_;
};

/// Builds the requested preconditioner from an explicit matrix. ILU(0)
/// breakdown degrades to Jacobi and appends a warning when `warnings` is given;
/// without it the breakdown propagates.
inline Preconditioner make_preconditioner(PreconditionerKind kind, const CsrMatrix& A,
                                          std::vector<std::string>* warnings = nullptr)
{
    switch (kind) {
    case PreconditionerKind::None: return Preconditioner::identity(A.rows());
    case PreconditionerKind::Jacobi: return Preconditioner::jacobi(A);
    case PreconditionerKind::Ilu0:
        try {
            return Preconditioner::ilu0(A);
        } catch (const PivotBreakdown& e) {
            if (!warnings)
                throw;
            warnings->push_back(std::string("ILU(0) breakdown, falling back to Jacobi: ") + e.what());
            return Preconditioner::jacobi(A);
        }
    }
    throw InvalidArgument("make_preconditioner: unknown kind");
}

/// Assembles A + B U B^T + M explicitly. The product is formed only here,
/// because an incomplete factorization needs a pattern.
inline CsrMatrix augmented_sum(const CsrMatrix& A, const CsrMatrix& B, const CsrMatrix& U, const CsrMatrix& M)
{
    const CsrMatrix bubt = multiply(multiply(B, U), transpose(B));
    return add(1.0, add(1.0, A, 1.0, bubt), 1.0, M);
}

/// ILU(0) of A + B U B^T + M, usable for both A + B U B^T + cM and
/// A + B U B^T + M H H^T M.
inline Ilu0Factors build_augmented_preconditioner(const CsrMatrix& A, const CsrMatrix& B, const CsrMatrix& U,
                                                  const CsrMatrix& M)
{
    return ilu0_factorize(augmented_sum(A, B, U, M));
}

} // namespace derham
