#pragma once

#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "derham/constrained/system.hpp"
#include "derham/precond/preconditioner.hpp"

namespace derham {

/// Preconditioners for the operators a + b B U B^T + m M that the equivalent
/// problems use, built on first request and shared afterwards: one
/// factorization per distinct operator. Not thread-safe.
class SystemPreconditioners {
public:
    SystemPreconditioners(const ConstrainedSystem& sys, PreconditionerKind kind) : sys_(sys), kind_(kind) {}

    PreconditionerKind kind() const noexcept { return kind_; }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    std::size_t factorizations() const noexcept { return cache_.size(); }

    /// Preconditioner for A + b B U B^T + m M.
    Preconditioner get(double b, double m)
    {
        char key[96];
        std::snprintf(key, sizeof key, "%.17g|%.17g", b, m);
        const auto it = cache_.find(key);
        if (it != cache_.end())
            return it->second;
        Preconditioner p;
        if (kind_ == PreconditionerKind::None) {
            p = Preconditioner::identity(sys_.n());
        } else {
            CsrMatrix S = *sys_.A;
            if (b != 0.0)
                S = add(1.0, S, b, bubt());
            if (m != 0.0)
                S = add(1.0, S, m, *sys_.M);
            p = make_preconditioner(kind_, S, &warnings_);
        }
        cache_.emplace(key, p);
        return p;
    }

    /// A + B U B^T + M, used for every operator carrying the low-rank term.
    Preconditioner augmented() { return get(1.0, 1.0); }

private:
    const CsrMatrix& bubt()
    {
        if (!bubt_)
            bubt_ = std::make_shared<const CsrMatrix>(multiply(multiply(*sys_.B, *sys_.U), transpose(*sys_.B)));
        return *bubt_;
    }

    const ConstrainedSystem& sys_;
    PreconditionerKind kind_;
    std::shared_ptr<const CsrMatrix> bubt_;
    std::map<std::string, Preconditioner> cache_;
    std::vector<std::string> warnings_;
};

} // namespace derham
