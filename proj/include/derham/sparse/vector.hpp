#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "derham/errors.hpp"

namespace derham {

using Vector = std::vector<double>;

namespace blas {

inline double dot(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size())
        throw DimensionError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        s += x[i] * y[i];
    return s;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline double norm_inf(std::span<const double> x)
{
    double m = 0.0;
    for (double v : x)
        m = std::max(m, std::abs(v));
    return m;
}

/// y += a * x
inline void axpy(double a, std::span<const double> x, std::span<double> y)
{
    if (x.size() != y.size())
        throw DimensionError("axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] += a * x[i];
}

inline void scale(double a, std::span<double> x)
{
    for (double& v : x)
        v *= a;
}

/// a*x + b*y as a new vector.
inline Vector lincomb(double a, std::span<const double> x, double b, std::span<const double> y)
{
    if (x.size() != y.size())
        throw DimensionError("lincomb: length mismatch");
    Vector z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        z[i] = a * x[i] + b * y[i];
    return z;
}

inline Vector sub(std::span<const double> x, std::span<const double> y) { return lincomb(1.0, x, -1.0, y); }
inline Vector add(std::span<const double> x, std::span<const double> y) { return lincomb(1.0, x, 1.0, y); }

/// ||x - y|| / ||y||, with ||x - y|| returned when y vanishes.
inline double relative_diff(std::span<const double> x, std::span<const double> y)
{
    const double d = norm2(sub(x, y));
    const double ny = norm2(y);
    return ny > 0.0 ? d / ny : d;
}

} // namespace blas

inline bool all_finite(std::span<const double> x)
{
    for (double v : x)
        if (!std::isfinite(v))
            return false;
    return true;
}

inline void require_finite(std::span<const double> x, const std::string& what)
{
    if (!all_finite(x))
        throw InvalidArgument(what + ": non-finite entry");
}

inline void require_size(std::span<const double> x, std::size_t n, const std::string& what)
{
    if (x.size() != n)
        throw DimensionError(what + ": expected length " + std::to_string(n) + ", got " +
                             std::to_string(x.size()));
}

} // namespace derham
