#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "derham/errors.hpp"

namespace derham {

struct SmallEigen {
    std::vector<double> values;  // ascending
    std::vector<double> vectors; // row-major n x n, column j pairs with values[j]
};

/// Cyclic Jacobi rotations for the small dense Rayleigh-Ritz problems inside
/// the block eigensolver. Kept separate from the oracle's eigensolver so the
/// two can check each other.
inline SmallEigen jacobi_eigen(std::vector<double> a, std::size_t n)
{
    if (a.size() != n * n)
        throw DimensionError("jacobi_eigen: expected " + std::to_string(n * n) + " entries");
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        v[i * n + i] = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            a[i * n + j] = a[j * n + i] = 0.5 * (a[i * n + j] + a[j * n + i]);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0, total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                total += a[i * n + j] * a[i * n + j];
                if (i != j)
                    off += a[i * n + j] * a[i * n + j];
            }
        if (off <= 1e-32 * total || off == 0.0)
            break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0)
                    continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k * n + p], vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a[i * n + i] < a[j * n + j]; });
    SmallEigen out;
    out.values.resize(n);
    out.vectors.resize(n * n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a[order[j] * n + order[j]];
        for (std::size_t i = 0; i < n; ++i)
            out.vectors[i * n + j] = v[i * n + order[j]];
    }
    return out;
}

} // namespace derham
