#pragma once

#include <cstdint>
#include <random>

#include "derham/sparse/vector.hpp"

namespace derham {

/// Seeded uniform [-1, 1) source. The mapping from engine bits to doubles is
/// spelled out here (not left to std::uniform_real_distribution) so that a
/// seed yields the same sequence on every standard library.
class UniformSource {
public:
    explicit UniformSource(std::uint64_t seed) : engine_(seed) {}

    double next()
    {
        const std::uint64_t bits = engine_() >> 11;
        const double unit = static_cast<double>(bits) * 0x1.0p-53;
        return 2.0 * unit - 1.0;
    }

    Vector vector(std::size_t n)
    {
        Vector v(n);
        for (double& x : v)
            x = next();
        return v;
    }

private:
    std::mt19937_64 engine_;
};

inline Vector random_vector(std::size_t n, std::uint64_t seed) { return UniformSource(seed).vector(n); }

} // namespace derham
