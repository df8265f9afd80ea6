#pragma once

#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace derham {

/// Relative residual per iteration; entry 0 is the starting residual.
struct IterationTrace {
    std::vector<double> residuals;

    std::size_t size() const noexcept { return residuals.size(); }
    bool empty() const noexcept { return residuals.empty(); }
    double last() const { return residuals.empty() ? 0.0 : residuals.back(); }
    void push(double r) { residuals.push_back(r); }
};

inline void write_trace_csv(std::ostream& os, const IterationTrace& t)
{
    os << "iter,residual\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < t.residuals.size(); ++i)
        os << i << "," << t.residuals[i] << "\n";
}

inline void write_trace_csv(std::ostream& os, const std::string& stage, const IterationTrace& t)
{
    os << "stage,iter,residual\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < t.residuals.size(); ++i)
        os << stage << "," << i << "," << t.residuals[i] << "\n";
}

} // namespace derham
