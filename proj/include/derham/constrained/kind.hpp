#pragma once

#include <string>

#include "derham/errors.hpp"

namespace derham {

enum class ProblemKind {
    Dim0_General,
    Dim0_CPos,
    Dim0_CZero_TwoStage,
    Dim0_CZero_TwoAlpha,
    DimPos_CPos_Full,
    DimPos_CPos_Light,
};

inline const char* to_string(ProblemKind k)
{
    switch (k) {
    case ProblemKind::Dim0_General: return "dim0-general";
    case ProblemKind::Dim0_CPos: return "dim0-cpos";
    case ProblemKind::Dim0_CZero_TwoStage: return "dim0-czero-twostage";
    case ProblemKind::Dim0_CZero_TwoAlpha: return "dim0-czero-twoalpha";
    case ProblemKind::DimPos_CPos_Full: return "dimpos-cpos-full";
    case ProblemKind::DimPos_CPos_Light: return "dimpos-cpos-light";
    }
    return "?";
}

inline ProblemKind parse_problem_kind(const std::string& s)
{
    for (ProblemKind k : {ProblemKind::Dim0_General, ProblemKind::Dim0_CPos, ProblemKind::Dim0_CZero_TwoStage,
                          ProblemKind::Dim0_CZero_TwoAlpha, ProblemKind::DimPos_CPos_Full,
                          ProblemKind::DimPos_CPos_Light})
        if (s == to_string(k))
            return k;
    throw InvalidArgument("unknown problem kind '" + s + "'");
}

inline constexpr const char* no_unique_solution_message =
    "dim C0 > 0 with c = 0: no solution or no unique solution";

inline ProblemKind auto_select_kind(std::size_t dim_c0, double c)
{
    if (dim_c0 == 0)
        return c > 0.0 ? ProblemKind::Dim0_CPos : ProblemKind::Dim0_CZero_TwoStage;
    if (c > 0.0)
        return ProblemKind::DimPos_CPos_Full;
    throw UnsupportedCase(no_unique_solution_message);
}

inline void check_admissible(ProblemKind k, std::size_t dim_c0, double c)
{
    if (dim_c0 > 0 && c == 0.0)
        throw UnsupportedCase(no_unique_solution_message);
    const std::string name = to_string(k);
    switch (k) {
    case ProblemKind::Dim0_General:
        if (dim_c0 != 0)
            throw InvalidArgument(name + " requires dim C0 = 0");
        break;
    case ProblemKind::Dim0_CPos:
        if (dim_c0 != 0 || !(c > 0.0))
            throw InvalidArgument(name + " requires dim C0 = 0 and c > 0");
        break;
    case ProblemKind::Dim0_CZero_TwoStage:
    case ProblemKind::Dim0_CZero_TwoAlpha:
        if (dim_c0 != 0 || c != 0.0)
            throw InvalidArgument(name + " requires dim C0 = 0 and c = 0");
        break;
    case ProblemKind::DimPos_CPos_Full:
    case ProblemKind::DimPos_CPos_Light:
        if (dim_c0 == 0 || !(c > 0.0))
            throw InvalidArgument(name + " requires dim C0 > 0 and c > 0");
        break;
    }
}

} // namespace derham
