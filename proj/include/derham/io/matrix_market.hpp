#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "derham/errors.hpp"
#include "derham/sparse/csr_matrix.hpp"

namespace derham::io {

namespace detail {

inline std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline bool blank(const std::string& line)
{
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

} // namespace detail

/// Coordinate real Matrix Market. With `symmetric`, only the lower triangle is
/// written under a `symmetric` header; the caller vouches for symmetry.
inline void write_matrix_market(std::ostream& os, const CsrMatrix& A, bool symmetric = false)
{
    if (symmetric && A.rows() != A.cols())
        throw DimensionError("write_matrix_market: symmetric output needs a square matrix");
    std::size_t count = 0;
    for (const auto& t : A.to_triplets())
        if (!symmetric || t.col <= t.row)
            ++count;
    os << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general") << "\n";
    os << A.rows() << " " << A.cols() << " " << count << "\n";
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& t : A.to_triplets())
        if (!symmetric || t.col <= t.row)
            os << t.row + 1 << " " << t.col + 1 << " " << t.value << "\n";
}

inline CsrMatrix read_matrix_market(std::istream& is, const std::string& source = "<stream>")
{
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(is, line))
        throw ParseError(source, 1, "empty input");
    ++lineno;
    std::istringstream header(detail::lower(line));
    std::string banner, object, format, field, symmetry;
    header >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%matrixmarket" || object != "matrix")
        throw ParseError(source, lineno, "missing %%MatrixMarket matrix banner");
    if (format != "coordinate")
        throw ParseError(source, lineno, "only coordinate format is supported");
    if (field != "real" && field != "integer" && field != "double")
        throw ParseError(source, lineno, "unsupported field '" + field + "'");
    const bool symmetric = symmetry == "symmetric";
    if (!symmetric && symmetry != "general")
        throw ParseError(source, lineno, "unsupported symmetry '" + symmetry + "'");

    do {
        if (!std::getline(is, line))
            throw ParseError(source, lineno + 1, "missing size line");
        ++lineno;
    } while (!line.empty() && (line[0] == '%' || detail::blank(line)));

    std::size_t nrows = 0, ncols = 0, nnz = 0;
    {
        std::istringstream ss(line);
        if (!(ss >> nrows >> ncols >> nnz))
            throw ParseError(source, lineno, "malformed size line");
    }
    std::vector<Triplet> triplets;
    triplets.reserve(symmetric ? 2 * nnz : nnz);
    std::size_t seen = 0;
    while (seen < nnz && std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '%' || detail::blank(line))
            continue;
        std::istringstream ss(line);
        long long i = 0, j = 0;
        double v = 0.0;
        if (!(ss >> i >> j >> v))
            throw ParseError(source, lineno, "malformed entry");
        if (i < 1 || j < 1 || static_cast<std::size_t>(i) > nrows || static_cast<std::size_t>(j) > ncols)
            throw ParseError(source, lineno, "index out of range");
        const auto r = static_cast<std::size_t>(i - 1), c = static_cast<std::size_t>(j - 1);
        triplets.push_back({r, c, v});
        if (symmetric && r != c)
            triplets.push_back({c, r, v});
        ++seen;
    }
    if (seen != nnz)
        throw ParseError(source, lineno, "expected " + std::to_string(nnz) + " entries, found " + std::to_string(seen));
    return CsrMatrix::from_triplets(triplets, nrows, ncols);
}

/// One value per line, full round-trip precision.
inline void write_vector(std::ostream& os, std::span<const double> v)
{
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (double x : v)
        os << x << "\n";
}

/// Whitespace-separated values.
inline Vector read_vector(std::istream& is, const std::string& source = "<stream>")
{
    Vector out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok.size())
                throw ParseError(source, lineno, "not a number: '" + tok + "'");
            out.push_back(v);
        }
    }
    return out;
}

inline void save_matrix_market(const std::string& path, const CsrMatrix& A, bool symmetric = false)
{
    std::ofstream os(path);
    if (!os)
        throw Error("cannot open " + path + " for writing");
    write_matrix_market(os, A, symmetric);
}

inline CsrMatrix load_matrix_market(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw Error("cannot open " + path);
    return read_matrix_market(is, path);
}

inline void save_vector(const std::string& path, std::span<const double> v)
{
    std::ofstream os(path);
    if (!os)
        throw Error("cannot open " + path + " for writing");
    write_vector(os, v);
}

inline Vector load_vector(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw Error("cannot open " + path);
    return read_vector(is, path);
}

} // namespace derham::io
