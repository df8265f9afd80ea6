#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace derham {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed sparse structure: out-of-range index, broken CSR invariant.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// An iterative method produced non-finite values or failed to reach its tolerance.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Zero (or numerically zero) pivot during an incomplete factorization.
class PivotBreakdown : public Error {
public:
    PivotBreakdown(std::size_t row, const std::string& what)
        : Error(what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// The requested problem class is outside what the solvers can handle.
class UnsupportedCase : public Error {
public:
    using Error::Error;
};

/// Dense oracle refused an operand above its size cap.
class SizeCapError : public Error {
public:
    using Error::Error;
};

/// Input file could not be parsed; the message names the source and line.
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace derham
