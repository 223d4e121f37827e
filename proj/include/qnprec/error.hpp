/// @file error.hpp
/// @brief Exception types thrown by qnprec.

#ifndef QNPREC_ERROR_HPP
#define QNPREC_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qnprec {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand sizes do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Matrix Market (or config) input could not be parsed.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Incomplete Cholesky met a nonpositive pivot.
class PivotBreakdown : public Error {
public:
    PivotBreakdown(std::size_t column, double pivot)
        : Error("incomplete Cholesky breakdown at column " + std::to_string(column) +
                " (pivot " + std::to_string(pivot) + ")"),
          column_(column), pivot_(pivot) {}

    std::size_t column() const { return column_; }
    double pivot() const { return pivot_; }

private:
    std::size_t column_;
    double pivot_;
};

/// A dense factorization or operator turned out singular or indefinite.
class BreakdownError : public Error {
public:
    using Error::Error;
};

/// Non-finite values appeared during a nonlinear evaluation.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Request exceeds a configured size limit (dense verification paths).
class SizeLimitError : public Error {
public:
    using Error::Error;
};

} // namespace qnprec

#endif // QNPREC_ERROR_HPP
