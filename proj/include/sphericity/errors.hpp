#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sphericity {

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A design (N1, N2, p1, p2) that violates the monotone-sample constraints.
class InvalidDesign : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An improper integral whose panel contributions stop shrinking.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Adaptive quadrature or root finding hit its iteration cap.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. Row and column are 1-based; 0 means "not applicable".
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t column = 0)
        : std::runtime_error(format(what, row, column)), row_(row), column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, std::size_t row, std::size_t column) {
        std::string out = "row " + std::to_string(row);
        if (column != 0) out += ", column " + std::to_string(column);
        return out + ": " + what;
    }

    std::size_t row_;
    std::size_t column_;
};

}  // namespace sphericity
