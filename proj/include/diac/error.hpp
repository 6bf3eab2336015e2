#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace diac {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
        : Error(format(what, line, column)), line_(line), column_(column) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, std::size_t line, std::size_t column) {
        if (line == 0) return what;
        std::string s = "line " + std::to_string(line);
        if (column != 0) s += ", column " + std::to_string(column);
        return s + ": " + what;
    }

    std::size_t line_;
    std::size_t column_;
};

/// Structural problem in a circuit or cluster graph (undriven signal, cycle, ...).
class GraphError : public Error {
public:
    using Error::Error;
};

/// No assignment satisfies the requested energy bound.
class InfeasibleError : public Error {
public:
    InfeasibleError(const std::string& what, std::string offender)
        : Error(what), offender_(std::move(offender)) {}

    [[nodiscard]] const std::string& offender() const noexcept { return offender_; }

private:
    std::string offender_;
};

}  // namespace diac
